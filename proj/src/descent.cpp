#include "hsg/descent.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace hsg {

namespace {

double d_norm(const Metric& g) {
  const double a = norm(g, differential(Part::del, g.omega()));
  const double b = norm(g, differential(Part::dbar, g.omega()));
  return std::sqrt(a * a + b * b);
}

std::string dump(const DescentIterate& it, double t) {
  std::ostringstream os;
  os << std::setprecision(12) << "k=" << it.k << " F=" << it.F << " Vol=" << it.vol << " A=" << it.A
     << " |dbar* omega|=" << it.dbar_star_omega << " t=" << t;
  return os.str();
}

}  // namespace

double positivity_limit(const Metric& g, const Form& gamma) {
  const auto Hg = hermitian_matrices(gamma);
  const auto& Hw = g.H();
  double tmax = std::numeric_limits<double>::infinity();
  for (size_t x = 0; x < Hw.size(); ++x) {
    Eigen::LLT<Mat> llt(Hw[x]);
    Mat Linv = llt.matrixL().solve(Mat::Identity(Hw[x].rows(), Hw[x].cols()));
    Mat M = Linv * Hg[x] * Linv.adjoint();
    M = 0.5 * (M + M.adjoint());
    const double lo = Eigen::SelfAdjointEigenSolver<Mat>(M, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (lo < 0) tmax = std::min(tmax, -1.0 / lo);
  }
  return tmax;
}

DescentTrace descend(const Metric& g0, const DescentOptions& opt) {
  DescentTrace trace;
  MetricPtr g = Metric::create(g0.omega());
  TorsionReport rep = torsion_energy(*g, opt.mode);
  for (int k = 0;; ++k) {
    DescentIterate it;
    it.k = k;
    it.F = rep.F;
    it.vol = rep.vol;
    it.A = rep.A;
    Form u = adjoint_diff(*g, Part::dbar, g->omega());
    const double nb = norm(*g, u);
    it.dbar_star_omega = nb;
    it.d_omega = d_norm(*g);
    it.dF = -2.0 * nb * nb;
    if (nb < opt.tol || k >= opt.max_iters) {
      trace.iterates.push_back(it);
      trace.termination = nb < opt.tol ? "converged" : "max_iters";
      break;
    }
    Form du = differential(Part::dbar, u);
    Form gamma = du + conjugate(du);
    it.max_step = positivity_limit(*g, gamma);
    double t = std::min(1.0 / (1.0 + nb), opt.safety * it.max_step);
    if (t < opt.min_step) {
      trace.iterates.push_back(it);
      trace.final_metric = g;
      throw DescentError("PositivityBoundary", "feasible step below the minimum: " + dump(it, t), trace);
    }
    for (;;) {
      MetricPtr cand = Metric::create(g->omega() + t * gamma);
      TorsionReport r = torsion_energy(*cand, opt.mode);
      if (r.F <= it.F + opt.c1 * t * it.dF) {
        it.step = t;
        it.secant_slope = (r.F - it.F) / t;
        if (opt.slope_check) {
          const double h = 1e-3 * t;
          const double fp = torsion_energy(*Metric::create(g->omega() + h * gamma), opt.mode).F;
          const double fm = torsion_energy(*Metric::create(g->omega() - h * gamma), opt.mode).F;
          it.probe_slope = (fp - fm) / (2 * h);
        }
        g = cand;
        rep = r;
        break;
      }
      t *= opt.backtrack;
      if (t < opt.min_step) {
        trace.iterates.push_back(it);
        trace.final_metric = g;
        throw DescentError("LineSearchStalled", "no Armijo step found: " + dump(it, t), trace);
      }
    }
    trace.iterates.push_back(it);
  }
  trace.final_metric = g;
  return trace;
}

CriticalCertificate certify_critical(const Metric& g, double tol) {
  CriticalCertificate c;
  c.balanced_defect = norm(g, adjoint_diff(g, Part::dbar, g.omega()));
  c.skt_residual = norm(g, differential(Part::del, differential(Part::dbar, g.omega())));
  c.kahler_defect = d_norm(g);
  c.kahler_bound = std::sqrt(2.0) * tol + default_tolerance(*g.model());
  c.critical = c.balanced_defect < tol;
  c.kahler = c.critical && c.kahler_defect <= c.kahler_bound;
  return c;
}

void write_trace_csv(std::ostream& os, const DescentTrace& t) {
  os << "k,F,vol,A,dbar_star_omega,d_omega,dF,step,secant_slope,probe_slope,max_step\n";
  os << std::setprecision(17);
  for (const auto& it : t.iterates)
    os << it.k << ',' << it.F << ',' << it.vol << ',' << it.A << ',' << it.dbar_star_omega << ',' << it.d_omega
       << ',' << it.dF << ',' << it.step << ',' << it.secant_slope << ',' << it.probe_slope << ',' << it.max_step << '\n';
}

}  // namespace hsg
