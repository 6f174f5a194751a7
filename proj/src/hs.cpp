#include "hsg/hs.hpp"
#include "hsg/lie.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace hsg {

namespace {

Form d_(const Form& f) { return differential(Part::del, f); }
Form db_(const Form& f) { return differential(Part::dbar, f); }

GreenOptions tight() {
  GreenOptions o;
  o.rel_tol = 1e-11;
  return o;
}

Form solve(const Metric& g, Laplacian k, const Form& b) { return green_solve(g, k, b, tight()).x; }

double top_integral(const Form& f) { return integrate_top(f).real(); }

// Top-degree density of an (n,n)-form against dV0, per point.
Eigen::VectorXd top_density(const Form& f) {
  const cplx dv0 = f.model->basis().dv0_coefficient();
  return (f.c.col(0) / dv0).real();
}

double max_overlap(const Metric& g, const Form& a, const std::vector<Form>& basis) {
  double m = 0.0;
  for (const auto& h : basis) m = std::max(m, std::abs(inner(g, a, h)));
  return m;
}

struct RhoSolution {
  Form rho;
  TorsionResiduals res;
};

RhoSolution compute_rho(const Metric& g, TorsionMode mode, bool minimality = true) {
  const Form& w = g.omega();
  Form dw = d_(w);
  RhoSolution out;
  if (mode == TorsionMode::hs_min) {
    Form rhs = adjoint_diff(g, Part::dbar, dw) +
               adjoint_diff(g, Part::dbar, d_(adjoint_diff(g, Part::del, dw)));
    out.rho = -solve(g, Laplacian::bc, rhs);
  } else {
    out.rho = -solve(g, Laplacian::dbar, adjoint_diff(g, Part::dbar, dw));
  }
  out.res.del_rho = norm(g, d_(out.rho));
  out.res.dbar_rho_plus_del_omega = norm(g, db_(out.rho) + dw);
  if (minimality) {
    const Laplacian forbidden = mode == TorsionMode::skt ? Laplacian::dbar : Laplacian::bc;
    out.res.minimality = max_overlap(g, out.rho, harmonic_basis(g, forbidden, 2, 0));
  }
  return out;
}

void require_dim3(const Metric& g) {
  if (g.n() != 3) throw Error("InvalidInput", "this computation is implemented for complex dimension 3");
}

}  // namespace

double default_tolerance(const Model& m) { return m.algebraic() ? 1e-9 : 1e-8; }

const char* to_string(TorsionMode m) {
  switch (m) {
    case TorsionMode::hs_min: return "hs_min";
    case TorsionMode::dim3: return "dim3";
    case TorsionMode::skt: return "skt";
  }
  return "?";
}

double volume(const Metric& g) { return g.volume_density().mean(); }

bool in_dbar_image(const Metric& g, const Form& f, double tol, double* residual) {
  double r = norm(g, db_(f));
  r = std::max(r, norm(g, harmonic_project(g, Laplacian::dbar, f)));
  if (residual) *residual = r;
  return r < tol;
}

namespace {

TorsionReport torsion_impl(const Metric& g, TorsionMode mode, bool minimality) {
  require_dim3(g);
  const ModelPtr& m = g.model();
  const double tol = default_tolerance(*m);
  const Form& w = g.omega();
  const double scale = std::max(1.0, norm(g, d_(w)));

  if (mode == TorsionMode::skt) {
    const double r = norm(g, d_(db_(w)));
    if (r > tol) {
      std::ostringstream msg;
      msg << "del delbar omega has norm " << r;
      throw Error("NotSKT", msg.str());
    }
  }
  if (mode != TorsionMode::skt && m->algebraic()) {
    Feasibility f = hs_feasibility(w, tol);
    if (!f.feasible) {
      std::ostringstream msg;
      msg << "no (2,0)-form solves the Hermitian-symplectic system; least-squares residual " << f.residual;
      throw Error("NotFeasible", msg.str());
    }
  }
  RhoSolution s = compute_rho(g, mode, minimality);
  double bad = s.res.dbar_rho_plus_del_omega;
  if (mode != TorsionMode::skt) bad = std::max(bad, s.res.del_rho);
  if (bad > tol * scale) {
    std::ostringstream msg;
    msg << "torsion equations not solvable: residual " << bad;
    throw Error("NotFeasible", msg.str());
  }
  TorsionReport t;
  t.mode = mode;
  t.rho20 = s.rho;
  t.rho02 = conjugate(s.rho);
  t.residuals = s.res;
  t.tolerance = tol;
  return t;
}

void fill_energy(const Metric& g, TorsionReport& t) {
  const Form& w = g.omega();
  const Eigen::VectorXd r2 = pointwise_norm2(g, t.rho20);
  const Eigen::VectorXd& vol = g.volume_density();
  t.F = r2.cwiseProduct(vol).mean();
  t.F_wedge = top_integral(wedge(wedge(t.rho20, t.rho02), w));
  if (std::abs(t.F - t.F_wedge) > 1e-9 * std::max(1.0, t.F)) {
    std::ostringstream msg;
    msg << "F by pointwise norms " << t.F << " differs from the wedge formula " << t.F_wedge;
    throw Error("InconsistentEnergy", msg.str());
  }
  t.vol = volume(g);
  t.A = t.F + t.vol;
  t.tilde_mass = (Eigen::VectorXd::Ones(vol.size()) + r2).cwiseProduct(vol).mean();
}

}  // namespace

TorsionReport torsion_form(const Metric& g, TorsionMode mode) { return torsion_impl(g, mode, true); }

TorsionReport torsion_energy(const Metric& g, TorsionMode mode) {
  TorsionReport t = torsion_impl(g, mode, false);
  fill_energy(g, t);
  return t;
}

Form torsion_least_squares(const Metric& g) {
  require_dim3(g);
  const ModelPtr& m = g.model();
  const Form& w = g.omega();
  Mat Rs = orthonormalizer(g, 2, 0);
  Mat Rs_inv = Rs.inverse();
  Mat Dd = dense_operator(m, 2, 0, d_);
  Mat Db = dense_operator(m, 2, 0, db_);
  Mat A(Dd.rows() + Db.rows(), Rs.rows());
  A.topRows(Dd.rows()) = Dd * Rs_inv;
  A.bottomRows(Db.rows()) = Db * Rs_inv;
  Vec rhs = Vec::Zero(A.rows());
  rhs.tail(Db.rows()) = -d_(w).flat();
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
  cod.setThreshold(1e-10);
  Vec y = cod.solve(rhs);
  return Form::from_flat(m, 2, 0, Rs_inv * y);
}

TorsionReport energy_and_volume(const Metric& g, TorsionMode mode) {
  TorsionReport t = torsion_form(g, mode);
  fill_energy(g, t);
  const double tol = t.tolerance;

  const double scale = std::max(1.0, norm(g, t.rho02));
  t.torsion_class_zero = in_dbar_image(g, t.rho02, tol * scale);
  Form dbs_rho = adjoint_diff(g, Part::dbar, t.rho02);
  if (t.torsion_class_zero) {
    t.xi01 = solve(g, Laplacian::dbar, dbs_rho);
    const double n1 = norm(g, dbs_rho);
    t.G = n1 * n1;
    t.G_via_laplacian = inner(g, laplacian(g, Laplacian::dbar, t.rho02), t.rho02).real();
    const double n2 = norm(g, laplacian(g, Laplacian::dbar, t.xi01));
    t.G_via_xi = n2 * n2;
    t.xi_residual = norm(g, db_(t.xi01) - t.rho02);
    const bool rho_zero = norm(g, t.rho02) < tol;
    const bool dbs_zero = n1 < tol;
    t.zero_equivalence_holds = rho_zero == dbs_zero;
  }
  if (g.model()->algebraic())
    t.max_tilde_harmonic_overlap = max_overlap(g, t.rho02, harmonic_basis(g, Laplacian::tilde, 0, 2));
  return t;
}

Lefschetz lefschetz_alpha(const Metric& g) {
  require_dim3(g);
  const Form& w = g.omega();
  Form dw = d_(w);
  Lefschetz L;
  L.alpha = 0.5 * contraction(g, dw);
  Form aw = wedge(L.alpha, w);
  L.prim = dw - aw;
  L.prim_contraction = pointwise_norm2(g, contraction(g, L.prim)).cwiseSqrt().maxCoeff();
  const Eigen::VectorXd na = pointwise_norm2(g, aw), np = pointwise_norm2(g, L.prim);
  L.sign_field = na - np;
  const Eigen::VectorXd& vol = g.volume_density();
  Eigen::VectorXd lhs = top_density(I * wedge(dw, db_(w)));
  L.identity_residual = (lhs - L.sign_field.cwiseProduct(vol)).cwiseAbs().maxCoeff();
  L.integral_alpha = na.cwiseProduct(vol).mean();
  L.integral_prim = np.cwiseProduct(vol).mean();
  return L;
}

Classification classify_metric(const Metric& g) {
  require_dim3(g);
  const ModelPtr& m = g.model();
  const double tol = default_tolerance(*m);
  const Form& w = g.omega();
  Form w2 = power(w, 2);
  Classification c;
  c.tolerance = tol;
  auto both = [&](const Form& a, const Form& b) {
    const double x = norm(g, a), y = norm(g, b);
    return std::sqrt(x * x + y * y);
  };
  Form dw = d_(w);
  c.residuals.d_omega = both(dw, db_(w));
  c.residuals.ddbar_omega = norm(g, d_(db_(w)));
  c.residuals.ddbar_omega2 = norm(g, d_(db_(w2)));
  c.residuals.d_omega2 = both(d_(w2), db_(w2));
  in_dbar_image(g, d_(w2), tol, &c.residuals.sg);
  if (m->algebraic()) {
    c.residuals.hs = hs_feasibility(w, tol).residual;
  } else {
    RhoSolution s = compute_rho(g, TorsionMode::dim3);
    c.residuals.hs = std::max(s.res.dbar_rho_plus_del_omega, s.res.del_rho);
  }
  const double hs_scale = std::max(1.0, norm(g, dw));
  c.kahler = c.residuals.d_omega < tol;
  c.skt = c.residuals.ddbar_omega < tol;
  c.gauduchon = c.residuals.ddbar_omega2 < tol;
  c.balanced = c.residuals.d_omega2 < tol;
  c.strongly_gauduchon = c.residuals.sg < tol;
  c.hs_feasible = c.residuals.hs < tol * hs_scale;

  Lefschetz L = lefschetz_alpha(g);
  c.sign_field = L.sign_field;
  for (Eigen::Index x = 0; x < c.sign_field.size(); ++x) {
    if (c.sign_field[x] < -tol)
      c.U.push_back(x);
    else if (c.sign_field[x] > tol)
      c.V.push_back(x);
    else
      c.Z.push_back(x);
  }
  if (c.skt) c.sign_partition_consistent = c.gauduchon == (c.U.empty() && c.V.empty());
  return c;
}

Form square_root(const Form& Omega) {
  const ModelPtr& m = Omega.model;
  const int n = m->n;
  if (n != 3 || Omega.p != 2 || Omega.q != 2) throw Error("InvalidInput", "square_root takes a (2,2)-form in dimension 3");
  const Eigen::Index P = Omega.points();
  std::vector<Mat> M(P, Mat::Zero(n, n));
  Form half = 0.5 * Omega;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      Form e = (0.5 * I) * Form::basis_element(m, 1, 1, j * n + k);
      Eigen::VectorXcd dens = wedge(e, half).c.col(0) / m->basis().dv0_coefficient();
      for (Eigen::Index x = 0; x < P; ++x) M[x](k, j) = dens[x];
    }
  std::vector<Mat> G(P);
  for (Eigen::Index x = 0; x < P; ++x) {
    Mat Mx = 0.5 * (M[x] + M[x].adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> es(Mx);
    const double lo = es.eigenvalues().minCoeff();
    if (!(lo > 0.0)) {
      std::ostringstream msg;
      msg << "the (2,2)-form is not positive at point " << x << " (eigenvalue " << lo << ")";
      throw Error("RootFailure", msg.str());
    }
    const double det = es.eigenvalues().prod();
    G[x] = std::sqrt(det) * Mx.inverse();
  }
  return form_from_hermitian(m, G);
}

Completion sg_and_completion(const Metric& g, const TorsionReport& t) {
  require_dim3(g);
  const Form& w = g.omega();
  const double tol = default_tolerance(*g.model());
  Completion c;
  c.Omega = power(w, 2) + 2.0 * wedge(t.rho20, t.rho02);
  c.gamma = square_root(c.Omega);
  c.root_residual = coeff_norm(power(c.gamma, 2) - c.Omega);
  c.gamma_sg = in_dbar_image(g, d_(power(c.gamma, 2)), tol);
  c.omega_identity_residual = top_integral(wedge(c.Omega, w)) / 6.0 - (2.0 / 3.0) * t.vol - t.A / 3.0;
  c.dbar_Omega_residual = norm(g, db_(c.Omega) + 2.0 * d_(wedge(t.rho02, w)));
  c.tilde_omega.add(t.rho20).add(w).add(t.rho02);
  MixedForm dt = d_total(c.tilde_omega);
  double s = 0.0;
  for (const auto& part : dt.parts) s += std::pow(norm(g, part), 2);
  c.d_tilde_residual = std::sqrt(s);
  MixedForm cube = wedge(wedge(c.tilde_omega, c.tilde_omega), c.tilde_omega);
  c.tilde_volume = top_integral(cube.component(g.model(), 3, 3)) / 6.0;
  c.tilde_volume_residual = std::abs(c.tilde_volume - t.A);
  return c;
}

PerturbReport aeppli_perturb(const Metric& g, const Form& u, TorsionMode mode) {
  if (u.p != 1 || u.q != 0) throw Error("BidegreeError", "Aeppli perturbations take a (1,0)-form");
  Form du = db_(u);
  PerturbReport r;
  r.metric = Metric::create(g.omega() + du + conjugate(du));
  TorsionReport a = energy_and_volume(g, mode);
  TorsionReport b = energy_and_volume(*r.metric, mode);
  r.A_before = a.A;
  r.A_after = b.A;
  r.A_change = std::abs(b.A - a.A);
  r.rho_transport = norm(*r.metric, b.rho20 - (a.rho20 + d_(u)));
  if (norm(g, d_(u)) < default_tolerance(*g.model())) {
    const double lhs = pointwise_norm2(*r.metric, a.rho20).cwiseProduct(r.metric->volume_density()).mean();
    const double rhs = a.F + top_integral(wedge(wedge(a.rho20, a.rho02), r.metric->omega() - g.omega()));
    r.closed_case_residual = std::abs(lhs - rhs);
  }
  return r;
}

Form i_ddbar(const ModelPtr& m, const Eigen::VectorXd& phi) {
  Form f = Form::zero(m, 0, 0);
  if (phi.size() != f.points()) throw Error("InvalidInput", "function has the wrong number of samples");
  f.c.col(0) = phi.cast<cplx>();
  return I * d_(db_(f));
}

double volume_variation_bc(const Metric& g, const Eigen::VectorXd& phi) {
  const Form& w = g.omega();
  Form top = I * wedge(d_(w), db_(w));
  return top_integral(scale_pointwise(phi.cast<cplx>(), top));
}

BCPerturbReport ddbar_perturb(const Metric& g, const Eigen::VectorXd& phi) {
  Form dd = i_ddbar(g.model(), phi);
  BCPerturbReport r;
  r.metric = Metric::create(g.omega() + dd);
  TorsionReport a = energy_and_volume(g);
  TorsionReport b = energy_and_volume(*r.metric);
  r.rho_coincidence = norm(*r.metric, b.rho20 - a.rho20);
  const double lhs = pointwise_norm2(*r.metric, a.rho20).cwiseProduct(r.metric->volume_density()).mean();
  const double rhs = a.F - 0.5 * top_integral(wedge(dd, power(g.omega(), 2)));
  r.l2_relation = std::abs(lhs - rhs);
  r.vol_change = b.vol - a.vol;
  r.vol_first_order = volume_variation_bc(g, phi);
  return r;
}

FirstVariation first_variation(const Metric& g, const Form& u) {
  require_dim3(g);
  const Form& w = g.omega();
  Form du = db_(u);
  Form gamma = du + conjugate(du);
  FirstVariation v;
  v.dF = -2.0 * inner(g, u, adjoint_diff(g, Part::dbar, w)).real();
  v.dVol = 0.5 * top_integral(wedge(power(w, 2), gamma));
  v.dA = v.dF + v.dVol;
  return v;
}

std::pair<double, double> gauduchon_stratum_check(const Metric& g, const Eigen::VectorXd& phi) {
  const Form& w = g.omega();
  Form w2 = w + i_ddbar(g.model(), phi);
  const double dv = std::abs(top_integral(power(w2, 3)) - top_integral(power(w, 3)));
  return {dv, norm(g, d_(db_(power(w2, 2))))};
}

MACoefficients ma_constants(const Metric& omega, const Metric& gamma, double A) {
  require_same_model(omega.omega(), gamma.omega());
  const Form& w = omega.omega();
  const Form& gm = gamma.omega();
  MACoefficients r;
  const double I1 = top_integral(wedge(w, power(gm, 2))) / 2.0;
  const double Vg = volume(gamma);
  const double Vw = volume(omega);
  r.c = 6.0 * A * Vg * Vg / (I1 * I1 * I1);
  r.f_normaliser = contraction(gamma, w).c.col(0).real();
  const Eigen::VectorXd& volg = gamma.volume_density();
  const double cube = r.f_normaliser.array().cube().matrix().cwiseProduct(volg).mean();
  r.c_min = 6.0 * A / cube;
  r.conformal_gap = cube - 6.0 * A / r.c;
  Eigen::VectorXd ratio = omega.volume_density().cwiseQuotient(volg).unaryExpr([](double v) { return std::cbrt(v); });
  const double lhs = ratio.cwiseProduct(volg).mean();
  const double rhs = std::cbrt(Vw) * std::pow(Vg, 2.0 / 3.0);
  r.holder_gap = rhs - lhs;
  r.b_lower = Vw / A;
  return r;
}

Form omega_normalised(const Metric& omega, const Metric& gamma) {
  Eigen::VectorXcd f = contraction(gamma, omega.omega()).c.col(0);
  return scale_pointwise(f.real().cast<cplx>(), gamma.omega());
}

HoloAudit holo_oneform_audit(const Metric& g) {
  require_dim3(g);
  const ModelPtr& m = g.model();
  std::vector<Form> closed;
  if (m->algebraic()) {
    Mat Db = m->dmat_dbar[m->slot(1, 0)];
    Eigen::FullPivLU<Mat> lu(Db);
    lu.setThreshold(1e-12);
    Mat K = lu.kernel();
    if (lu.rank() == 0) K = Mat::Identity(Db.cols(), Db.cols());
    for (Eigen::Index j = 0; j < K.cols(); ++j) closed.push_back(Form::from_flat(m, 1, 0, K.col(j)));
    closed = orthonormalize(g, closed);
  } else {
    // dbar* vanishes on (1,0), so ker dbar is the dbar-harmonic space.
    closed = harmonic_basis(g, Laplacian::dbar, 1, 0);
  }
  HoloAudit a;
  a.tested = int(closed.size());
  for (const auto& xi : closed) a.max_del = std::max(a.max_del, norm(g, d_(xi)));
  a.passes = a.max_del < default_tolerance(*m);
  return a;
}

}  // namespace hsg
