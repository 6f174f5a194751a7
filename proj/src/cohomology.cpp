#include "hsg/cohomology.hpp"
#include "hsg/hs.hpp"
#include "hsg/lie.hpp"

#include <Eigen/SVD>

#include <random>
#include <sstream>

namespace hsg {

namespace {

constexpr double kRankTol = 1e-10;

// Bidegree-aware access to the differential matrices, with empty blocks
// outside the valid range.
struct Complex {
  const Model& m;
  int n;

  explicit Complex(const Model& model) : m(model), n(model.n) {
    if (!model.algebraic()) throw Error("InvalidInput", "cohomology is computed on the lie backend only");
  }
  bool valid(int p, int q) const { return p >= 0 && q >= 0 && p <= n && q <= n; }
  int dim(int p, int q) const { return valid(p, q) ? m.basis().dim(p, q) : 0; }
  Mat del(int p, int q) const {
    return valid(p, q) ? m.dmat_del[m.slot(p, q)] : Mat::Zero(dim(p + 1, q), dim(p, q));
  }
  Mat dbar(int p, int q) const {
    return valid(p, q) ? m.dmat_dbar[m.slot(p, q)] : Mat::Zero(dim(p, q + 1), dim(p, q));
  }
  Mat ddbar(int p, int q) const { return del(p, q + 1) * dbar(p, q); }
};

int rank_of(const Mat& A) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(A);
  const auto& s = svd.singularValues();
  const double cut = kRankTol * std::max(1.0, s(0));
  return int((s.array() > cut).count());
}

Mat range_basis(const Mat& A) {
  if (A.size() == 0) return Mat(A.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double cut = kRankTol * std::max(1.0, s(0));
  return svd.matrixU().leftCols((s.array() > cut).count());
}

Mat null_basis(const Mat& A) {
  const Eigen::Index c = A.cols();
  if (A.rows() == 0 || c == 0) return Mat::Identity(c, c);
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = kRankTol * std::max(1.0, s(0));
  const Eigen::Index r = (s.array() > cut).count();
  return svd.matrixV().rightCols(c - r);
}

// Orthonormal basis of span(Z) minus span(B), for B inside Z.
Mat complement(const Mat& Z, const Mat& B) {
  if (B.cols() == 0) return Z;
  return range_basis(Z - B * (B.adjoint() * Z));
}

Mat hcat(const Mat& a, const Mat& b) {
  Mat out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Mat vcat(const Mat& a, const Mat& b) {
  Mat out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

// A block linear system over forms of several bidegrees.
class Stack {
 public:
  struct Term {
    int var;
    Mat op;
  };

  int var(std::string name, int p, int q, int size) {
    vars_.push_back({std::move(name), p, q, size, cols_});
    cols_ += size;
    return int(vars_.size()) - 1;
  }
  void eq(int rows, std::vector<Term> terms) {
    eqs_.push_back({rows, rows_, std::move(terms)});
    rows_ += rows;
  }
  Mat matrix() const {
    Mat M = Mat::Zero(rows_, cols_);
    for (const auto& e : eqs_)
      for (const auto& t : e.terms)
        if (e.rows && t.op.cols()) M.block(e.offset, vars_[t.var].offset, e.rows, t.op.cols()) += t.op;
    return M;
  }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  Eigen::Index offset(int v) const { return vars_[v].offset; }
  int size(int v) const { return vars_[v].size; }
  Eigen::Index eq_offset(int e) const { return eqs_[e].offset; }
  int eq_rows(int e) const { return eqs_[e].rows; }

  Witness witness(int v, const Vec& sol) const {
    const auto& x = vars_[v];
    return {x.name, x.p, x.q, sol.segment(x.offset, x.size)};
  }
  std::vector<Witness> witnesses(const Vec& sol, int skip = -1) const {
    std::vector<Witness> out;
    for (int v = 0; v < int(vars_.size()); ++v)
      if (v != skip) out.push_back(witness(v, sol));
    return out;
  }

 private:
  struct VarInfo {
    std::string name;
    int p, q, size;
    Eigen::Index offset;
  };
  struct EqInfo {
    int rows;
    Eigen::Index offset;
    std::vector<Term> terms;
  };
  std::vector<VarInfo> vars_;
  std::vector<EqInfo> eqs_;
  Eigen::Index rows_ = 0, cols_ = 0;
};

// Least-squares solve of M x = b, returning x and ||Mx - b||.
std::pair<Vec, double> least_squares(const Mat& M, const Vec& b) {
  if (M.cols() == 0) return {Vec(0), b.norm()};
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(M);
  cod.setThreshold(kRankTol);
  Vec x = cod.solve(b);
  return {x, (M * x - b).norm()};
}

// x_0 = x in (p,q), x_k in (p+k, q-k): dbar x_0 = 0, del x_k + dbar x_{k+1} = 0.
Stack zigzag_system(const Complex& C, int p, int q, int r) {
  Stack s;
  std::vector<int> x;
  for (int k = 0; k < r; ++k) x.push_back(s.var("x" + std::to_string(k), p + k, q - k, C.dim(p + k, q - k)));
  s.eq(C.dim(p, q + 1), {{x[0], C.dbar(p, q)}});
  for (int k = 0; k + 1 < r; ++k)
    s.eq(C.dim(p + k + 1, q - k), {{x[k], C.del(p + k, q - k)}, {x[k + 1], C.dbar(p + k + 1, q - k - 1)}});
  return s;
}

Mat z_space(const Complex& C, int p, int q, int r) {
  Stack s = zigzag_system(C, p, q, r);
  Mat N = null_basis(s.matrix());
  return range_basis(N.topRows(C.dim(p, q)));
}

// x = del y_1 + dbar y_0 with y_k in (p-k, q+k-1), dbar y_{r-1} = 0 and
// del y_{k+1} + dbar y_k = 0.
Mat b_space(const Complex& C, int p, int q, int r) {
  Stack s;
  std::vector<int> y;
  for (int k = 0; k < r; ++k) y.push_back(s.var("y", p - k, q + k - 1, C.dim(p - k, q + k - 1)));
  Mat map = C.dbar(p, q - 1);
  if (r >= 2) {
    s.eq(C.dim(p - r + 1, q + r - 1), {{y[r - 1], C.dbar(p - r + 1, q + r - 2)}});
    for (int k = 1; k + 1 < r; ++k)
      s.eq(C.dim(p - k, q + k), {{y[k + 1], C.del(p - k - 1, q + k)}, {y[k], C.dbar(p - k, q + k - 1)}});
    map = hcat(map, C.del(p - 1, q));
    map = hcat(map, Mat::Zero(C.dim(p, q), s.cols() - map.cols()));
  }
  Mat N = null_basis(s.matrix());
  return range_basis(map * N);
}

std::vector<std::vector<Mat>> grid(int n) { return std::vector<std::vector<Mat>>(n + 1, std::vector<Mat>(n + 1)); }
DimTable zeros(int n) { return DimTable(n + 1, std::vector<int>(n + 1, 0)); }

// Main equation alpha = del zeta + del dbar xi + dbar eta (equation 0) plus
// the tower conditions; variables zeta, xi, eta, v_j, u_j.
Stack exact_system(const Complex& C, int p, int q, int r) {
  Stack s;
  const int zeta = s.var("zeta", p - 1, q, C.dim(p - 1, q));
  const int xi = s.var("xi", p - 1, q - 1, C.dim(p - 1, q - 1));
  const int eta = s.var("eta", p, q - 1, C.dim(p, q - 1));
  if (r == 1) {
    s.eq(C.dim(p, q), {{xi, C.ddbar(p - 1, q - 1)}});
    s.eq(C.dim(p - 1, q), {{zeta, Mat::Identity(C.dim(p - 1, q), C.dim(p - 1, q))}});
    s.eq(C.dim(p, q - 1), {{eta, Mat::Identity(C.dim(p, q - 1), C.dim(p, q - 1))}});
    return s;
  }
  s.eq(C.dim(p, q), {{zeta, C.del(p - 1, q)}, {xi, C.ddbar(p - 1, q - 1)}, {eta, C.dbar(p, q - 1)}});
  std::vector<int> v, u;
  for (int j = 1; j <= r - 2; ++j) {
    v.push_back(s.var("v" + std::to_string(r - 2 - j), p - 1 - j, q + j, C.dim(p - 1 - j, q + j)));
    u.push_back(s.var("u" + std::to_string(r - 2 - j), p + j, q - 1 - j, C.dim(p + j, q - 1 - j)));
  }
  if (r == 2) {
    s.eq(C.dim(p - 1, q + 1), {{zeta, C.dbar(p - 1, q)}});
    s.eq(C.dim(p + 1, q - 1), {{eta, C.del(p, q - 1)}});
    return s;
  }
  s.eq(C.dim(p - 1, q + 1), {{zeta, C.dbar(p - 1, q)}, {v[0], -C.del(p - 2, q + 1)}});
  s.eq(C.dim(p + 1, q - 1), {{eta, C.del(p, q - 1)}, {u[0], -C.dbar(p + 1, q - 2)}});
  for (int j = 1; j <= r - 2; ++j) {
    const int a = p - 1 - j, b = q + j;
    const int c = p + j, d = q - 1 - j;
    if (j < r - 2) {
      s.eq(C.dim(a, b + 1), {{v[j - 1], C.dbar(a, b)}, {v[j], -C.del(a - 1, b + 1)}});
      s.eq(C.dim(c + 1, d), {{u[j - 1], C.del(c, d)}, {u[j], -C.dbar(c + 1, d - 1)}});
    } else {
      s.eq(C.dim(a, b + 1), {{v[j - 1], C.dbar(a, b)}});
      s.eq(C.dim(c + 1, d), {{u[j - 1], C.del(c, d)}});
    }
  }
  return s;
}

// Variable 0 is alpha; towers eta_j in (p+j, q-j) and rho_j in (p-j, q+j).
Stack closed_system(const Complex& C, int p, int q, int r) {
  Stack s;
  const int a = s.var("alpha", p, q, C.dim(p, q));
  s.eq(C.dim(p + 1, q + 1), {{a, C.ddbar(p, q)}});
  if (r < 2) return s;
  std::vector<int> eta, rho;
  for (int j = 1; j <= r - 1; ++j) {
    eta.push_back(s.var("eta" + std::to_string(j), p + j, q - j, C.dim(p + j, q - j)));
    rho.push_back(s.var("rho" + std::to_string(j), p - j, q + j, C.dim(p - j, q + j)));
  }
  s.eq(C.dim(p + 1, q), {{a, C.del(p, q)}, {eta[0], -C.dbar(p + 1, q - 1)}});
  s.eq(C.dim(p, q + 1), {{a, C.dbar(p, q)}, {rho[0], -C.del(p - 1, q + 1)}});
  for (int j = 1; j + 1 <= r - 1; ++j) {
    s.eq(C.dim(p + j + 1, q - j), {{eta[j - 1], C.del(p + j, q - j)}, {eta[j], -C.dbar(p + j + 1, q - j - 1)}});
    s.eq(C.dim(p - j, q + j + 1), {{rho[j - 1], C.dbar(p - j, q + j)}, {rho[j], -C.del(p - j - 1, q + j + 1)}});
  }
  return s;
}

Mat exact_space(const Complex& C, int p, int q, int r) {
  Stack s = exact_system(C, p, q, r);
  Mat M = s.matrix();
  const int main = C.dim(p, q);
  Mat N = null_basis(M.bottomRows(M.rows() - main));
  return range_basis(M.topRows(main) * N);
}

Mat closed_space(const Complex& C, int p, int q, int r) {
  Stack s = closed_system(C, p, q, r);
  Mat N = null_basis(s.matrix());
  return range_basis(N.topRows(C.dim(p, q)));
}

void check_r(int r, int lo, int hi) {
  if (r < lo || r > hi) {
    std::ostringstream msg;
    msg << "page index " << r << " outside [" << lo << ", " << hi << "]";
    throw Error("InvalidInput", msg.str());
  }
}

}  // namespace

ClassicalGroups classical_groups(const ModelPtr& mp) {
  Complex C(*mp);
  const int n = C.n;
  ClassicalGroups g;
  g.dolbeault = g.bott_chern = g.aeppli = zeros(n);
  for (int p = 0; p <= n; ++p)
    for (int q = 0; q <= n; ++q) {
      const int d = C.dim(p, q);
      g.dolbeault[p][q] = d - rank_of(C.dbar(p, q)) - rank_of(C.dbar(p, q - 1));
      g.bott_chern[p][q] = d - rank_of(vcat(C.del(p, q), C.dbar(p, q))) - rank_of(C.ddbar(p - 1, q - 1));
      g.aeppli[p][q] = d - rank_of(C.ddbar(p, q)) - rank_of(hcat(C.del(p - 1, q), C.dbar(p, q - 1)));
    }
  // d on total degree k, blocks ordered by p.
  auto total_d = [&](int k) {
    std::vector<int> src_off(n + 2, 0), dst_off(n + 2, 0);
    int src = 0, dst = 0;
    for (int p = 0; p <= n; ++p) {
      src_off[p] = src;
      src += C.dim(p, k - p);
      dst_off[p] = dst;
      dst += C.dim(p, k + 1 - p);
    }
    Mat D = Mat::Zero(dst, src);
    for (int p = 0; p <= n; ++p) {
      const int q = k - p;
      if (!C.valid(p, q)) continue;
      if (p + 1 <= n && C.dim(p + 1, q)) D.block(dst_off[p + 1], src_off[p], C.dim(p + 1, q), C.dim(p, q)) += C.del(p, q);
      if (C.dim(p, q + 1)) D.block(dst_off[p], src_off[p], C.dim(p, q + 1), C.dim(p, q)) += C.dbar(p, q);
    }
    return std::make_pair(D, src);
  };
  g.de_rham.assign(2 * n + 1, 0);
  for (int k = 0; k <= 2 * n; ++k) {
    auto [Dk, dk] = total_d(k);
    const int prev = k > 0 ? rank_of(total_d(k - 1).first) : 0;
    g.de_rham[k] = dk - rank_of(Dk) - prev;
  }
  g.duality_holds = true;
  for (int p = 0; p <= n; ++p)
    for (int q = 0; q <= n; ++q)
      if (g.bott_chern[p][q] != g.aeppli[n - p][n - q]) g.duality_holds = false;
  return g;
}

PageSummary spectral_page(const ModelPtr& mp, int r) {
  Complex C(*mp);
  check_r(r, 1, 64);
  const int n = C.n;
  PageSummary s;
  s.r = r;
  s.dims = zeros(n);
  s.basis = s.d = grid(n);
  for (int p = 0; p <= n; ++p)
    for (int q = 0; q <= n; ++q) {
      s.basis[p][q] = complement(z_space(C, p, q, r), b_space(C, p, q, r));
      s.dims[p][q] = int(s.basis[p][q].cols());
    }
  s.degenerate = true;
  for (int p = 0; p <= n; ++p)
    for (int q = 0; q <= n; ++q) {
      const int tp = p + r, tq = q - r + 1;
      const Mat& Q = s.basis[p][q];
      if (!C.valid(tp, tq)) {
        s.d[p][q] = Mat(0, Q.cols());
        continue;
      }
      const Mat& Qt = s.basis[tp][tq];
      Mat D(Qt.cols(), Q.cols());
      Stack z = zigzag_system(C, p, q, r);
      Mat M = z.matrix();
      const Eigen::Index d0 = C.dim(p, q);
      for (Eigen::Index j = 0; j < Q.cols(); ++j) {
        Vec x = Q.col(j);
        Vec tail(0);
        if (r > 1) {
          auto [sol, res] = least_squares(M.rightCols(M.cols() - d0), -M.leftCols(d0) * x);
          if (res > 1e-8) throw Error("InternalError", "zigzag of a page representative is not solvable");
          tail = sol;
        }
        Vec last = r > 1 ? Vec(tail.tail(z.size(r - 1))) : x;
        Vec y = C.del(p + r - 1, q - r + 1) * last;
        D.col(j) = Qt.adjoint() * y;
      }
      s.d[p][q] = D;
      if (D.size() && D.cwiseAbs().maxCoeff() > 1e-10) s.degenerate = false;
    }
  return s;
}

ErMembership er_closed_exact(const Form& alpha, int r) {
  check_r(r, 1, 3);
  Complex C(*alpha.model);
  const int p = alpha.p, q = alpha.q;
  ErMembership out;
  out.r = r;
  const Vec a = alpha.flat();
  const double tol = 1e-9 * std::max(1.0, a.norm());

  Stack cs = closed_system(C, p, q, r);
  Mat Mc = cs.matrix();
  const Eigen::Index d0 = C.dim(p, q);
  auto [xc, rc] = least_squares(Mc.rightCols(Mc.cols() - d0), -Mc.leftCols(d0) * a);
  out.closed_residual = rc;
  out.closed = rc < tol;
  Vec full(Mc.cols());
  full << a, xc;
  out.closed_witnesses = cs.witnesses(full, 0);

  Stack es = exact_system(C, p, q, r);
  Mat Me = es.matrix();
  Vec rhs = Vec::Zero(Me.rows());
  rhs.head(d0) = a;
  auto [xe, re] = least_squares(Me, rhs);
  out.exact_residual = re;
  out.exact = re < tol;
  out.exact_witnesses = es.witnesses(xe);
  return out;
}

HigherPageGroups higher_page_groups(const ModelPtr& mp, int r) {
  check_r(r, 1, 3);
  Complex C(*mp);
  const int n = C.n;
  PageSummary page = spectral_page(mp, r);
  HigherPageGroups h;
  h.r = r;
  h.bc = h.aeppli = zeros(n);
  h.er = page.dims;
  h.T = h.S = grid(n);
  h.diagnostic = true;
  for (int p = 0; p <= n; ++p)
    for (int q = 0; q <= n; ++q) {
      Mat kerd = null_basis(vcat(C.del(p, q), C.dbar(p, q)));
      Mat qbc = complement(kerd, exact_space(C, p, q, r));
      Mat imdd = range_basis(hcat(C.del(p - 1, q), C.dbar(p, q - 1)));
      Mat qa = complement(closed_space(C, p, q, r), imdd);
      h.bc[p][q] = int(qbc.cols());
      h.aeppli[p][q] = int(qa.cols());
      const Mat& Q = page.basis[p][q];
      h.T[p][q] = Q.adjoint() * qbc;
      h.S[p][q] = qa.adjoint() * Q;
      auto iso = [](const Mat& M) { return M.rows() == M.cols() && rank_of(M) == M.rows(); };
      if (!iso(h.T[p][q]) || !iso(h.S[p][q])) h.diagnostic = false;
    }
  return h;
}

namespace {

CohomClass e2_class(const PageSummary& page2, const Form& rho02) {
  CohomClass c;
  c.group = "E2";
  c.p = 0;
  c.q = 2;
  c.representative = rho02;
  c.coordinates = page2.basis[0][2].adjoint() * rho02.flat();
  return c;
}

}  // namespace

E2TorsionClass e2_torsion_class(const Metric& g) {
  const ModelPtr& m = g.model();
  Complex C(*m);
  if (g.n() != 3) throw Error("InvalidInput", "the E2 torsion class is defined here for n = 3");
  const double tol = default_tolerance(*m);
  Feasibility f = hs_feasibility(g.omega(), tol);
  if (!f.feasible) {
    std::ostringstream msg;
    msg << "metric is not Hermitian-symplectic; least-squares residual " << f.residual;
    throw Error("NotHS", msg.str());
  }
  PageSummary page2 = spectral_page(m, 2);
  TorsionReport t = torsion_form(g);
  E2TorsionClass out;
  out.cls = e2_class(page2, t.rho02);

  const Vec v = t.rho02.flat();
  Mat Db = C.dbar(0, 1);
  auto [xi, res] = least_squares(Db, v);
  out.membership_residual = res;
  out.vanishes = out.cls.coordinates.norm() < tol * std::max(1.0, v.norm());
  if (out.vanishes) {
    out.xi = Form::from_flat(m, 0, 1, xi);
    out.xi_residual = (Db * xi - v).norm();
  } else {
    Mat im = range_basis(Db);
    Vec w = v - im * (im.adjoint() * v);
    w /= w.norm();
    out.dual_functional = Form::from_flat(m, 0, 2, w);
    out.dual_value = std::abs(w.dot(v));
  }
  // d_2 of the class is represented by del omega.
  out.d2_image = (page2.basis[2][1].adjoint() * differential(Part::del, g.omega()).flat()).norm();

  std::mt19937 rng(20240607);
  std::normal_distribution<double> nd;
  Form eta = Form::zero(m, 1, 0);
  for (Eigen::Index k = 0; k < eta.c.cols(); ++k) eta.c(0, k) = cplx(nd(rng), nd(rng));
  Form de = differential(Part::dbar, eta);
  const double size = coeff_norm(de);
  if (size > 0) {
    de = (0.1 * g.min_eigenvalue() / size) * de;
    auto g2 = Metric::create(g.omega() + de + conjugate(de));
    TorsionReport t2 = torsion_form(*g2);
    out.invariance_defect = (e2_class(page2, t2.rho02).coordinates - out.cls.coordinates).norm();
  }
  return out;
}

E2Intersection e2_intersection(const Metric& g) {
  const ModelPtr& m = g.model();
  Complex C(*m);
  if (g.n() != 3) throw Error("InvalidInput", "the intersection formula is implemented for n = 3");
  const double tol = default_tolerance(*m);
  if (!higher_page_groups(m, 2).diagnostic)
    throw Error("HypothesisFailed", "model is not page-1-ddbar: some T_2 or S_2 is not an isomorphism");
  Feasibility f = hs_feasibility(g.omega(), tol);
  if (!f.feasible) {
    std::ostringstream msg;
    msg << "metric is not Hermitian-symplectic; least-squares residual " << f.residual;
    throw Error("HypothesisFailed", msg.str());
  }
  E2TorsionClass tc = e2_torsion_class(g);
  if (!tc.vanishes) {
    std::ostringstream msg;
    msg << "E2 torsion class is nonzero; dual functional pairs to " << tc.dual_value;
    throw Error("HypothesisFailed", msg.str());
  }
  TorsionReport t = energy_and_volume(g);
  E2Intersection out;
  const Form& w = g.omega();
  out.Omega = power(w, 2) + 2.0 * wedge(t.rho20, t.rho02);
  out.A = t.A;

  // Minimal L2_omega-norm solution of del dbar u = dbar Omega on (1,2).
  Form rhs = differential(Part::dbar, out.Omega);
  Mat R = orthonormalizer(g, 1, 2);
  Mat Rinv = R.inverse();
  auto [y, res] = least_squares(C.ddbar(1, 2) * Rinv, rhs.flat());
  (void)res;
  out.u12 = Form::from_flat(m, 1, 2, Rinv * y);
  out.stage1_residual = norm(g, differential(Part::del, differential(Part::dbar, out.u12)) - rhs);
  if (out.stage1_residual > tol * std::max(1.0, norm(g, rhs))) {
    std::ostringstream msg;
    msg << "del dbar u = dbar Omega has no solution; residual " << out.stage1_residual;
    throw Error("StageUnsolvable", msg.str());
  }
  out.u21 = conjugate(out.u12);
  Form partial = out.Omega + differential(Part::del, out.u12);
  out.stage2_residual =
      norm(g, differential(Part::del, differential(Part::dbar, out.u21)) + differential(Part::del, partial));
  out.Omega_tilde = partial + differential(Part::dbar, out.u21);
  const double a = norm(g, differential(Part::del, out.Omega_tilde));
  const double b = norm(g, differential(Part::dbar, out.Omega_tilde));
  out.d_residual = std::sqrt(a * a + b * b);
  out.intersection = integrate_top(wedge(out.Omega_tilde, w)).real();
  out.residual = std::abs(out.intersection - 6.0 * out.A);
  return out;
}

}  // namespace hsg
