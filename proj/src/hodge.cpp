#include "hsg/hodge.hpp"
#include "hsg/torus.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace hsg {

const char* to_string(Laplacian k) {
  switch (k) {
    case Laplacian::del: return "del";
    case Laplacian::dbar: return "dbar";
    case Laplacian::bc: return "bc";
    case Laplacian::tilde: return "tilde";
  }
  return "?";
}

struct Metric::GreenCache {
  // single-point models
  Mat R, Rinv, pinv;
  // all models: orthonormal kernel basis
  std::vector<Form> kernel;
  // torus: per-mode preconditioner blocks
  std::vector<Mat> precond;
};

namespace {

Mat minor_matrix(const Mat& g, Mono rows, Mono cols, int offset_r, int offset_c) {
  std::vector<int> r, c;
  for (Mono m = rows; m; m &= m - 1) r.push_back(std::countr_zero(m) - offset_r);
  for (Mono m = cols; m; m &= m - 1) c.push_back(std::countr_zero(m) - offset_c);
  Mat out(r.size(), c.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) out(i, j) = g(r[i], c[j]);
  return out;
}

cplx det_or_one(const Mat& m) { return m.rows() == 0 ? cplx(1.0, 0.0) : m.determinant(); }

Form apply_pointwise(const std::vector<Mat>& M, const Form& a, int tp, int tq) {
  Form out = Form::zero(a.model, tp, tq);
  if (out.empty() || a.empty()) return out;
  for (Eigen::Index x = 0; x < a.points(); ++x) out.c.row(x) = (M[x] * a.c.row(x).transpose()).transpose();
  return out;
}

// Euclidean weight W with <a,b> = flat(b)^H flat(W a).
Form apply_weight(const Metric& g, const Form& a) {
  const auto& G = g.gram(a.p, a.q);
  Form out = Form::zero(a.model, a.p, a.q);
  const double inv = 1.0 / double(a.points());
  const auto& vol = g.volume_density();
  for (Eigen::Index x = 0; x < a.points(); ++x)
    out.c.row(x) = (vol[x] * inv) * (G[x].transpose() * a.c.row(x).transpose()).transpose();
  return out;
}

ModelPtr symbol_model(int n, const Vec& mu, const Vec& nu) {
  auto m = std::make_shared<Model>();
  m->backend = Backend::lie;
  m->n = n;
  m->name = "symbol";
  const Basis& B = Basis::get(n);
  const int S = (n + 1) * (n + 1);
  m->dmat_del.resize(S);
  m->dmat_dbar.resize(S);
  for (int p = 0; p <= n; ++p)
    for (int q = 0; q <= n; ++q) {
      Mat Dd = Mat::Zero(B.dim(p + 1, q), B.dim(p, q));
      Mat Db = Mat::Zero(B.dim(p, q + 1), B.dim(p, q));
      if (p + 1 <= n)
        for (const auto& e : B.wedge_table(1, 0, p, q)) Dd(e.k, e.j) += e.sign * mu[e.i];
      if (q + 1 <= n)
        for (const auto& e : B.wedge_table(0, 1, p, q)) Db(e.k, e.j) += e.sign * nu[e.i];
      m->dmat_del[m->slot(p, q)] = Dd;
      m->dmat_dbar[m->slot(p, q)] = Db;
    }
  return m;
}

Mat hermitian_pinv(const Mat& A, double rel_cut) {
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (smax > 0.0 && s[i] > rel_cut * smax) inv[i] = 1.0 / s[i];
  return svd.matrixV() * inv.cast<cplx>().asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace

MetricPtr Metric::create(const Form& omega, double min_eig) {
  if (omega.p != 1 || omega.q != 1) throw Error("BidegreeError", "a metric is a (1,1)-form");
  Form bar = conjugate(omega);
  if (coeff_norm(bar - omega) > 1e-10 * std::max(1.0, coeff_norm(omega)))
    throw Error("InvalidInput", "metric form is not real");
  auto g = std::shared_ptr<Metric>(new Metric());
  g->omega_ = omega;
  g->H_ = hermitian_matrices(omega);
  const Eigen::Index G = omega.points();
  g->vol_.resize(G);
  g->g1_.resize(G);
  g->min_eig_ = std::numeric_limits<double>::infinity();
  for (Eigen::Index x = 0; x < G; ++x) {
    Mat& H = g->H_[x];
    H = 0.5 * (H + H.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()[0];
    if (lo < g->min_eig_) {
      g->min_eig_ = lo;
      g->worst_ = x;
    }
    g->vol_[x] = H.determinant().real();
    if (lo > 0.0) g->g1_[x] = 2.0 * H.transpose().inverse();
  }
  if (!(g->min_eig_ > min_eig)) {
    std::ostringstream msg;
    msg << "minimum eigenvalue " << g->min_eig_ << " at grid point " << g->worst_;
    throw Error("NotPositive", msg.str());
  }
  return g;
}

MetricPtr metric_from_form(const Form& omega) { return Metric::create(omega); }

const std::vector<Mat>& Metric::gram(int p, int q) const {
  const int n = this->n();
  const int key = p * (n + 1) + q;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = gram_.find(key);
    if (it != gram_.end()) return *it->second;
  }
  const Basis& B = model()->basis();
  const int d = B.dim(p, q);
  auto out = std::make_shared<std::vector<Mat>>(omega_.points(), Mat(d, d));
  const Mono hol = (Mono(1) << n) - 1;
  for (Eigen::Index x = 0; x < omega_.points(); ++x) {
    const Mat& g1 = g1_[x];
    const Mat g2 = g1.conjugate();
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) {
        Mono mi = B.mono(p, q, i), mk = B.mono(p, q, k);
        cplx a = det_or_one(minor_matrix(g1, mi & hol, mk & hol, 0, 0));
        cplx b = det_or_one(minor_matrix(g2, mi >> n, mk >> n, 0, 0));
        (*out)[x](i, k) = a * b;
      }
  }
  std::lock_guard<std::mutex> lock(mu_);
  return *gram_.emplace(key, out).first->second;
}

const std::vector<Mat>& Metric::star_matrices(int a, int b) const {
  const int n = this->n();
  const int key = a * (n + 1) + b;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = star_.find(key);
    if (it != star_.end()) return *it->second;
  }
  const Basis& B = model()->basis();
  const int d = B.dim(a, b);
  // e_i ∧ s = <e_i, conj(c)> dV_omega for e_i in (b,a), s in (n-b, n-a)
  Mat W = Mat::Zero(d, d);
  for (const auto& e : B.wedge_table(b, a, n - b, n - a)) W(e.i, e.j) = e.sign;
  Mat P = Mat::Zero(d, d);
  const auto& ct = B.conj_table(a, b);
  for (int m = 0; m < d; ++m) P(ct[m].target, m) = ct[m].sign;
  const Mat Winv = W.inverse();
  const auto& G = gram(b, a);
  auto out = std::make_shared<std::vector<Mat>>(omega_.points());
  const cplx dv0 = B.dv0_coefficient();
  for (Eigen::Index x = 0; x < omega_.points(); ++x) (*out)[x] = (vol_[x] * dv0) * Winv * G[x] * P;
  std::lock_guard<std::mutex> lock(mu_);
  return *star_.emplace(key, out).first->second;
}

std::shared_ptr<Metric::GreenCache> Metric::green_cache(Laplacian kind, int p, int q) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = green_.find({int(kind), p, q});
  return it == green_.end() ? nullptr : it->second;
}

void Metric::store_green_cache(Laplacian kind, int p, int q, std::shared_ptr<GreenCache> c) const {
  std::lock_guard<std::mutex> lock(mu_);
  green_.emplace(std::make_tuple(int(kind), p, q), std::move(c));
}

Eigen::VectorXcd pointwise_inner(const Metric& g, const Form& a, const Form& b) {
  require_same_model(a, b);
  if (a.p != b.p || a.q != b.q) throw Error("BidegreeError", "inner product of different bidegrees");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(a.points());
  if (a.empty()) return out;
  const auto& G = g.gram(a.p, a.q);
  for (Eigen::Index x = 0; x < a.points(); ++x)
    out[x] = (a.c.row(x) * G[x] * b.c.row(x).adjoint())(0, 0);
  return out;
}

Eigen::VectorXd pointwise_norm2(const Metric& g, const Form& a) { return pointwise_inner(g, a, a).real(); }

cplx inner(const Metric& g, const Form& a, const Form& b) {
  Eigen::VectorXcd f = pointwise_inner(g, a, b);
  return f.cwiseProduct(g.volume_density().cast<cplx>()).mean();
}

double norm(const Metric& g, const Form& a) { return std::sqrt(std::max(0.0, inner(g, a, a).real())); }

Form star(const Metric& g, const Form& a) {
  const int n = g.n();
  if (a.empty()) return Form::zero(a.model, n - a.q, n - a.p);
  return apply_pointwise(g.star_matrices(a.p, a.q), a, n - a.q, n - a.p);
}

Form adjoint_diff(const Metric& g, Part part, const Form& a) {
  Form s = star(g, a);
  Form ds = differential(part == Part::del ? Part::dbar : Part::del, s);
  return -star(g, ds);
}

Form lefschetz(const Metric& g, const Form& a) { return wedge(g.omega(), a); }

Form contraction(const Metric& g, const Form& b) {
  const ModelPtr& m = b.model;
  Form out = Form::zero(m, b.p - 1, b.q - 1);
  if (out.empty() || b.empty()) return out;
  const Basis& B = m->basis();
  const auto& Gs = g.gram(b.p - 1, b.q - 1);
  const auto& Gt = g.gram(b.p, b.q);
  const auto& tab = B.wedge_table(1, 1, b.p - 1, b.q - 1);
  const Form& w = g.omega();
  Mat L(B.dim(b.p, b.q), B.dim(b.p - 1, b.q - 1));
  for (Eigen::Index x = 0; x < b.points(); ++x) {
    L.setZero();
    for (const auto& e : tab) L(e.k, e.j) += e.sign * w.c(x, e.i);
    Mat Lam = Gs[x].transpose().inverse() * L.adjoint() * Gt[x].transpose();
    out.c.row(x) = (Lam * b.c.row(x).transpose()).transpose();
  }
  return out;
}

Form laplacian(const Metric& g, Laplacian kind, const Form& a) {
  auto d = [](const Form& f) { return differential(Part::del, f); };
  auto db = [](const Form& f) { return differential(Part::dbar, f); };
  auto ds = [&](const Form& f) { return adjoint_diff(g, Part::del, f); };
  auto dbs = [&](const Form& f) { return adjoint_diff(g, Part::dbar, f); };
  switch (kind) {
    case Laplacian::del: return d(ds(a)) + ds(d(a));
    case Laplacian::dbar: return db(dbs(a)) + dbs(db(a));
    case Laplacian::bc: {
      Form r = ds(d(a)) + dbs(db(a));
      r += dbs(ds(d(db(a))));          // (del delbar)* (del delbar)
      r += d(db(dbs(ds(a))));          // (del delbar)(del delbar)*
      r += dbs(d(ds(db(a))));          // (del* delbar)* (del* delbar)
      r += ds(db(dbs(d(a))));          // (del* delbar)(del* delbar)*
      return r;
    }
    case Laplacian::tilde: {
      auto proj = [&](const Form& f) { return harmonic_project(g, Laplacian::dbar, f); };
      return d(proj(ds(a))) + ds(proj(d(a))) + laplacian(g, Laplacian::dbar, a);
    }
  }
  return a;
}

Mat dense_operator(const ModelPtr& m, int p, int q, const std::function<Form(const Form&)>& f) {
  Form unit = Form::zero(m, p, q);
  const Eigen::Index N = unit.c.size();
  Mat out;
  for (Eigen::Index k = 0; k < N; ++k) {
    unit.c.setZero();
    unit.c.data()[k] = 1.0;
    Vec col = f(unit).flat();
    if (k == 0) out.resize(col.size(), N);
    out.col(k) = col;
  }
  if (N == 0) out.resize(0, 0);
  return out;
}

Mat orthonormalizer(const Metric& g, int p, int q) {
  const int d = g.model()->basis().dim(p, q);
  const Eigen::Index G = g.model()->points();
  if (d == 0) return Mat(0, 0);
  if (G * d > 4096) throw Error("InvalidInput", "orthonormalizer is limited to 4096 unknowns");
  Mat R = Mat::Zero(G * d, G * d);
  for (Eigen::Index x = 0; x < G; ++x) {
    Mat K = (g.volume_density()[x] / double(G)) * g.gram(p, q)[x].transpose();
    K = 0.5 * (K + K.adjoint()).eval();
    Mat Rx = Eigen::LLT<Mat>(K).matrixL().adjoint();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) R(i * G + x, j * G + x) = Rx(i, j);
  }
  return R;
}

std::vector<Form> orthonormalize(const Metric& g, std::vector<Form> forms, double tol) {
  std::vector<Form> out;
  for (auto& f : forms) {
    const double n0 = norm(g, f);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& e : out) f -= inner(g, f, e) * e;
    const double n1 = norm(g, f);
    if (n1 > tol * std::max(1.0, n0)) out.push_back((1.0 / n1) * f);
  }
  return out;
}

Form project_onto(const Metric& g, const std::vector<Form>& onb, const Form& a) {
  Form r = Form::zero(a.model, a.p, a.q);
  for (const auto& e : onb) r += inner(g, a, e) * e;
  return r;
}

namespace {

std::shared_ptr<Metric::GreenCache> build_dense_cache(const Metric& g, Laplacian kind, int p, int q) {
  auto c = std::make_shared<Metric::GreenCache>();
  const ModelPtr& m = g.model();
  c->R = orthonormalizer(g, p, q);
  const Eigen::Index d = c->R.rows();
  if (d == 0) return c;
  c->Rinv = c->R.inverse();
  Mat A = dense_operator(m, p, q, [&](const Form& f) { return laplacian(g, kind, f); });
  Mat At = c->R * A * c->Rinv;
  At = 0.5 * (At + At.adjoint()).eval();
  Eigen::JacobiSVD<Mat> svd(At, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s[0];
  // Absolute floor so that a numerically zero operator has full kernel.
  const double cut = 1e-10 * std::max(smax, 1.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(d);
  std::vector<Form> ker;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (smax > 0.0 && s[i] > cut)
      inv[i] = 1.0 / s[i];
    else
      ker.push_back(Form::from_flat(m, p, q, c->Rinv * svd.matrixV().col(i)));
  }
  c->pinv = svd.matrixV() * inv.cast<cplx>().asDiagonal() * svd.matrixU().adjoint();
  c->kernel = std::move(ker);
  return c;
}

std::vector<Form> constants(const ModelPtr& m, int p, int q) {
  std::vector<Form> out;
  for (int i = 0; i < m->basis().dim(p, q); ++i) out.push_back(Form::basis_element(m, p, q, i));
  return out;
}

std::vector<Form> torus_kernel(const Metric& g, Laplacian kind, int p, int q) {
  const ModelPtr& m = g.model();
  GreenOptions tight;
  tight.rel_tol = 1e-12;
  if (m->basis().dim(p, q) == 0) return {};
  switch (kind) {
    case Laplacian::dbar: {
      if (q == 0) return orthonormalize(g, constants(m, p, q));
      std::vector<Form> hs;
      for (auto& c : constants(m, p, q)) {
        Form beta = green_solve(g, Laplacian::dbar, adjoint_diff(g, Part::dbar, c), tight).x;
        hs.push_back(c - differential(Part::dbar, beta));
      }
      return orthonormalize(g, hs);
    }
    case Laplacian::del: {
      if (p == 0) return orthonormalize(g, constants(m, p, q));
      std::vector<Form> hs;
      for (auto& c : constants(m, p, q)) {
        Form beta = green_solve(g, Laplacian::del, adjoint_diff(g, Part::del, c), tight).x;
        hs.push_back(c - differential(Part::del, beta));
      }
      return orthonormalize(g, hs);
    }
    case Laplacian::bc:
      if (p == 0 || q == 0) return orthonormalize(g, constants(m, p, q));
      throw Error("Unsupported", "Bott-Chern kernel on the torus backend is implemented for bidegrees (p,0) and (0,q)");
    case Laplacian::tilde:
      throw Error("Unsupported", "the tilde Laplacian is available on the lie backend only");
  }
  return {};
}

std::vector<Mat> torus_preconditioner(const Metric& g, Laplacian kind, int p, int q) {
  const ModelPtr& m = g.model();
  const TorusGrid& grid = *m->grid;
  const int n = m->n;
  Mat Hbar = Mat::Zero(n, n);
  for (const auto& H : g.H()) Hbar += H;
  Hbar /= double(g.H().size());
  std::vector<Mat> out(grid.size);
  const double inv = 1.0 / double(grid.size);
  for (Eigen::Index k = 0; k < grid.size; ++k) {
    Vec mu(n), nu(n);
    for (int j = 0; j < n; ++j) {
      mu[j] = grid.mult_del[j][k];
      nu[j] = grid.mult_dbar[j][k];
    }
    ModelPtr sm = symbol_model(n, mu, nu);
    auto sg = Metric::create(form_from_hermitian(sm, {Hbar}));
    Mat A = dense_operator(sm, p, q, [&](const Form& f) { return laplacian(*sg, kind, f); });
    Mat W = (sg->volume_density()[0] * inv) * sg->gram(p, q)[0].transpose();
    Mat WA = W * A;
    WA = 0.5 * (WA + WA.adjoint()).eval();
    out[k] = hermitian_pinv(WA, 1e-12);
    out[k] = 0.5 * (out[k] + out[k].adjoint()).eval();
  }
  return out;
}

std::shared_ptr<Metric::GreenCache> cache_for(const Metric& g, Laplacian kind, int p, int q) {
  if (auto c = g.green_cache(kind, p, q)) return c;
  std::shared_ptr<Metric::GreenCache> c;
  if (g.model()->algebraic()) {
    c = build_dense_cache(g, kind, p, q);
  } else {
    c = std::make_shared<Metric::GreenCache>();
    c->kernel = torus_kernel(g, kind, p, q);
    if (kind != Laplacian::tilde) c->precond = torus_preconditioner(g, kind, p, q);
  }
  g.store_green_cache(kind, p, q, c);
  return g.green_cache(kind, p, q);
}

Form apply_precond(const Metric& g, const Metric::GreenCache& c, const Form& r) {
  if (c.precond.empty()) return r;
  const TorusGrid& grid = *g.model()->grid;
  const Eigen::Index G = grid.size;
  Mat spec(G, r.channels()), z(G, r.channels());
  for (int ch = 0; ch < r.channels(); ++ch) grid.forward(r.c.col(ch).data(), spec.col(ch).data());
  for (Eigen::Index k = 0; k < G; ++k) z.row(k) = (c.precond[k] * spec.row(k).transpose()).transpose();
  Form out = Form::zero(r.model, r.p, r.q);
  for (int ch = 0; ch < r.channels(); ++ch) grid.backward(z.col(ch).data(), out.c.col(ch).data());
  return out;
}

}  // namespace

std::vector<Form> harmonic_basis(const Metric& g, Laplacian kind, int p, int q) {
  return cache_for(g, kind, p, q)->kernel;
}

Form harmonic_project(const Metric& g, Laplacian kind, const Form& a) {
  if (a.empty()) return a;
  return project_onto(g, harmonic_basis(g, kind, a.p, a.q), a);
}

GreenResult green_solve(const Metric& g, Laplacian kind, const Form& b, const GreenOptions& opt) {
  GreenResult res;
  res.x = Form::zero(b.model, b.p, b.q);
  if (b.empty()) return res;
  auto c = cache_for(g, kind, b.p, b.q);
  Form h = project_onto(g, c->kernel, b);
  res.discarded = norm(g, h);
  Form rhs = b - h;

  bool use_pinv = opt.method == GreenOptions::Method::pseudoinverse ||
                  (opt.method == GreenOptions::Method::automatic && g.model()->algebraic());
  if (use_pinv) {
    if (!g.model()->algebraic()) throw Error("InvalidInput", "pseudoinverse path needs the lie backend");
    res.x = Form::from_flat(b.model, b.p, b.q, c->Rinv * (c->pinv * (c->R * rhs.flat())));
    return res;
  }

  // Preconditioned CG on the Hermitian system W A x = W rhs, iterates kept
  // L2_omega-orthogonal to the kernel.
  const double G = double(b.points());
  int cap = opt.max_iters > 0 ? opt.max_iters
                              : std::max(int(std::ceil(10.0 * std::sqrt(G))), 4 * b.channels() + 10);
  auto project = [&](Form f) { return f - project_onto(g, c->kernel, f); };
  auto dot = [](const Form& u, const Form& v) { return u.flat().dot(v.flat()); };
  Form x = Form::zero(b.model, b.p, b.q);
  Form r = apply_weight(g, rhs);
  const double r0 = r.c.norm();
  if (r0 <= 1e-14 * std::max(1.0, apply_weight(g, b).c.norm())) return res;
  Form z = project(apply_precond(g, *c, r));
  Form dir = z;
  cplx rz = dot(r, z);
  res.history.push_back(1.0);
  for (int it = 1; it <= cap; ++it) {
    Form Ap = apply_weight(g, laplacian(g, kind, dir));
    cplx pAp = dot(dir, Ap);
    if (std::abs(pAp) == 0.0) break;
    cplx alpha = rz / pAp;
    x += alpha * dir;
    r -= alpha * Ap;
    const double rel = r.c.norm() / r0;
    res.history.push_back(rel);
    res.iterations = it;
    if (rel < opt.rel_tol) {
      res.x = project(x);
      return res;
    }
    z = project(apply_precond(g, *c, r));
    cplx rz_new = dot(r, z);
    dir = z + (rz_new / rz) * dir;
    rz = rz_new;
  }
  std::ostringstream msg;
  msg << "CG on " << to_string(kind) << " (" << b.p << "," << b.q << ") stalled at relative residual "
      << res.history.back() << " after " << res.iterations << " iterations";
  throw Error("SolveDiverged", msg.str());
}

Form green(const Metric& g, Laplacian kind, const Form& b) { return green_solve(g, kind, b).x; }

namespace {

// Orthonormal basis (in R-coordinates) of the span of the given columns.
Mat range_basis(const Mat& cols) {
  if (cols.cols() == 0) return Mat(cols.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(cols, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > std::max(1e-10 * smax, 1e-12)) ++r;
  return svd.matrixU().leftCols(r);
}

Mat hstack(const std::vector<Mat>& blocks, Eigen::Index rows) {
  Eigen::Index cols = 0;
  for (const auto& b : blocks) cols += b.cols();
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    if (b.cols() == 0) continue;
    out.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return out;
}

Mat null_basis(const Mat& A, Eigen::Index n) {
  if (A.rows() == 0) return Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > std::max(1e-10 * smax, 1e-12)) ++r;
  return svd.matrixV().rightCols(n - r);
}

}  // namespace

Decomposition decompose_3space(const Metric& g, Laplacian flavor, const Form& a) {
  const ModelPtr& m = a.model;
  const int p = a.p, q = a.q;
  Decomposition out;
  out.harmonic = harmonic_project(g, flavor, a);
  if (!m->algebraic()) {
    if (flavor != Laplacian::bc || (p != 0 && q != 0))
      throw Error("Unsupported", "torus decomposition is implemented for the Bott-Chern flavor on (p,0) and (0,q)");
    out.middle = Form::zero(m, p, q);
    out.co = a - out.harmonic;
    return out;
  }
  if (flavor != Laplacian::bc && flavor != Laplacian::tilde)
    throw Error("InvalidInput", "decomposition flavor must be bc or tilde");
  const Mat R = orthonormalizer(g, p, q);
  const Mat Rinv = R.inverse();
  const Eigen::Index d = R.rows();
  auto op = [&](int sp, int sq, const std::function<Form(const Form&)>& f) -> Mat {
    if (m->basis().dim(sp, sq) == 0) return Mat(d, 0);
    return R * dense_operator(m, sp, sq, f);
  };
  auto d_ = [](const Form& f) { return differential(Part::del, f); };
  auto db_ = [](const Form& f) { return differential(Part::dbar, f); };
  std::vector<Mat> mid, co;
  if (flavor == Laplacian::bc) {
    mid.push_back(op(p - 1, q - 1, [&](const Form& f) { return d_(db_(f)); }));
    co.push_back(op(p + 1, q, [&](const Form& f) { return adjoint_diff(g, Part::del, f); }));
    co.push_back(op(p, q + 1, [&](const Form& f) { return adjoint_diff(g, Part::dbar, f); }));
  } else {
    mid.push_back(op(p, q - 1, db_));
    if (m->basis().dim(p - 1, q) > 0) {
      Mat Db = dense_operator(m, p - 1, q, db_);
      Mat K = null_basis(Db, m->basis().dim(p - 1, q));
      Mat Dd = dense_operator(m, p - 1, q, d_);
      mid.push_back(R * Dd * K);
    }
    co.push_back(op(p + 1, q, [&](const Form& f) {
      return adjoint_diff(g, Part::del, harmonic_project(g, Laplacian::dbar, f));
    }));
    co.push_back(op(p, q + 1, [&](const Form& f) { return adjoint_diff(g, Part::dbar, f); }));
  }
  Mat Um = range_basis(hstack(mid, d)), Uc = range_basis(hstack(co, d));
  Vec y = R * a.flat();
  out.middle = Form::from_flat(m, p, q, Rinv * (Um * (Um.adjoint() * y)));
  out.co = Form::from_flat(m, p, q, Rinv * (Uc * (Uc.adjoint() * y)));
  return out;
}

}  // namespace hsg
