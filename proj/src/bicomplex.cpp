#include "hsg/bicomplex.hpp"
#include "hsg/torus.hpp"

#include <bit>
#include <map>
#include <mutex>

namespace hsg {

int mono_wedge_sign(Mono a, Mono b) {
  if (a & b) return 0;
  int swaps = 0;
  for (Mono rest = b; rest; rest &= rest - 1) {
    int y = std::countr_zero(rest);
    swaps += std::popcount(static_cast<Mono>(a >> (y + 1)));
  }
  return (swaps & 1) ? -1 : 1;
}

namespace {

void combos(int n, int k, int start, Mono cur, std::vector<Mono>& out) {
  if (k == 0) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i <= n - k; ++i) combos(n, k - 1, i + 1, cur | (Mono(1) << i), out);
}

}  // namespace

Basis::Basis(int n) : n_(n) {
  const int S = (n + 1) * (n + 1);
  monos_.resize(S);
  index_of_.assign(std::size_t(1) << (2 * n), -1);
  for (int p = 0; p <= n; ++p)
    for (int q = 0; q <= n; ++q) {
      std::vector<Mono> hol, anti;
      combos(n, p, 0, 0, hol);
      combos(n, q, 0, 0, anti);
      auto& list = monos_[slot(p, q)];
      for (Mono h : hol)
        for (Mono a : anti) {
          index_of_[h | (a << n)] = static_cast<int>(list.size());
          list.push_back(h | (a << n));
        }
    }

  wedge_.resize(std::size_t(S) * S);
  for (int p1 = 0; p1 <= n; ++p1)
    for (int q1 = 0; q1 <= n; ++q1)
      for (int p2 = 0; p2 + p1 <= n; ++p2)
        for (int q2 = 0; q2 + q1 <= n; ++q2) {
          auto& tab = wedge_[slot(p1, q1) * S + slot(p2, q2)];
          const auto& A = monos_[slot(p1, q1)];
          const auto& B = monos_[slot(p2, q2)];
          for (int i = 0; i < int(A.size()); ++i)
            for (int j = 0; j < int(B.size()); ++j) {
              int s = mono_wedge_sign(A[i], B[j]);
              if (s) tab.push_back({i, j, index_of_[A[i] | B[j]], double(s)});
            }
        }

  conj_.resize(S);
  const Mono hol_mask = (Mono(1) << n) - 1;
  for (int p = 0; p <= n; ++p)
    for (int q = 0; q <= n; ++q)
      for (Mono m : monos_[slot(p, q)]) {
        Mono h = m & hol_mask, a = m >> n;
        // conj(phi^I ∧ phibar^J) = phibar^I ∧ phi^J
        int s = mono_wedge_sign(h << n, a);
        conj_[slot(p, q)].push_back({index_of_[a | (h << n)], double(s)});
      }

  Mono m = 0;
  int s = 1;
  for (int j = 0; j < n; ++j) {
    s *= mono_wedge_sign(m, Mono(1) << j);
    m |= Mono(1) << j;
    s *= mono_wedge_sign(m, Mono(1) << (n + j));
    m |= Mono(1) << (n + j);
  }
  dv0_ = std::pow(cplx(0.0, 0.5), n) * double(s);
}

const Basis& Basis::get(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Basis>> cache;
  if (n < 1 || n > 5) throw Error("BidegreeError", "unsupported dimension " + std::to_string(n));
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot.reset(new Basis(n));
  return *slot;
}

int Basis::dim(int p, int q) const {
  if (p < 0 || q < 0 || p > n_ || q > n_) return 0;
  return static_cast<int>(monos_[slot(p, q)].size());
}

int Basis::index(Mono m) const { return index_of_.at(m); }

int Basis::hol_degree(Mono m, int n) { return std::popcount(m & ((Mono(1) << n) - 1)); }
int Basis::anti_degree(Mono m, int n) { return std::popcount(m >> n); }

const std::vector<Basis::WedgeEntry>& Basis::wedge_table(int p1, int q1, int p2, int q2) const {
  const int S = (n_ + 1) * (n_ + 1);
  return wedge_[slot(p1, q1) * S + slot(p2, q2)];
}

const std::vector<Basis::ConjEntry>& Basis::conj_table(int p, int q) const {
  return conj_[slot(p, q)];
}

Eigen::Index Model::points() const { return grid ? grid->size : 1; }

int degree_dims(const Model& model, int p, int q) {
  if (p < 0 || q < 0 || p > model.n || q > model.n)
    throw Error("BidegreeError", "bidegree (" + std::to_string(p) + "," + std::to_string(q) +
                                     ") out of range for n=" + std::to_string(model.n));
  return model.basis().dim(p, q);
}

Form Form::zero(const ModelPtr& m, int p, int q) {
  Form f;
  f.model = m;
  f.p = p;
  f.q = q;
  f.c = Mat::Zero(m->points(), m->basis().dim(p, q));
  return f;
}

Form Form::basis_element(const ModelPtr& m, int p, int q, int idx) {
  Form f = zero(m, p, q);
  f.c.col(idx).setOnes();
  return f;
}

Form Form::constant(const ModelPtr& m, int p, int q, const Vec& coeffs) {
  Form f = zero(m, p, q);
  if (coeffs.size() != f.c.cols()) throw Error("BidegreeError", "coefficient count mismatch");
  f.c.rowwise() = coeffs.transpose();
  return f;
}

void require_same_model(const Form& a, const Form& b) {
  if (a.model != b.model) throw Error("ModelMismatch", "forms live on different models");
}

Form& Form::operator+=(const Form& o) {
  require_same_model(*this, o);
  if (p != o.p || q != o.q) throw Error("BidegreeError", "adding forms of different bidegree");
  c += o.c;
  return *this;
}

Form& Form::operator-=(const Form& o) {
  require_same_model(*this, o);
  if (p != o.p || q != o.q) throw Error("BidegreeError", "subtracting forms of different bidegree");
  c -= o.c;
  return *this;
}

Form& Form::operator*=(cplx s) {
  c *= s;
  return *this;
}

Vec Form::flat() const { return Eigen::Map<const Vec>(c.data(), c.size()); }

Form Form::from_flat(const ModelPtr& m, int p, int q, const Vec& v) {
  Form f = zero(m, p, q);
  if (v.size() != f.c.size()) throw Error("BidegreeError", "flat vector size mismatch");
  f.c = Eigen::Map<const Mat>(v.data(), f.c.rows(), f.c.cols());
  return f;
}

Form operator+(Form a, const Form& b) { return a += b; }
Form operator-(Form a, const Form& b) { return a -= b; }
Form operator-(Form a) {
  a.c = -a.c;
  return a;
}
Form operator*(cplx s, Form a) { return a *= s; }
Form operator*(double s, Form a) { return a *= cplx(s, 0.0); }

Form scale_pointwise(const Eigen::VectorXcd& f, Form a) {
  if (f.size() != a.c.rows()) throw Error("ModelMismatch", "scalar field size mismatch");
  for (Eigen::Index k = 0; k < a.c.cols(); ++k) a.c.col(k) = a.c.col(k).cwiseProduct(f);
  return a;
}

Form wedge(const Form& a, const Form& b) {
  require_same_model(a, b);
  const ModelPtr& m = a.model;
  Form out = Form::zero(m, a.p + b.p, a.q + b.q);
  if (out.empty() || a.empty() || b.empty()) return out;
  for (const auto& e : m->basis().wedge_table(a.p, a.q, b.p, b.q))
    out.c.col(e.k) += e.sign * a.c.col(e.i).cwiseProduct(b.c.col(e.j));
  return out;
}

Form differential(Part part, const Form& a) {
  const ModelPtr& m = a.model;
  const int tp = part == Part::del ? a.p + 1 : a.p;
  const int tq = part == Part::del ? a.q : a.q + 1;
  Form out = Form::zero(m, tp, tq);
  if (out.empty() || a.empty()) return out;

  if (m->algebraic()) {
    const Mat& D = (part == Part::del ? m->dmat_del : m->dmat_dbar)[m->slot(a.p, a.q)];
    out.c = a.c * D.transpose();
    return out;
  }

  const TorusGrid& g = *m->grid;
  const Eigen::Index G = g.size;
  Mat spec(G, a.c.cols());
  for (Eigen::Index i = 0; i < a.c.cols(); ++i) g.forward(a.c.col(i).data(), spec.col(i).data());
  Mat acc = Mat::Zero(G, out.c.cols());
  const auto& tab = part == Part::del ? m->basis().wedge_table(1, 0, a.p, a.q)
                                      : m->basis().wedge_table(0, 1, a.p, a.q);
  const auto& mult = part == Part::del ? g.mult_del : g.mult_dbar;
  for (const auto& e : tab) acc.col(e.k) += e.sign * mult[e.i].cwiseProduct(spec.col(e.j));
  for (Eigen::Index k = 0; k < acc.cols(); ++k) g.backward(acc.col(k).data(), out.c.col(k).data());
  return out;
}

Form conjugate(const Form& a) {
  Form out = Form::zero(a.model, a.q, a.p);
  if (a.empty()) return out;
  const auto& tab = a.model->basis().conj_table(a.p, a.q);
  for (int i = 0; i < a.channels(); ++i) out.c.col(tab[i].target) = tab[i].sign * a.c.col(i).conjugate();
  return out;
}

cplx integrate_top(const Form& a) {
  const int n = a.model->n;
  if (a.p != n || a.q != n) throw Error("BidegreeError", "integrate_top needs an (n,n)-form");
  return a.c.col(0).mean() / a.model->basis().dv0_coefficient();
}

double coeff_norm(const Form& a) {
  if (a.c.size() == 0) return 0.0;
  return std::sqrt(a.c.squaredNorm() / double(a.c.rows()));
}

std::vector<Mat> hermitian_matrices(const Form& omega) {
  const int n = omega.model->n;
  if (omega.p != 1 || omega.q != 1) throw Error("BidegreeError", "metric form must be (1,1)");
  std::vector<Mat> H(omega.points(), Mat(n, n));
  for (Eigen::Index x = 0; x < omega.points(); ++x)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) H[x](j, k) = cplx(0.0, -2.0) * omega.c(x, j * n + k);
  return H;
}

Form form_from_hermitian(const ModelPtr& m, const std::vector<Mat>& H) {
  const int n = m->n;
  Form f = Form::zero(m, 1, 1);
  if (Eigen::Index(H.size()) != f.points()) throw Error("ModelMismatch", "matrix field size mismatch");
  for (Eigen::Index x = 0; x < f.points(); ++x)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) f.c(x, j * n + k) = cplx(0.0, 0.5) * H[x](j, k);
  return f;
}

Form reference_metric(const ModelPtr& m) {
  std::vector<Mat> H(m->points(), Mat::Identity(m->n, m->n));
  return form_from_hermitian(m, H);
}

Form reference_volume(const ModelPtr& m) {
  Form f = Form::zero(m, m->n, m->n);
  f.c.col(0).setConstant(m->basis().dv0_coefficient());
  return f;
}

Form power(const Form& a, int k) {
  Form r = Form::zero(a.model, 0, 0);
  r.c.setOnes();
  for (int i = 0; i < k; ++i) r = wedge(r, a);
  return r;
}

MixedForm& MixedForm::add(const Form& f) {
  for (auto& part : parts)
    if (part.p == f.p && part.q == f.q) {
      part += f;
      return *this;
    }
  parts.push_back(f);
  return *this;
}

Form MixedForm::component(const ModelPtr& m, int p, int q) const {
  for (const auto& part : parts)
    if (part.p == p && part.q == q) return part;
  return Form::zero(m, p, q);
}

MixedForm wedge(const MixedForm& a, const MixedForm& b) {
  MixedForm out;
  for (const auto& x : a.parts)
    for (const auto& y : b.parts) {
      Form w = wedge(x, y);
      if (!w.empty()) out.add(w);
    }
  return out;
}

MixedForm d_total(const MixedForm& a) {
  MixedForm out;
  for (const auto& x : a.parts)
    for (Part part : {Part::del, Part::dbar}) {
      Form w = differential(part, x);
      if (!w.empty()) out.add(w);
    }
  return out;
}

}  // namespace hsg
