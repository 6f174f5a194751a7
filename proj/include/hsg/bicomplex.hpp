#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsg {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
inline constexpr cplx I{0.0, 1.0};

// Every failure the library raises carries a stable kind tag for reports.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

private:
  std::string kind_;
};

enum class Part { del, dbar };
enum class Backend { lie, torus };

// Monomials in phi^1..phi^n, phibar^1..phibar^n as bitmasks; bit j < n is
// phi^{j+1}, bit n+j is phibar^{j+1}. Canonical order is increasing bit.
using Mono = std::uint32_t;

// Sign of a∧b for disjoint monomials, 0 if they overlap.
int mono_wedge_sign(Mono a, Mono b);

class Basis {
public:
  static const Basis& get(int n);

  int n() const { return n_; }
  // Number of channels; zero outside 0..n.
  int dim(int p, int q) const;
  Mono mono(int p, int q, int idx) const { return monos_[slot(p, q)][idx]; }
  int index(Mono m) const;  // position of m inside its own bidegree
  static int hol_degree(Mono m, int n);
  static int anti_degree(Mono m, int n);

  struct WedgeEntry {
    int i, j, k;
    double sign;
  };
  const std::vector<WedgeEntry>& wedge_table(int p1, int q1, int p2, int q2) const;

  // conj(e_i) = sign * e_{target} in bidegree (q,p).
  struct ConjEntry {
    int target;
    double sign;
  };
  const std::vector<ConjEntry>& conj_table(int p, int q) const;

  // Coefficient of dV0 = (i/2)^n phi^1∧phibar^1∧...∧phi^n∧phibar^n on the
  // single (n,n) basis element.
  cplx dv0_coefficient() const { return dv0_; }

private:
  explicit Basis(int n);
  int slot(int p, int q) const { return p * (n_ + 1) + q; }

  int n_;
  std::vector<std::vector<Mono>> monos_;
  std::vector<int> index_of_;
  std::vector<std::vector<WedgeEntry>> wedge_;
  std::vector<std::vector<ConjEntry>> conj_;
  cplx dv0_;
};

struct TorusGrid;

class Model {
public:
  Backend backend = Backend::lie;
  int n = 3;
  std::string name;
  // Algebraic part of the differentials, one channel matrix per source
  // bidegree (lie backend; also internal constant-symbol models).
  std::vector<Mat> dmat_del, dmat_dbar;
  // Spectral grid (torus backend only).
  std::shared_ptr<const TorusGrid> grid;

  Eigen::Index points() const;
  const Basis& basis() const { return Basis::get(n); }
  int slot(int p, int q) const { return p * (n + 1) + q; }
  bool algebraic() const { return !grid; }
};

using ModelPtr = std::shared_ptr<const Model>;

// Number of scalar channels of a (p,q)-form; throws on out-of-range input.
int degree_dims(const Model& model, int p, int q);

// A (p,q)-form: one column of samples per basis channel, one row per grid
// point (a single row on the lie backend). Bidegrees past n are allowed
// and carry zero channels.
struct Form {
  ModelPtr model;
  int p = 0, q = 0;
  Mat c;

  static Form zero(const ModelPtr& m, int p, int q);
  static Form basis_element(const ModelPtr& m, int p, int q, int idx);
  // Constant coefficients broadcast over the grid.
  static Form constant(const ModelPtr& m, int p, int q, const Vec& coeffs);

  int channels() const { return static_cast<int>(c.cols()); }
  Eigen::Index points() const { return c.rows(); }
  int degree() const { return p + q; }
  bool empty() const { return c.cols() == 0; }

  Form& operator+=(const Form& o);
  Form& operator-=(const Form& o);
  Form& operator*=(cplx s);
  // Flattened coefficient vector, channel-major.
  Vec flat() const;
  static Form from_flat(const ModelPtr& m, int p, int q, const Vec& v);
};

Form operator+(Form a, const Form& b);
Form operator-(Form a, const Form& b);
Form operator-(Form a);
Form operator*(cplx s, Form a);
Form operator*(double s, Form a);

// Multiply by a scalar function sampled on the grid.
Form scale_pointwise(const Eigen::VectorXcd& f, Form a);

Form wedge(const Form& a, const Form& b);
Form differential(Part part, const Form& a);
Form conjugate(const Form& a);
cplx integrate_top(const Form& a);

// Sum of |coefficient|^2 over channels, averaged over the grid; a
// metric-free size used for residual reporting.
double coeff_norm(const Form& a);

// Hermitian matrix H with omega = (i/2) sum H_jk phi^j ∧ phibar^k, per point.
std::vector<Mat> hermitian_matrices(const Form& omega);
Form form_from_hermitian(const ModelPtr& m, const std::vector<Mat>& H);

// omega0 = (i/2) sum phi^k ∧ phibar^k.
Form reference_metric(const ModelPtr& m);
Form reference_volume(const ModelPtr& m);
Form power(const Form& a, int k);  // a^k, k >= 0 (a^0 = 1)

// Forms of mixed bidegree, kept as a list of pure pieces.
struct MixedForm {
  std::vector<Form> parts;
  MixedForm& add(const Form& f);
  Form component(const ModelPtr& m, int p, int q) const;
};
MixedForm wedge(const MixedForm& a, const MixedForm& b);
MixedForm d_total(const MixedForm& a);

void require_same_model(const Form& a, const Form& b);

}  // namespace hsg
