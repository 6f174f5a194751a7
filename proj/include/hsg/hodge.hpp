#pragma once

#include "hsg/bicomplex.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace hsg {

enum class Laplacian { del, dbar, bc, tilde };
const char* to_string(Laplacian k);

class Metric;
using MetricPtr = std::shared_ptr<const Metric>;

class Metric {
public:
  // Throws NotPositive with the worst eigenvalue and its grid point.
  static MetricPtr create(const Form& omega, double min_eig = 1e-9);

  const Form& omega() const { return omega_; }
  const ModelPtr& model() const { return omega_.model; }
  int n() const { return omega_.model->n; }
  const std::vector<Mat>& H() const { return H_; }
  // dV_omega = density * dV0 at each point.
  const Eigen::VectorXd& volume_density() const { return vol_; }
  double min_eigenvalue() const { return min_eig_; }
  Eigen::Index worst_point() const { return worst_; }

  // Pointwise Gram matrices <e_i, e_k> of the (p,q) basis.
  const std::vector<Mat>& gram(int p, int q) const;
  // Pointwise matrices of the Hodge star from (p,q) to (n-q, n-p).
  const std::vector<Mat>& star_matrices(int p, int q) const;

  struct GreenCache;
  std::shared_ptr<GreenCache> green_cache(Laplacian kind, int p, int q) const;
  void store_green_cache(Laplacian kind, int p, int q, std::shared_ptr<GreenCache> c) const;

private:
  Metric() = default;
  Form omega_;
  std::vector<Mat> H_, g1_;
  Eigen::VectorXd vol_;
  double min_eig_ = 0.0;
  Eigen::Index worst_ = 0;

  mutable std::mutex mu_;
  mutable std::map<int, std::shared_ptr<std::vector<Mat>>> gram_, star_;
  mutable std::map<std::tuple<int, int, int>, std::shared_ptr<GreenCache>> green_;
};

MetricPtr metric_from_form(const Form& omega);

Eigen::VectorXcd pointwise_inner(const Metric& g, const Form& a, const Form& b);
Eigen::VectorXd pointwise_norm2(const Metric& g, const Form& a);
cplx inner(const Metric& g, const Form& a, const Form& b);
double norm(const Metric& g, const Form& a);

Form star(const Metric& g, const Form& a);
Form adjoint_diff(const Metric& g, Part part, const Form& a);
Form lefschetz(const Metric& g, const Form& a);    // omega ∧ a
Form contraction(const Metric& g, const Form& a);  // Lambda, the adjoint of L

Form laplacian(const Metric& g, Laplacian kind, const Form& a);

struct GreenOptions {
  enum class Method { automatic, pseudoinverse, cg } method = Method::automatic;
  double rel_tol = 1e-9;
  int max_iters = 0;  // 0 picks 10 * sqrt(unknowns per channel)
};

struct GreenResult {
  Form x;
  double discarded = 0.0;  // L2 norm of the harmonic part removed from b
  int iterations = 0;
  std::vector<double> history;
};

GreenResult green_solve(const Metric& g, Laplacian kind, const Form& b, const GreenOptions& opt = {});
Form green(const Metric& g, Laplacian kind, const Form& b);
Form harmonic_project(const Metric& g, Laplacian kind, const Form& a);
// L2_omega-orthonormal basis of the kernel.
std::vector<Form> harmonic_basis(const Metric& g, Laplacian kind, int p, int q);

struct Decomposition {
  Form harmonic, middle, co;
};
// bc: (ker, Im del delbar, Im del* + Im delbar*)
// tilde: (ker, Im delbar + del(ker delbar), Im(del* p'') + Im delbar*)
Decomposition decompose_3space(const Metric& g, Laplacian flavor, const Form& a);

// Dense matrix of a linear map on (p,q)-forms of a model, columns indexed by
// the flattened (channel-major) coefficients.
Mat dense_operator(const ModelPtr& m, int p, int q, const std::function<Form(const Form&)>& f);

// Weighted Gram factor R with <a,b> = (R b)^H (R a) on flattened
// coefficients; dense, so torus grids must be coarse.
Mat orthonormalizer(const Metric& g, int p, int q);

// Orthonormal (w.r.t. the metric) basis of the span of the given forms.
std::vector<Form> orthonormalize(const Metric& g, std::vector<Form> forms, double tol = 1e-10);
Form project_onto(const Metric& g, const std::vector<Form>& onb, const Form& a);

}  // namespace hsg
