#pragma once

#include "hsg/bicomplex.hpp"
#include "hsg/torus.hpp"

#include <random>

namespace hsg::testing {

inline Form random_form(const ModelPtr& m, int p, int q, std::mt19937& rng) {
  std::normal_distribution<double> nd;
  Form f = Form::zero(m, p, q);
  for (Eigen::Index r = 0; r < f.c.rows(); ++r)
    for (Eigen::Index k = 0; k < f.c.cols(); ++k) f.c(r, k) = cplx(nd(rng), nd(rng));
  return f;
}

inline double max_abs(const Form& f) { return f.c.size() ? f.c.cwiseAbs().maxCoeff() : 0.0; }

// A constant positive metric with well-spread eigenvalues.
inline Form random_metric(const ModelPtr& m, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  const int n = m->n;
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cplx(nd(rng), nd(rng));
  std::vector<Mat> H(m->points(), 0.3 * A * A.adjoint() + Mat::Identity(n, n));
  return form_from_hermitian(m, H);
}

// omega0 + del ubar + dbar u with u from the frequency table.
inline Form aeppli_shift(const Form& omega, const Form& u) {
  Form du = differential(Part::dbar, u);
  return omega + du + conjugate(du);
}

inline Form perturbed_metric(const ModelPtr& m, double eps = 0.05) {
  return aeppli_shift(reference_metric(m), standard_perturbation(m, eps));
}

}  // namespace hsg::testing
