#pragma once

#include "hsg/bicomplex.hpp"

#include <array>
#include <vector>

namespace hsg {

// Real coordinates are ordered x1,x2,x3,y1,y2,y3 with z_j = x_j + i y_j,
// each periodic on [0, 2*pi).
inline constexpr int kRealDims = 6;
const char* coordinate_name(int d);
int coordinate_index(const std::string& name);

struct TorusGrid {
  std::array<int, kRealDims> resolution{};  // 1 on masked-out coordinates
  std::vector<int> active;
  Eigen::Index size = 1;
  // Wave numbers per point in spectral order; odd-derivative versions have
  // the Nyquist mode zeroed.
  std::array<Eigen::VectorXd, kRealDims> wave, wave_odd;
  // Spectral multipliers of d/dz_j and d/dzbar_j.
  std::array<Eigen::VectorXcd, 3> mult_del, mult_dbar;

  TorusGrid(const std::array<int, kRealDims>& res);
  ~TorusGrid();
  TorusGrid(const TorusGrid&) = delete;
  TorusGrid& operator=(const TorusGrid&) = delete;

  // Unnormalised forward DFT and normalised inverse.
  void forward(const cplx* in, cplx* out) const;
  void backward(const cplx* in, cplx* out) const;
  double coordinate(Eigen::Index point, int d) const;
  std::array<int, kRealDims> multi_index(Eigen::Index point) const;

private:
  void* plan_fwd_ = nullptr;
  void* plan_bwd_ = nullptr;
};

// mask[d] true means fields may depend on coordinate d.
ModelPtr make_torus_model(const std::array<int, kRealDims>& resolution,
                          const std::array<bool, kRealDims>& mask);
ModelPtr make_torus_model(int N, const std::vector<int>& active_coords);

struct FrequencyTerm {
  int channel = 0;
  std::array<int, kRealDims> k{};
  cplx amplitude{0.0, 0.0};
};

// Band-limited form sum amplitude * e^{i k.x} e_channel. Frequencies must
// stay below a quarter of the resolution so that products do not alias.
Form synthesize_form(const ModelPtr& model, int p, int q,
                     const std::vector<FrequencyTerm>& table, bool real = false);

// Scalar function from a frequency table (channel ignored).
Eigen::VectorXcd synthesize_function(const ModelPtr& model,
                                     const std::vector<FrequencyTerm>& table);

ModelPtr refine(const ModelPtr& model, int factor);
// Spectral interpolation (finer target) or truncation (coarser target).
Form resample(const Form& a, const ModelPtr& target);

// Largest spectral coefficient magnitude beyond a quarter of the resolution,
// relative to the largest overall; an aliasing indicator.
double spectral_tail(const Form& a);

// The standard perturbation u = eps * e^{i x1} dz^2.
Form standard_perturbation(const ModelPtr& model, double eps = 0.05);

}  // namespace hsg
