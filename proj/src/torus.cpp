#include "hsg/torus.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace hsg {

namespace {

std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

const char* kNames[kRealDims] = {"x1", "x2", "x3", "y1", "y2", "y3"};

int wave_number(int i, int N, bool odd) {
  if (2 * i < N) return i;
  if (2 * i == N) return odd ? 0 : N / 2;
  return i - N;
}

bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

const char* coordinate_name(int d) { return kNames[d]; }

int coordinate_index(const std::string& name) {
  for (int d = 0; d < kRealDims; ++d)
    if (name == kNames[d]) return d;
  throw Error("InvalidInput", "unknown torus coordinate '" + name + "'");
}

TorusGrid::TorusGrid(const std::array<int, kRealDims>& res) : resolution(res) {
  for (int d = 0; d < kRealDims; ++d)
    if (res[d] > 1) active.push_back(d);
  size = 1;
  for (int d : active) size *= res[d];

  for (int d = 0; d < kRealDims; ++d) {
    wave[d] = Eigen::VectorXd::Zero(size);
    wave_odd[d] = Eigen::VectorXd::Zero(size);
  }
  for (Eigen::Index x = 0; x < size; ++x) {
    auto idx = multi_index(x);
    for (int d : active) {
      wave[d][x] = wave_number(idx[d], res[d], false);
      wave_odd[d][x] = wave_number(idx[d], res[d], true);
    }
  }
  for (int j = 0; j < 3; ++j) {
    mult_del[j] = 0.5 * (I * wave_odd[j].cast<cplx>() + wave_odd[j + 3].cast<cplx>());
    mult_dbar[j] = 0.5 * (I * wave_odd[j].cast<cplx>() - wave_odd[j + 3].cast<cplx>());
  }

  if (!active.empty()) {
    std::vector<int> dims;
    for (int d : active) dims.push_back(res[d]);
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto* a = fftw_alloc_complex(size);
    auto* b = fftw_alloc_complex(size);
    plan_fwd_ = fftw_plan_dft(int(dims.size()), dims.data(), a, b, FFTW_FORWARD,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
    plan_bwd_ = fftw_plan_dft(int(dims.size()), dims.data(), a, b, FFTW_BACKWARD,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(a);
    fftw_free(b);
  }
}

TorusGrid::~TorusGrid() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

void TorusGrid::forward(const cplx* in, cplx* out) const {
  if (!plan_fwd_) {
    std::copy(in, in + size, out);
    return;
  }
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_),
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void TorusGrid::backward(const cplx* in, cplx* out) const {
  if (!plan_bwd_) {
    std::copy(in, in + size, out);
    return;
  }
  fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_),
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
  const double s = 1.0 / double(size);
  for (Eigen::Index i = 0; i < size; ++i) out[i] *= s;
}

std::array<int, kRealDims> TorusGrid::multi_index(Eigen::Index point) const {
  std::array<int, kRealDims> idx{};
  for (auto it = active.rbegin(); it != active.rend(); ++it) {
    idx[*it] = int(point % resolution[*it]);
    point /= resolution[*it];
  }
  return idx;
}

double TorusGrid::coordinate(Eigen::Index point, int d) const {
  return 2.0 * std::numbers::pi * multi_index(point)[d] / resolution[d];
}

ModelPtr make_torus_model(const std::array<int, kRealDims>& resolution,
                          const std::array<bool, kRealDims>& mask) {
  std::array<int, kRealDims> res{};
  for (int d = 0; d < kRealDims; ++d) {
    if (!mask[d]) {
      res[d] = 1;
      continue;
    }
    if (resolution[d] < 4 || !power_of_two(resolution[d]))
      throw Error("InvalidResolution", std::string("resolution on ") + kNames[d] +
                                           " must be a power of two >= 4");
    res[d] = resolution[d];
  }
  auto m = std::make_shared<Model>();
  m->backend = Backend::torus;
  m->n = 3;
  std::string label = "torus3[";
  for (int d = 0; d < kRealDims; ++d)
    if (mask[d]) label += std::string(kNames[d]) + "=" + std::to_string(res[d]) + ",";
  if (label.back() == ',') label.pop_back();
  m->name = label + "]";
  m->grid = std::make_shared<TorusGrid>(res);
  return m;
}

ModelPtr make_torus_model(int N, const std::vector<int>& active_coords) {
  std::array<int, kRealDims> res{};
  std::array<bool, kRealDims> mask{};
  for (int d : active_coords) {
    if (d < 0 || d >= kRealDims) throw Error("InvalidInput", "coordinate index out of range");
    mask[d] = true;
    res[d] = N;
  }
  return make_torus_model(res, mask);
}

Eigen::VectorXcd synthesize_function(const ModelPtr& model, const std::vector<FrequencyTerm>& table) {
  if (!model->grid) throw Error("InvalidInput", "synthesize needs a torus model");
  const TorusGrid& g = *model->grid;
  for (const auto& t : table)
    for (int d = 0; d < kRealDims; ++d) {
      if (t.k[d] == 0) continue;
      if (g.resolution[d] == 1)
        throw Error("InvalidInput", std::string("frequency along masked coordinate ") + kNames[d]);
      if (4 * std::abs(t.k[d]) >= g.resolution[d])
        throw Error("AliasingRisk", std::string("frequency ") + std::to_string(t.k[d]) + " on " +
                                        kNames[d] + " exceeds a quarter of the resolution");
    }
  Eigen::VectorXcd f = Eigen::VectorXcd::Zero(g.size);
  for (Eigen::Index x = 0; x < g.size; ++x)
    for (const auto& t : table) {
      double phase = 0.0;
      for (int d : g.active) phase += t.k[d] * g.coordinate(x, d);
      f[x] += t.amplitude * std::exp(I * phase);
    }
  return f;
}

Form synthesize_form(const ModelPtr& model, int p, int q, const std::vector<FrequencyTerm>& table,
                     bool real) {
  Form f = Form::zero(model, p, q);
  for (const auto& t : table)
    if (t.channel < 0 || t.channel >= f.channels())
      throw Error("InvalidInput", "frequency table channel out of range");
  for (int ch = 0; ch < f.channels(); ++ch) {
    std::vector<FrequencyTerm> sub;
    for (const auto& t : table)
      if (t.channel == ch) sub.push_back(t);
    if (!sub.empty()) f.c.col(ch) = synthesize_function(model, sub);
  }
  if (real) {
    if (p != q) throw Error("InvalidInput", "real forms need p == q");
    f = 0.5 * (f + conjugate(f));
  }
  return f;
}

ModelPtr refine(const ModelPtr& model, int factor) {
  if (!model->grid) throw Error("InvalidInput", "refine needs a torus model");
  if (!power_of_two(factor)) throw Error("InvalidInput", "refinement factor must be a power of two");
  if (factor == 1) return model;
  std::array<int, kRealDims> res = model->grid->resolution;
  std::array<bool, kRealDims> mask{};
  for (int d : model->grid->active) {
    mask[d] = true;
    res[d] *= factor;
  }
  return make_torus_model(res, mask);
}

Form resample(const Form& a, const ModelPtr& target) {
  const ModelPtr& src = a.model;
  if (!src->grid || !target->grid) throw Error("InvalidInput", "resample needs torus models");
  const TorusGrid& gs = *src->grid;
  const TorusGrid& gt = *target->grid;
  if (gs.active != gt.active) throw Error("ModelMismatch", "resample needs equal dependence masks");
  if (src == target) return a;

  Form out = Form::zero(target, a.p, a.q);
  const double scale = double(gt.size) / double(gs.size);
  std::vector<Eigen::Index> strides(kRealDims, 0);
  {
    Eigen::Index s = 1;
    for (auto it = gt.active.rbegin(); it != gt.active.rend(); ++it) {
      strides[*it] = s;
      s *= gt.resolution[*it];
    }
  }
  Vec hat(gs.size), acc(gt.size);
  for (int ch = 0; ch < a.channels(); ++ch) {
    gs.forward(a.c.col(ch).data(), hat.data());
    acc.setZero();
    for (Eigen::Index x = 0; x < gs.size; ++x) {
      if (hat[x] == cplx(0.0, 0.0)) continue;
      auto idx = gs.multi_index(x);
      // Per-dimension target slots with weights.
      std::vector<std::vector<std::pair<int, double>>> opts;
      bool dropped = false;
      for (int d : gs.active) {
        const int Ns = gs.resolution[d], Nt = gt.resolution[d];
        int k = wave_number(idx[d], Ns, false);
        std::vector<std::pair<int, double>> o;
        if (2 * idx[d] == Ns && Nt > Ns) {
          o.push_back({Ns / 2, 0.5});
          o.push_back({Nt - Ns / 2, 0.5});
        } else if (2 * std::abs(k) < Nt || (2 * k == Nt)) {
          o.push_back({((k % Nt) + Nt) % Nt, 1.0});
        } else if (2 * k == -Nt) {
          o.push_back({Nt / 2, 1.0});
        } else {
          dropped = true;
        }
        opts.push_back(o);
      }
      if (dropped) continue;
      std::vector<std::size_t> pick(opts.size(), 0);
      while (true) {
        Eigen::Index t = 0;
        double w = 1.0;
        for (std::size_t i = 0; i < opts.size(); ++i) {
          t += opts[i][pick[i]].first * strides[gs.active[i]];
          w *= opts[i][pick[i]].second;
        }
        acc[t] += w * scale * hat[x];
        std::size_t i = 0;
        while (i < pick.size() && ++pick[i] == opts[i].size()) pick[i++] = 0;
        if (i == pick.size()) break;
      }
    }
    gt.backward(acc.data(), out.c.col(ch).data());
  }
  return out;
}

double spectral_tail(const Form& a) {
  if (!a.model->grid) return 0.0;
  const TorusGrid& g = *a.model->grid;
  double tail = 0.0, top = 0.0;
  Vec hat(g.size);
  for (int ch = 0; ch < a.channels(); ++ch) {
    g.forward(a.c.col(ch).data(), hat.data());
    for (Eigen::Index x = 0; x < g.size; ++x) {
      const double v = std::abs(hat[x]);
      top = std::max(top, v);
      for (int d : g.active)
        if (4 * std::abs(g.wave[d][x]) >= g.resolution[d]) {
          tail = std::max(tail, v);
          break;
        }
    }
  }
  return top > 0.0 ? tail / top : 0.0;
}

Form standard_perturbation(const ModelPtr& model, double eps) {
  FrequencyTerm t;
  t.channel = 1;
  t.k[0] = 1;
  t.amplitude = eps;
  return synthesize_form(model, 1, 0, {t});
}

}  // namespace hsg
