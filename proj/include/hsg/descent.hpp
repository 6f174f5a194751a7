#pragma once

#include "hsg/hs.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace hsg {

struct DescentOptions {
  double tol = 1e-6;  // stop when ||dbar* omega|| < tol
  int max_iters = 200;
  double c1 = 1e-4;      // Armijo constant
  double backtrack = 0.5;
  double safety = 0.9;   // fraction of the distance to the positivity boundary
  double min_step = 1e-12;
  TorsionMode mode = TorsionMode::dim3;
  // Record a central-difference slope of F along each accepted direction.
  bool slope_check = true;
};

struct DescentIterate {
  int k = 0;
  double F = 0.0, vol = 0.0, A = 0.0;
  double dbar_star_omega = 0.0;  // ||dbar* omega_k||
  double d_omega = 0.0;          // ||d omega_k||
  double dF = 0.0;               // -2 ||dbar* omega_k||^2
  double step = 0.0;             // accepted t (0 on the last row)
  double secant_slope = 0.0;     // (F_{k+1} - F_k) / t along the accepted step
  double probe_slope = 0.0;      // central difference of F at t = 0 with step 1e-3 t
  double max_step = 0.0;         // positivity limit before the safety factor
};

struct DescentTrace {
  std::vector<DescentIterate> iterates;
  std::string termination;  // converged | max_iters
  MetricPtr final_metric;
};

// Thrown by descend with the partial trace attached.
class DescentError : public Error {
 public:
  DescentError(std::string kind, const std::string& msg, DescentTrace trace)
      : Error(std::move(kind), msg), trace_(std::move(trace)) {}
  const DescentTrace& trace() const { return trace_; }

 private:
  DescentTrace trace_;
};

// Steepest descent of F over the Aeppli class of g0 along u = dbar* omega.
// Throws DescentError with kind LineSearchStalled or PositivityBoundary.
DescentTrace descend(const Metric& g0, const DescentOptions& opt = {});

// Largest t with omega + t gamma positive definite (infinity if unbounded).
double positivity_limit(const Metric& g, const Form& gamma);

struct CriticalCertificate {
  double balanced_defect = 0.0;  // ||dbar* omega||
  double skt_residual = 0.0;     // ||del dbar omega||
  double kahler_defect = 0.0;    // ||d omega||
  double kahler_bound = 0.0;     // derived tolerance on ||d omega||
  bool critical = false;
  bool kahler = false;
};
// For SKT metrics in dimension 3, ||d omega|| = sqrt(2) ||dbar* omega||, so
// the Kähler tolerance is derived from tol with that factor.
CriticalCertificate certify_critical(const Metric& g, double tol);

void write_trace_csv(std::ostream& os, const DescentTrace& t);

}  // namespace hsg
