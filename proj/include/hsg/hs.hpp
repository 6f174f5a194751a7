#pragma once

#include "hsg/hodge.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hsg {

// Default residual tolerance: exact small systems on the lie backend,
// spectral accuracy on the torus.
double default_tolerance(const Model& m);

enum class TorsionMode { hs_min, dim3, skt };
const char* to_string(TorsionMode m);

struct TorsionResiduals {
  double del_rho = 0.0;          // ||del rho||
  double dbar_rho_plus_del_omega = 0.0;  // ||dbar rho + del omega||
  double minimality = 0.0;       // largest overlap with the mode's forbidden kernel
};

struct TorsionReport {
  TorsionMode mode = TorsionMode::hs_min;
  Form rho20, rho02;
  double F = 0.0;        // integral of |rho|^2 dV
  double F_wedge = 0.0;  // integral of rho ∧ rhobar ∧ omega
  double vol = 0.0;
  double A = 0.0;
  double tilde_mass = 0.0;  // mass of (1 + |rho|^2) dV
  TorsionResiduals residuals;

  // G is defined only when rho^{0,2} is dbar-exact.
  bool torsion_class_zero = false;
  std::optional<double> G, G_via_laplacian, G_via_xi;
  double xi_residual = 0.0;  // ||dbar xi - rho^{0,2}||
  Form xi01;
  // Overlaps <rho^{0,2}, h> for an orthonormal basis of ker tilde-Laplacian
  // (lie backend only), and the test rho = 0 <=> dbar* rho^{0,2} = 0.
  std::optional<double> max_tilde_harmonic_overlap;
  bool zero_equivalence_holds = true;
  double tolerance = 0.0;
};

// The (2,0)-torsion form by the chosen route. Throws NotFeasible when the
// defining system has no solution and NotSKT for the skt mode on a non-SKT
// metric.
TorsionReport torsion_form(const Metric& g, TorsionMode mode = TorsionMode::hs_min);

// Minimal-norm solution of {del rho = 0, dbar rho = -del omega} by dense
// least squares; lie models and coarse torus grids.
Form torsion_least_squares(const Metric& g);

// torsion_form plus F (both routes, cross-checked), Vol, A, tilde-volume
// mass and G. Throws InconsistentEnergy if the two F routes disagree.
TorsionReport energy_and_volume(const Metric& g, TorsionMode mode = TorsionMode::hs_min);

// F, Vol, A and the tilde-volume mass only; skips minimality and G.
TorsionReport torsion_energy(const Metric& g, TorsionMode mode = TorsionMode::hs_min);

double volume(const Metric& g);

struct Lefschetz {
  Form alpha;  // (1,0)
  Form prim;   // (2,1), primitive part of del omega
  double prim_contraction = 0.0;  // max |Lambda prim|
  Eigen::VectorXd sign_field;     // |alpha ∧ omega|^2 - |prim|^2 per point
  double identity_residual = 0.0; // pointwise residual of i del w ∧ dbar w = s dV
  double integral_alpha = 0.0;    // integral of |alpha ∧ omega|^2 dV
  double integral_prim = 0.0;     // integral of |prim|^2 dV
};
Lefschetz lefschetz_alpha(const Metric& g);

struct Classification {
  bool kahler = false, skt = false, gauduchon = false, balanced = false, strongly_gauduchon = false,
       hs_feasible = false;
  struct Residuals {
    double d_omega = 0.0, ddbar_omega = 0.0, ddbar_omega2 = 0.0, d_omega2 = 0.0, sg = 0.0, hs = 0.0;
  } residuals;
  // Sign field partition: U = {s < -tol}, V = {s > tol}, Z otherwise.
  Eigen::VectorXd sign_field;
  std::vector<Eigen::Index> U, V, Z;
  bool sign_partition_consistent = true;  // for SKT: gauduchon <=> U and V empty
  double tolerance = 0.0;
};
Classification classify_metric(const Metric& g);

// True when f (of bidegree (p,q)) lies in Im dbar, tested as dbar f = 0 and
// f orthogonal to the dbar-harmonic space; the residual is returned.
bool in_dbar_image(const Metric& g, const Form& f, double tol, double* residual = nullptr);

struct Completion {
  Form Omega;  // (2,2)
  Form gamma;  // (1,1) root with gamma^2 = Omega
  MixedForm tilde_omega;
  bool gamma_sg = false;
  double root_residual = 0.0;           // ||gamma^2 - Omega||
  double omega_identity_residual = 0.0;  // (1/6)∫Ω∧ω - (2/3)Vol - (1/3)A
  double dbar_Omega_residual = 0.0;      // ||dbar Ω + 2 del(rho02 ∧ ω)||
  double d_tilde_residual = 0.0;         // ||d ω~||
  double tilde_volume = 0.0;             // ∫ ω~^3 / 3!
  double tilde_volume_residual = 0.0;    // |tilde_volume - A|
};
Completion sg_and_completion(const Metric& g, const TorsionReport& t);

// The positive (1,1)-form gamma with gamma^2 = Omega; throws RootFailure.
Form square_root(const Form& Omega);

struct PerturbReport {
  MetricPtr metric;
  double rho_transport = 0.0;  // ||rho' - (rho + del u)||
  double A_change = 0.0;       // |A' - A|
  double A_before = 0.0, A_after = 0.0;
  std::optional<double> closed_case_residual;  // when del u = 0
};
PerturbReport aeppli_perturb(const Metric& g, const Form& u, TorsionMode mode = TorsionMode::hs_min);

struct BCPerturbReport {
  MetricPtr metric;
  double rho_coincidence = 0.0;  // ||rho' - rho||
  double l2_relation = 0.0;      // residual of the norm relation under omega'
  double vol_change = 0.0;       // Vol' - Vol
  double vol_first_order = 0.0;  // ∫ φ i del w ∧ dbar w
};
// omega' = omega + i del dbar phi for a real function phi.
BCPerturbReport ddbar_perturb(const Metric& g, const Eigen::VectorXd& phi);

struct FirstVariation {
  double dF = 0.0, dVol = 0.0, dA = 0.0;
};
FirstVariation first_variation(const Metric& g, const Form& u);
// d/dt Vol(omega + t i del dbar phi) at t = 0 for an SKT metric.
double volume_variation_bc(const Metric& g, const Eigen::VectorXd& phi);

// Lemma-type check on Gauduchon strata: returns the pair
// (|∫(ω + i∂∂̄φ)^3 - ∫ω^3|, ||∂∂̄(ω + i∂∂̄φ)^2||).
std::pair<double, double> gauduchon_stratum_check(const Metric& g, const Eigen::VectorXd& phi);

struct MACoefficients {
  double c = 0.0;
  double c_min = 0.0;          // 6A / ∫ (Λ_γ ω)^3 dV_γ
  double holder_gap = 0.0;     // cube-root Hölder gap at eta = 0
  double conformal_gap = 0.0;  // ∫(Λ_γ ω)^3 dV_γ - 6A/c
  double b_lower = 0.0;        // Vol / A
  Eigen::VectorXd f_normaliser;  // Λ_γ ω per point
};
MACoefficients ma_constants(const Metric& omega, const Metric& gamma, double A);

// The omega-normalised metric in the conformal class of gamma.
Form omega_normalised(const Metric& omega, const Metric& gamma);

struct HoloAudit {
  int tested = 0;
  double max_del = 0.0;  // max ||del xi|| over the tested dbar-closed (1,0)-forms
  bool passes = false;
};
HoloAudit holo_oneform_audit(const Metric& g);

Form i_ddbar(const ModelPtr& m, const Eigen::VectorXd& phi);

}  // namespace hsg
