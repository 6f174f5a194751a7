#pragma once

#include "hsg/hodge.hpp"

#include <optional>
#include <string>
#include <vector>

// Cohomology of the invariant subcomplex of a lie model. Coefficient vectors
// are taken in the canonical monomial bases, which are orthogonal for the
// reference metric, so Euclidean orthonormal bases are reference-orthonormal
// up to a constant per bidegree.
namespace hsg {

// Per-bidegree integer table indexed [p][q].
using DimTable = std::vector<std::vector<int>>;

struct ClassicalGroups {
  DimTable dolbeault, bott_chern, aeppli;
  std::vector<int> de_rham;  // indexed by total degree 0..2n
  bool duality_holds = false;  // dim BC^{p,q} = dim A^{n-p,n-q}
};
ClassicalGroups classical_groups(const ModelPtr& m);

struct PageSummary {
  int r = 1;
  DimTable dims;
  // Orthonormal basis of a complement of B_r inside Z_r, per bidegree
  // (columns are coefficient vectors); classes have coordinates Q^H x.
  std::vector<std::vector<Mat>> basis;
  // d_r from (p,q) to (p+r, q-r+1) in those coordinates; empty when the
  // target is out of range.
  std::vector<std::vector<Mat>> d;
  bool degenerate = false;  // all d_r vanish, so E_r = E_{r+1}
};
// Frölicher page r >= 1; pages r > n coincide with E_infinity.
PageSummary spectral_page(const ModelPtr& m, int r);

struct CohomClass {
  std::string group;
  int p = 0, q = 0;
  Form representative;
  Vec coordinates;
};

struct E2TorsionClass {
  CohomClass cls;  // class of rho^{0,2} in E_2^{0,2}
  bool vanishes = false;
  double membership_residual = 0.0;  // distance of rho^{0,2} from Im dbar
  std::optional<Form> xi;             // dbar xi = rho^{0,2} when vanishing
  double xi_residual = 0.0;
  // Otherwise a form orthogonal to Im dbar that pairs nontrivially with rho^{0,2}.
  std::optional<Form> dual_functional;
  double dual_value = 0.0;
  double d2_image = 0.0;           // norm of the E_2 coordinates of d_2 of the class
  double invariance_defect = 0.0;  // coordinate change after an Aeppli perturbation
};
// Throws NotHS when the metric is not Hermitian-symplectic.
E2TorsionClass e2_torsion_class(const Metric& g);

// A witness form whose bidegree may lie outside the valid range (then it
// has no coefficients).
struct Witness {
  std::string name;
  int p = 0, q = 0;
  Vec coefficients;
};

struct ErMembership {
  int r = 2;
  bool closed = false, exact = false;
  double closed_residual = 0.0, exact_residual = 0.0;
  std::vector<Witness> closed_witnesses;  // eta_1.., rho_1..
  std::vector<Witness> exact_witnesses;   // zeta, xi, eta, v.., u..
};
// E_r Ebar_r closedness and exactness of a form, decided by stacked least
// squares; r in {1, 2, 3}.
ErMembership er_closed_exact(const Form& alpha, int r = 2);

struct HigherPageGroups {
  int r = 2;
  DimTable bc, aeppli, er;
  // T_r: E_{r,BC} -> E_r and S_r: E_r -> E_{r,A} in orthonormal coordinates.
  std::vector<std::vector<Mat>> T, S;
  bool diagnostic = false;  // all T_r and S_r are isomorphisms
};
// The diagnostic at r characterizes page-(r-1)-ddbar manifolds.
HigherPageGroups higher_page_groups(const ModelPtr& m, int r = 2);

struct E2Intersection {
  Form Omega, Omega_tilde, u12, u21;
  double stage1_residual = 0.0;  // ||del dbar u12 - dbar Omega||
  double stage2_residual = 0.0;  // ||del dbar u21 + del(Omega + del u12)||
  double d_residual = 0.0;       // ||d Omega_tilde||
  double intersection = 0.0;     // ∫ Omega_tilde ∧ omega
  double A = 0.0;
  double residual = 0.0;  // |intersection - 6A|
};
// Throws HypothesisFailed (page-1 diagnostic, H-S or torsion class) and
// StageUnsolvable.
E2Intersection e2_intersection(const Metric& g);

}  // namespace hsg
