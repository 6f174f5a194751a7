#pragma once

#include "hsg/bicomplex.hpp"

#include <string>
#include <vector>

namespace hsg {

// Generator indices run over phi^1..phi^n (0..n-1) then phibar^1..phibar^n
// (n..2n-1).
struct LieTerm {
  cplx coeff{1.0, 0.0};
  int a = 0, b = 0;  // the 2-form coeff * gen_a ∧ gen_b
};

struct LieRule {
  int target = 0;  // k in d phi^{k+1}
  std::vector<LieTerm> terms;
};

struct LieModelSpec {
  std::string name;
  int n = 3;
  std::vector<LieRule> dphi;
};

// Text format: `name = ...`, `dim = ...` and one `d phi<k> = <terms>` line
// per nonzero differential; see docs/model-format.md.
LieModelSpec parse_model_text(const std::string& text);
LieModelSpec read_model_file(const std::string& path);

// Validates integrability, d^2 = 0 and unimodularity, then caches the
// matrices of del and delbar on every bidegree.
ModelPtr load_model(const LieModelSpec& spec);

std::vector<std::string> catalogue_names();
std::string catalogue_text(const std::string& name);
ModelPtr load_catalogue(const std::string& name);

// Channel matrix of del or delbar from (p,q), in the canonical bases.
struct OperatorMatrix {
  int src_p = 0, src_q = 0, dst_p = 0, dst_q = 0;
  Mat matrix;
};
OperatorMatrix operator_matrix(const Model& model, Part part, int p, int q);

// Solvability of {del rho = 0, delbar rho = -del omega} over (2,0)-forms.
struct Feasibility {
  bool feasible = false;
  double residual = 0.0;       // L2_omega norm of the least-squares residual
  Form rho;                    // minimal-norm least-squares solution
  int solution_space_dim = 0;  // dim of ker del ∩ ker delbar on (2,0)
};
Feasibility hs_feasibility(const Form& omega, double tol = 1e-9);

}  // namespace hsg
