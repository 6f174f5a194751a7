#include <doctest.h>

#include "fixtures.hpp"

#include "hsg/hodge.hpp"
#include "hsg/lie.hpp"

using namespace hsg;
using namespace hsg::testing;

namespace {

std::string error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return "";
}

}  // namespace

TEST_CASE("catalogue ships the three reference models") {
  auto names = catalogue_names();
  for (auto n : {"torus3", "iwasawa", "kodaira"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  CHECK(error_kind([] { load_catalogue("nope"); }) == "InvalidInput");
}

TEST_CASE("degree_dims matches binomials and rejects bad bidegrees") {
  auto m = load_catalogue("torus3");
  CHECK(degree_dims(*m, 1, 1) == 9);
  CHECK(degree_dims(*m, 3, 3) == 1);
  CHECK(degree_dims(*m, 2, 0) == 3);
  CHECK(error_kind([&] { degree_dims(*m, 4, 0); }) == "BidegreeError");
}

TEST_CASE("parser accepts complex coefficients and comments") {
  auto spec = parse_model_text("name = x\ndim = 3\n# c\nd phi3 = (1-2i) * phi1^phi2 + 3i*phi1^phibar1\n");
  REQUIRE(spec.dphi.size() == 1);
  CHECK(spec.dphi[0].target == 2);
  REQUIRE(spec.dphi[0].terms.size() == 2);
  CHECK(std::abs(spec.dphi[0].terms[0].coeff - cplx(1, -2)) < 1e-15);
  CHECK(std::abs(spec.dphi[0].terms[1].coeff - cplx(0, 3)) < 1e-15);
  CHECK(spec.dphi[0].terms[1].b == 3);
}

TEST_CASE("parser rejects malformed models") {
  CHECK(error_kind([] { parse_model_text("name = t\ndim = 3\nd phi3 = phi1^phi2\nd phi3 = 0\n"); }) == "ParseError");
  CHECK(error_kind([] { parse_model_text("name = t\ndim = 3\nd phi3 = phi1^phi7\n"); }) == "ParseError");
  CHECK(error_kind([] { parse_model_text("name = t\ndim = 3\nd phibar3 = phi1^phi2\n"); }) == "ParseError");
  CHECK(error_kind([] { parse_model_text("name = t\ndim = 3\ncolour = red\n"); }) == "ParseError");
}

TEST_CASE("load_model enforces integrability and d^2 = 0") {
  CHECK(error_kind([] { load_model(parse_model_text("name = t\ndim = 3\nd phi1 = phibar1^phibar2\n")); }) ==
        "IntegrabilityError");
  // d^2 phi3 = phi1^phibar1^phibar2 + phi2^phi1^phibar1 != 0
  CHECK(error_kind([] {
          load_model(parse_model_text("name = t\ndim = 3\nd phi2 = phi1^phibar1\nd phi3 = phi2^phibar2\n"));
        }) == "JacobiError");
}

TEST_CASE("operator matrices of the Iwasawa model") {
  auto m = load_catalogue("iwasawa");
  OperatorMatrix D = operator_matrix(*m, Part::del, 1, 0);
  CHECK(D.matrix.rows() == 3);
  CHECK(D.matrix.cols() == 3);
  Eigen::FullPivLU<Mat> lu(D.matrix);
  CHECK(lu.rank() == 1);
  // del phi3 = -phi1^phi2
  CHECK(std::abs(D.matrix(0, 2) + 1.0) < 1e-15);
  for (int p = 0; p <= 3; ++p) CHECK(operator_matrix(*m, Part::dbar, p, 0).matrix.norm() == 0.0);
  auto t = load_catalogue("torus3");
  for (int p = 0; p <= 3; ++p)
    for (int q = 0; q <= 3; ++q) CHECK(operator_matrix(*t, Part::dbar, p, q).matrix.norm() == 0.0);
  std::mt19937 rng(3);
  Form a = random_form(m, 1, 1, rng);
  Vec lhs = operator_matrix(*m, Part::del, 1, 1).matrix * a.flat();
  CHECK((lhs - differential(Part::del, a).flat()).norm() < 1e-13);
}

TEST_CASE("Hermitian-symplectic feasibility on the catalogue") {
  auto t = load_catalogue("torus3");
  auto ft = hs_feasibility(reference_metric(t));
  CHECK(ft.feasible);
  CHECK(max_abs(ft.rho) < 1e-14);

  auto iw = load_catalogue("iwasawa");
  Form w = reference_metric(iw);
  auto fi = hs_feasibility(w);
  CHECK_FALSE(fi.feasible);
  auto g = metric_from_form(w);
  CHECK(std::abs(fi.residual - norm(*g, differential(Part::del, w))) < 1e-12);
  CHECK(std::abs(fi.residual - std::sqrt(2.0)) < 1e-12);

  auto k = load_catalogue("kodaira");
  CHECK_FALSE(hs_feasibility(reference_metric(k)).feasible);
  CHECK(hs_feasibility(random_metric(t, 4)).feasible);
}
