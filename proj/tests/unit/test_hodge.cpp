#include <doctest.h>

#include "fixtures.hpp"

#include "hsg/hodge.hpp"
#include "hsg/lie.hpp"
#include "hsg/torus.hpp"

using namespace hsg;
using namespace hsg::testing;

TEST_CASE("reference metric has identity matrix and |phi1|^2 = 2") {
  auto m = load_catalogue("torus3");
  auto g = metric_from_form(reference_metric(m));
  CHECK((g->H()[0] - Mat::Identity(3, 3)).norm() < 1e-14);
  Form e = Form::basis_element(m, 1, 0, 0);
  CHECK(std::abs(norm(*g, e) * norm(*g, e) - 2.0) < 1e-13);
}

TEST_CASE("non-positive forms are rejected") {
  auto m = load_catalogue("torus3");
  Form bad = reference_metric(m) - 2.0 * (0.5 * I) * wedge(Form::basis_element(m, 1, 0, 0), Form::basis_element(m, 0, 1, 0));
  try {
    metric_from_form(bad);
    FAIL("expected NotPositive");
  } catch (const Error& e) {
    CHECK(e.kind() == "NotPositive");
  }
}

TEST_CASE("primitive (0,2)-forms satisfy star v = v ∧ omega") {
  auto m = load_catalogue("kodaira");
  auto g = metric_from_form(random_metric(m, 7));
  std::mt19937 rng(8);
  Form v = random_form(m, 0, 2, rng);
  CHECK(max_abs(star(*g, v) - wedge(v, g->omega())) < 1e-11);
}

TEST_CASE("Laplacians are self-adjoint and non-negative") {
  auto m = load_catalogue("iwasawa");
  auto g = metric_from_form(random_metric(m, 9));
  std::mt19937 rng(10);
  for (Laplacian k : {Laplacian::del, Laplacian::dbar, Laplacian::bc, Laplacian::tilde})
    for (int p = 0; p <= 3; ++p)
      for (int q = 0; q <= 3; ++q) {
        Form a = random_form(m, p, q, rng), b = random_form(m, p, q, rng);
        cplx l = inner(*g, laplacian(*g, k, a), b), r = inner(*g, a, laplacian(*g, k, b));
        CHECK(std::abs(l - r) < 1e-9 * (1.0 + std::abs(l)));
        CHECK(inner(*g, laplacian(*g, k, a), a).real() > -1e-10);
      }
}

TEST_CASE("Dolbeault kernel dimensions on the Iwasawa model") {
  auto m = load_catalogue("iwasawa");
  auto g = metric_from_form(reference_metric(m));
  CHECK(harmonic_basis(*g, Laplacian::dbar, 0, 1).size() == 2);
  CHECK(harmonic_basis(*g, Laplacian::dbar, 1, 0).size() == 3);
}

TEST_CASE("Bott-Chern kernel is ker del ∩ ker dbar ∩ ker (del dbar)*") {
  auto m = load_catalogue("kodaira");
  auto g = metric_from_form(random_metric(m, 11));
  for (int p = 0; p <= 3; ++p)
    for (int q = 0; q <= 3; ++q)
      for (const Form& h : harmonic_basis(*g, Laplacian::bc, p, q)) {
        CHECK(max_abs(differential(Part::del, h)) < 1e-9);
        CHECK(max_abs(differential(Part::dbar, h)) < 1e-9);
        CHECK(max_abs(adjoint_diff(*g, Part::dbar, adjoint_diff(*g, Part::del, h))) < 1e-9);
      }
}

TEST_CASE("Green operator inverts the Laplacian off the kernel (lie)") {
  auto m = load_catalogue("kodaira");
  auto g = metric_from_form(random_metric(m, 12));
  std::mt19937 rng(13);
  for (Laplacian k : {Laplacian::del, Laplacian::dbar, Laplacian::bc, Laplacian::tilde})
    for (int p = 0; p <= 3; ++p)
      for (int q = 0; q <= 3; ++q) {
        Form b = random_form(m, p, q, rng);
        Form x = green(*g, k, b);
        Form h = harmonic_project(*g, k, b);
        CHECK(max_abs(laplacian(*g, k, x) + h - b) < 1e-9);
        GreenOptions cg;
        cg.method = GreenOptions::Method::cg;
        Form y = green_solve(*g, k, b, cg).x;
        CHECK(max_abs(x - y) < 1e-9);
      }
  CHECK(max_abs(green(*g, Laplacian::bc, Form::zero(m, 1, 1))) == 0.0);
}

TEST_CASE("Green operator inverts the Laplacian off the kernel (torus)") {
  auto m = make_torus_model(16, {0, 1});
  auto g = metric_from_form(perturbed_metric(m));
  std::vector<FrequencyTerm> tab;
  for (int ch = 0; ch < 3; ++ch) {
    FrequencyTerm t;
    t.channel = ch;
    t.k[0] = ch - 1;
    t.k[1] = 1;
    t.amplitude = cplx(1.0, 0.2 * ch);
    tab.push_back(t);
  }
  for (Laplacian k : {Laplacian::del, Laplacian::dbar, Laplacian::bc}) {
    Form b = synthesize_form(m, 2, 0, tab);
    GreenResult r = green_solve(*g, k, b);
    Form h = harmonic_project(*g, k, b);
    CHECK(max_abs(laplacian(*g, k, r.x) + h - b) < 1e-7);
    CHECK(r.iterations < 60);
  }
  Form c = synthesize_form(m, 0, 1, tab);
  Form x = green(*g, Laplacian::dbar, c);
  CHECK(max_abs(laplacian(*g, Laplacian::dbar, x) + harmonic_project(*g, Laplacian::dbar, c) - c) < 1e-7);
}

TEST_CASE("3-space decompositions are orthogonal and complete (lie)") {
  auto m = load_catalogue("kodaira");
  auto g = metric_from_form(random_metric(m, 14));
  std::mt19937 rng(15);
  for (Laplacian fl : {Laplacian::bc, Laplacian::tilde})
    for (int p = 0; p <= 3; ++p)
      for (int q = 0; q <= 3; ++q) {
        Form a = random_form(m, p, q, rng);
        Decomposition d = decompose_3space(*g, fl, a);
        INFO(std::string(to_string(fl)), " ", p, " ", q, " h=", harmonic_basis(*g, fl, p, q).size());
        CHECK(max_abs(d.harmonic + d.middle + d.co - a) < 1e-9);
        CHECK(std::abs(inner(*g, d.harmonic, d.middle)) < 1e-10);
        CHECK(std::abs(inner(*g, d.harmonic, d.co)) < 1e-10);
        CHECK(std::abs(inner(*g, d.middle, d.co)) < 1e-10);
        for (const Form& h : harmonic_basis(*g, fl, p, q)) {
          Decomposition dh = decompose_3space(*g, fl, h);
          CHECK(max_abs(dh.harmonic - h) < 1e-9);
        }
      }
}
