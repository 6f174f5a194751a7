#include <doctest.h>

#include "fixtures.hpp"

#include "hsg/descent.hpp"
#include "hsg/lie.hpp"

#include <sstream>

using namespace hsg;
using namespace hsg::testing;

TEST_CASE("descent from a Kähler metric stops at once") {
  auto m = load_catalogue("torus3");
  auto g = metric_from_form(reference_metric(m));
  DescentTrace t = descend(*g);
  CHECK(t.termination == "converged");
  REQUIRE(t.iterates.size() == 1);
  CHECK(t.iterates[0].F == 0.0);
  CriticalCertificate c = certify_critical(*g, 1e-6);
  CHECK(c.balanced_defect == 0.0);
  CHECK(c.kahler_defect == 0.0);
  CHECK(c.kahler);
}

TEST_CASE("positivity limit matches the eigenvalue boundary") {
  auto m = load_catalogue("torus3");
  auto g = metric_from_form(reference_metric(m));
  // gamma = -(i/2) phi1 ∧ phibar1 hits the boundary at t = 1.
  Form gamma = -(0.5 * I) * wedge(Form::basis_element(m, 1, 0, 0), Form::basis_element(m, 0, 1, 0));
  CHECK(std::abs(positivity_limit(*g, gamma) - 1.0) < 1e-14);
  CHECK(std::isinf(positivity_limit(*g, -1.0 * gamma)));
}

TEST_CASE("SKT metrics satisfy ||d omega|| = sqrt(2) ||dbar* omega||") {
  auto m = make_torus_model(16, {0, 1});
  FrequencyTerm a, b;
  a.channel = 2;
  a.k[0] = 1;
  a.amplitude = 0.05;
  b.channel = 2;
  b.k[1] = 1;
  b.amplitude = 0.05;
  auto g = metric_from_form(aeppli_shift(reference_metric(m), synthesize_form(m, 1, 0, {a, b})));
  CriticalCertificate c = certify_critical(*g, 1e-6);
  CHECK(c.skt_residual < 1e-12);
  CHECK(c.balanced_defect > 1e-3);
  CHECK(std::abs(c.kahler_defect - std::sqrt(2.0) * c.balanced_defect) < 1e-10);
  CHECK_FALSE(c.critical);
}

TEST_CASE("descent on the perturbed torus reaches a Kähler metric") {
  auto m = make_torus_model(16, {0, 1});
  auto g = metric_from_form(perturbed_metric(m));
  CHECK_FALSE(certify_critical(*g, 1e-6).critical);
  DescentTrace t = descend(*g);
  CHECK(t.termination == "converged");
  const auto& first = t.iterates.front();
  const auto& last = t.iterates.back();
  MESSAGE("iterations: ", t.iterates.size() - 1);
  CHECK(last.dbar_star_omega < 1e-6);
  CHECK(last.d_omega < 1e-5);
  CHECK(last.F < 1e-8);
  CHECK(std::abs(last.vol - first.A) < 1e-6);
  for (size_t k = 0; k < t.iterates.size(); ++k) {
    const auto& it = t.iterates[k];
    CHECK(std::abs(it.A - first.A) / first.A < 1e-6);
    if (k + 1 < t.iterates.size()) {
      CHECK(t.iterates[k + 1].F < it.F);
      if (it.F > 1e-10) CHECK(std::abs(it.probe_slope - it.dF) < 1e-3 * std::abs(it.dF));
      CHECK(it.secant_slope < 0);
    }
  }
  CriticalCertificate c = certify_critical(*t.final_metric, 1e-6);
  CHECK(c.critical);
  CHECK(c.kahler);

  std::ostringstream os;
  write_trace_csv(os, t);
  CHECK(os.str().rfind("k,F,vol,A,", 0) == 0);

  DescentOptions zero;
  zero.max_iters = 0;
  DescentTrace z = descend(*g, zero);
  CHECK(z.iterates.size() == 1);
  CHECK(z.termination == "max_iters");
}
