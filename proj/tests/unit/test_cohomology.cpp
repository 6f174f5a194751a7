#include <doctest.h>

#include "fixtures.hpp"

#include "hsg/cohomology.hpp"
#include "hsg/hs.hpp"
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

int binom(int n, int k) {
  int r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

int euler(const DimTable& t) {
  int e = 0;
  for (size_t p = 0; p < t.size(); ++p)
    for (size_t q = 0; q < t[p].size(); ++q) e += ((p + q) % 2 ? -1 : 1) * t[p][q];
  return e;
}

int rank_of(const Mat& M) {
  if (M.size() == 0) return 0;
  Eigen::FullPivLU<Mat> lu(M);
  lu.setThreshold(1e-9);
  return int(lu.rank());
}

const char* kModels[] = {"torus3", "iwasawa", "kodaira"};

}  // namespace

TEST_CASE("classical groups of the flat torus are binomial") {
  auto g = classical_groups(load_catalogue("torus3"));
  for (int p = 0; p <= 3; ++p)
    for (int q = 0; q <= 3; ++q) {
      CHECK(g.dolbeault[p][q] == binom(3, p) * binom(3, q));
      CHECK(g.bott_chern[p][q] == binom(3, p) * binom(3, q));
      CHECK(g.aeppli[p][q] == binom(3, p) * binom(3, q));
    }
  for (int k = 0; k <= 6; ++k) CHECK(g.de_rham[k] == binom(6, k));
}

TEST_CASE("Iwasawa invariant cohomology") {
  auto g = classical_groups(load_catalogue("iwasawa"));
  CHECK(g.dolbeault[1][0] == 3);
  CHECK(g.dolbeault[0][1] == 2);
  // Betti numbers of the Iwasawa manifold.
  const int b[7] = {1, 4, 8, 10, 8, 4, 1};
  for (int k = 0; k <= 6; ++k) CHECK(g.de_rham[k] == b[k]);
}

TEST_CASE("Serre and Bott-Chern/Aeppli dualities on the catalogue") {
  for (auto name : kModels) {
    auto g = classical_groups(load_catalogue(name));
    CHECK(g.duality_holds);
    for (int p = 0; p <= 3; ++p)
      for (int q = 0; q <= 3; ++q) CHECK(g.dolbeault[p][q] == g.dolbeault[3 - p][3 - q]);
  }
}

TEST_CASE("Frölicher pages: conservation laws and d_r squared") {
  for (auto name : kModels) {
    auto m = load_catalogue(name);
    auto cl = classical_groups(m);
    std::vector<PageSummary> pages;
    for (int r = 1; r <= 4; ++r) pages.push_back(spectral_page(m, r));
    CHECK(pages[0].dims == cl.dolbeault);
    const int chi = euler(pages[0].dims);
    for (int r = 1; r <= 4; ++r) {
      const PageSummary& s = pages[r - 1];
      CHECK(euler(s.dims) == chi);
      for (int p = 0; p <= 3; ++p)
        for (int q = 0; q <= 3; ++q) {
          const Mat& d = s.d[p][q];
          const int tp = p + r, tq = q - r + 1;
          if (tp <= 3 && tq >= 0 && tp + r <= 3 && tq - r + 1 >= 0 && d.size() && s.d[tp][tq].size())
            CHECK((s.d[tp][tq] * d).norm() < 1e-10);
          if (r < 4) {
            // dim E_{r+1} = dim ker d_r - rank of the incoming d_r.
            const int sp = p - r, sq = q + r - 1;
            const int in = (sp >= 0 && sq <= 3) ? rank_of(s.d[sp][sq]) : 0;
            const int out = d.size() ? rank_of(d) : 0;
            CHECK(pages[r].dims[p][q] == s.dims[p][q] - out - in);
            CHECK(pages[r].dims[p][q] <= s.dims[p][q]);
          }
        }
    }
    // E_infinity sums to the Betti numbers.
    for (int k = 0; k <= 6; ++k) {
      int sum = 0;
      for (int p = 0; p <= 3; ++p)
        if (k - p >= 0 && k - p <= 3) sum += pages[3].dims[p][k - p];
      CHECK(sum == cl.de_rham[k]);
    }
  }
}

TEST_CASE("degeneration pattern of the Frölicher sequence") {
  auto t3 = load_catalogue("torus3");
  for (int r = 1; r <= 3; ++r) CHECK(spectral_page(t3, r).degenerate);
  auto iw = load_catalogue("iwasawa");
  CHECK_FALSE(spectral_page(iw, 1).degenerate);
  CHECK(spectral_page(iw, 1).dims != spectral_page(iw, 2).dims);
  CHECK(error_kind([&] { spectral_page(iw, 0); }) == "InvalidInput");
}

TEST_CASE("first-page higher groups are the classical ones") {
  for (auto name : kModels) {
    auto m = load_catalogue(name);
    auto cl = classical_groups(m);
    auto h = higher_page_groups(m, 1);
    CHECK(h.bc == cl.bott_chern);
    CHECK(h.aeppli == cl.aeppli);
  }
}

TEST_CASE("page-1-ddbar diagnostic") {
  CHECK(higher_page_groups(load_catalogue("torus3"), 2).diagnostic);
  CHECK(higher_page_groups(load_catalogue("iwasawa"), 2).diagnostic);
  CHECK_FALSE(higher_page_groups(load_catalogue("iwasawa"), 1).diagnostic);
  CHECK_FALSE(higher_page_groups(load_catalogue("kodaira"), 2).diagnostic);
}

TEST_CASE("E_r Ebar_r membership") {
  auto iw = load_catalogue("iwasawa");
  for (int r = 1; r <= 3; ++r) {
    ErMembership z = er_closed_exact(Form::zero(iw, 1, 1), r);
    CHECK(z.closed);
    CHECK(z.exact);
    for (const auto& w : z.exact_witnesses) CHECK((w.coefficients.size() == 0 || w.coefficients.norm() < 1e-14));
  }
  // del dbar-exact forms are exact on every page; exact implies closed.
  std::mt19937 rng(31);
  for (int p = 1; p <= 3; ++p)
    for (int q = 1; q <= 3; ++q)
      for (int r = 1; r <= 3; ++r) {
        Form a = differential(Part::del, differential(Part::dbar, random_form(iw, p - 1, q - 1, rng)));
        ErMembership e = er_closed_exact(a, r);
        CHECK(e.exact);
        CHECK(e.closed);
        Form b = random_form(iw, p, q, rng);
        ErMembership f = er_closed_exact(b, r);
        if (f.exact) CHECK(f.closed);
      }
}

TEST_CASE("E2 Ebar2 closedness characterizes H-S and sG metrics") {
  for (auto name : kModels) {
    auto m = load_catalogue(name);
    for (unsigned seed : {0u, 41u, 42u}) {
      Form w = seed ? random_metric(m, seed) : reference_metric(m);
      auto g = metric_from_form(w);
      Classification c = classify_metric(*g);
      CHECK(er_closed_exact(w, 2).closed == c.hs_feasible);
      CHECK(er_closed_exact(power(w, 2), 2).closed == c.strongly_gauduchon);
    }
  }
}

TEST_CASE("E2 torsion class") {
  auto t3 = load_catalogue("torus3");
  for (unsigned seed : {0u, 51u}) {
    auto g = metric_from_form(seed ? random_metric(t3, seed) : reference_metric(t3));
    E2TorsionClass c = e2_torsion_class(*g);
    CHECK(c.vanishes);
    REQUIRE(c.xi);
    CHECK(max_abs(*c.xi) < 1e-12);
    CHECK(c.d2_image < 1e-12);
    CHECK(c.invariance_defect < 1e-12);
    CHECK(c.cls.coordinates.size() == 3);
  }
  auto iw = metric_from_form(reference_metric(load_catalogue("iwasawa")));
  CHECK(error_kind([&] { e2_torsion_class(*iw); }) == "NotHS");
}

TEST_CASE("E2 intersection number equals 6A") {
  auto t3 = load_catalogue("torus3");
  for (unsigned seed : {0u, 61u, 62u}) {
    auto g = metric_from_form(seed ? random_metric(t3, seed) : reference_metric(t3));
    E2Intersection e = e2_intersection(*g);
    CHECK(e.residual < 1e-9);
    CHECK(e.d_residual < 1e-10);
    CHECK(max_abs(e.Omega_tilde - power(g->omega(), 2)) < 1e-12);
  }
  auto iw = metric_from_form(reference_metric(load_catalogue("iwasawa")));
  CHECK(error_kind([&] { e2_intersection(*iw); }) == "HypothesisFailed");
  auto kt = metric_from_form(reference_metric(load_catalogue("kodaira")));
  CHECK(error_kind([&] { e2_intersection(*kt); }) == "HypothesisFailed");
}
