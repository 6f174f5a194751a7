#include <doctest.h>

#include "fixtures.hpp"

#include "hsg/hs.hpp"
#include "hsg/lie.hpp"
#include "hsg/torus.hpp"

using namespace hsg;
using namespace hsg::testing;

namespace {

constexpr double kEps = 0.05;

std::string error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return "";
}

FrequencyTerm term(int channel, int k0, int k1, cplx amp) {
  FrequencyTerm t;
  t.channel = channel;
  t.k[0] = k0;
  t.k[1] = k1;
  t.amplitude = amp;
  return t;
}

ModelPtr line_model() { return make_torus_model(16, {0}); }

MetricPtr eps_metric(const ModelPtr& m) { return metric_from_form(perturbed_metric(m, kEps)); }

// SKT but not Gauduchon: u = eps (e^{ix1} + e^{ix2}) dz3.
MetricPtr non_gauduchon_metric() {
  auto m = make_torus_model(16, {0, 1});
  Form u = synthesize_form(m, 1, 0, {term(2, 1, 0, kEps), term(2, 0, 1, kEps)});
  return metric_from_form(aeppli_shift(reference_metric(m), u));
}

Eigen::VectorXd cos_x1(const ModelPtr& m, double a) {
  return synthesize_function(m, {term(0, 1, 0, 0.5 * a), term(0, -1, 0, 0.5 * a)}).real();
}

}  // namespace

TEST_CASE("flat torus: rho = 0, F = 0, A = Vol = 1") {
  auto m = load_catalogue("torus3");
  auto g = metric_from_form(reference_metric(m));
  for (TorsionMode mode : {TorsionMode::hs_min, TorsionMode::dim3, TorsionMode::skt}) {
    TorsionReport t = energy_and_volume(*g, mode);
    CHECK(max_abs(t.rho20) < 1e-14);
    CHECK(std::abs(t.F) < 1e-14);
    CHECK(std::abs(t.vol - 1.0) < 1e-14);
    CHECK(std::abs(t.A - 1.0) < 1e-14);
    CHECK(t.torsion_class_zero);
    REQUIRE(t.G);
    CHECK(*t.G < 1e-20);
  }
}

TEST_CASE("perturbed torus metric: closed-form torsion energy and volume") {
  auto m = line_model();
  auto g = eps_metric(m);
  Form u = standard_perturbation(m, kEps);
  TorsionReport h = energy_and_volume(*g, TorsionMode::hs_min);
  TorsionReport d = energy_and_volume(*g, TorsionMode::dim3);
  TorsionReport s = energy_and_volume(*g, TorsionMode::skt);
  Form ls = torsion_least_squares(*g);
  CHECK(norm(*g, h.rho20 - d.rho20) < 1e-8);
  CHECK(norm(*g, h.rho20 - s.rho20) < 1e-8);
  CHECK(norm(*g, h.rho20 - ls) < 1e-8);
  // rho = del u solves the system and is minimal here.
  CHECK(norm(*g, h.rho20 - differential(Part::del, u)) < 1e-8);
  CHECK(std::abs(h.F - kEps * kEps) < 1e-8);
  CHECK(std::abs(h.vol - (1.0 - kEps * kEps)) < 1e-8);
  CHECK(std::abs(h.A - 1.0) < 1e-8);
  CHECK(std::abs(h.F - h.F_wedge) < 1e-10);
  CHECK(std::abs(h.tilde_mass - h.A) < 1e-8);
  CHECK(h.residuals.minimality < 1e-8);
  CHECK(h.residuals.del_rho < 1e-8);
  CHECK(h.residuals.dbar_rho_plus_del_omega < 1e-8);
}

TEST_CASE("G agrees along three routes when the torsion class vanishes") {
  auto g = eps_metric(line_model());
  TorsionReport t = energy_and_volume(*g);
  REQUIRE(t.torsion_class_zero);
  REQUIRE(t.G);
  CHECK(*t.G > 1e-6);
  CHECK(std::abs(*t.G - *t.G_via_laplacian) < 1e-8);
  CHECK(std::abs(*t.G - *t.G_via_xi) < 1e-8);
  CHECK(t.xi_residual < 1e-8);
  CHECK(t.zero_equivalence_holds);
}

TEST_CASE("rho^{0,2} is orthogonal to the tilde-harmonic space (lie)") {
  auto m = load_catalogue("torus3");
  auto g = metric_from_form(random_metric(m, 21));
  TorsionReport t = energy_and_volume(*g);
  REQUIRE(t.max_tilde_harmonic_overlap);
  CHECK(*t.max_tilde_harmonic_overlap < 1e-12);
}

TEST_CASE("infeasible and non-SKT inputs are reported") {
  auto iw = metric_from_form(reference_metric(load_catalogue("iwasawa")));
  CHECK(error_kind([&] { torsion_form(*iw); }) == "NotFeasible");
  CHECK(error_kind([&] { torsion_form(*iw, TorsionMode::dim3); }) == "NotFeasible");
  CHECK(error_kind([&] { torsion_form(*iw, TorsionMode::skt); }) == "NotSKT");
  auto kt = metric_from_form(reference_metric(load_catalogue("kodaira")));
  CHECK(error_kind([&] { torsion_form(*kt); }) == "NotFeasible");
}

TEST_CASE("Aeppli shifts transport rho by del u and keep A fixed") {
  auto m = line_model();
  auto g = eps_metric(m);
  Form u = synthesize_form(m, 1, 0, {term(1, 1, 0, 0.03), term(2, -1, 0, cplx(0.0, 0.02))});
  PerturbReport r = aeppli_perturb(*g, u);
  CHECK(r.rho_transport < 1e-8);
  CHECK(r.A_change < 1e-8);
  CHECK_FALSE(r.closed_case_residual);

  // del u = 0 for f(x1) dz1.
  Form closed = synthesize_form(m, 1, 0, {term(0, 1, 0, 0.03)});
  REQUIRE(max_abs(differential(Part::del, closed)) < 1e-14);
  PerturbReport c = aeppli_perturb(*g, closed);
  REQUIRE(c.closed_case_residual);
  CHECK(*c.closed_case_residual < 1e-9);
  CHECK(c.A_change < 1e-8);
}

TEST_CASE("i del dbar shifts keep rho and shift the norm by the volume term") {
  auto m = line_model();
  auto g = eps_metric(m);
  Eigen::VectorXd phi = cos_x1(m, 0.04);
  BCPerturbReport r = ddbar_perturb(*g, phi);
  CHECK(r.rho_coincidence < 1e-8);
  CHECK(r.l2_relation < 1e-9);

  // Vol(t) is a cubic in t, so the central difference has an O(t^2) error.
  auto g2 = non_gauduchon_metric();
  Eigen::VectorXd psi =
      synthesize_function(g2->model(), {term(0, 1, -1, 0.5), term(0, -1, 1, 0.5), term(0, 2, 0, 0.25),
                                        term(0, -2, 0, 0.25)})
          .real();
  const double t = 1e-3;
  const double v0 = volume(*g2);
  const double vp = volume(*Metric::create(g2->omega() + i_ddbar(g2->model(), t * psi)));
  const double vm = volume(*Metric::create(g2->omega() - i_ddbar(g2->model(), t * psi)));
  const double fd = (vp - vm) / (2 * t);
  const double exact = volume_variation_bc(*g2, psi);
  CHECK(std::abs(fd - exact) < 1e-6);
  CHECK(std::abs(exact) > 1e-6);
  CHECK(v0 > 0);
}

TEST_CASE("first variation of F and Vol cancels and matches finite differences") {
  // The line-model metric is balanced, so use one where dbar* omega != 0.
  auto g = non_gauduchon_metric();
  auto m = g->model();
  Form u = synthesize_form(m, 1, 0, {term(2, 1, 0, 1.0), term(1, -1, 1, cplx(0.5, 0.5))});
  FirstVariation v = first_variation(*g, u);
  CHECK(std::abs(v.dA) < 1e-10);
  CHECK(std::abs(v.dF) > 1e-4);
  const double t = 1e-4;
  auto F_at = [&](double s) {
    return energy_and_volume(*Metric::create(aeppli_shift(g->omega(), s * u)), TorsionMode::dim3).F;
  };
  auto V_at = [&](double s) { return volume(*Metric::create(aeppli_shift(g->omega(), s * u))); };
  CHECK(std::abs((F_at(t) - F_at(-t)) / (2 * t) - v.dF) < 1e-6);
  CHECK(std::abs((V_at(t) - V_at(-t)) / (2 * t) - v.dVol) < 1e-6);
}

TEST_CASE("Gauduchon strata are preserved by i del dbar shifts of SKT metrics") {
  auto g = eps_metric(line_model());
  auto [dv, res] = gauduchon_stratum_check(*g, cos_x1(g->model(), 0.05));
  CHECK(dv < 1e-10);
  CHECK(res < 1e-10);
}

TEST_CASE("classification of reference metrics") {
  auto iw = metric_from_form(reference_metric(load_catalogue("iwasawa")));
  Classification c = classify_metric(*iw);
  CHECK_FALSE(c.kahler);
  CHECK_FALSE(c.skt);
  CHECK(c.gauduchon);
  CHECK(c.balanced);
  CHECK(c.strongly_gauduchon);
  CHECK_FALSE(c.hs_feasible);

  auto k = metric_from_form(random_metric(load_catalogue("torus3"), 22));
  Classification ck = classify_metric(*k);
  CHECK(ck.kahler);
  CHECK(ck.skt);
  CHECK(ck.gauduchon);
  CHECK(ck.balanced);
  CHECK(ck.strongly_gauduchon);
  CHECK(ck.hs_feasible);

  Classification ce = classify_metric(*eps_metric(line_model()));
  CHECK_FALSE(ce.kahler);
  CHECK(ce.skt);
  CHECK(ce.hs_feasible);
  CHECK(ce.gauduchon);
  CHECK(ce.U.empty());
  CHECK(ce.V.empty());
  CHECK(ce.sign_partition_consistent);

  Classification cn = classify_metric(*non_gauduchon_metric());
  CHECK(cn.skt);
  CHECK(cn.hs_feasible);
  CHECK_FALSE(cn.gauduchon);
  CHECK_FALSE((cn.U.empty() && cn.V.empty()));
  CHECK(cn.sign_partition_consistent);
}

TEST_CASE("Lefschetz decomposition of del omega") {
  for (auto g : {metric_from_form(random_metric(load_catalogue("kodaira"), 23)),
                 metric_from_form(reference_metric(load_catalogue("iwasawa"))), non_gauduchon_metric()}) {
    Lefschetz L = lefschetz_alpha(*g);
    Form dw = differential(Part::del, g->omega());
    CHECK(max_abs(L.prim + wedge(L.alpha, g->omega()) - dw) < 1e-12);
    CHECK(L.prim_contraction < 1e-10);
    CHECK(L.identity_residual < 1e-10);
  }
  // For SKT metrics the two integrals agree.
  Lefschetz L = lefschetz_alpha(*non_gauduchon_metric());
  CHECK(L.integral_alpha > 1e-6);
  CHECK(std::abs(L.integral_alpha - L.integral_prim) < 1e-10);
}

TEST_CASE("square root of omega^2 is omega") {
  auto m = load_catalogue("kodaira");
  Form w = random_metric(m, 24);
  CHECK(max_abs(square_root(power(w, 2)) - w) < 1e-12);
  Form bad = -1.0 * power(w, 2);
  CHECK(error_kind([&] { square_root(bad); }) == "RootFailure");
}

TEST_CASE("completion identities on an SKT metric") {
  for (auto g : {eps_metric(line_model()), non_gauduchon_metric()}) {
    TorsionReport t = energy_and_volume(*g);
    Completion c = sg_and_completion(*g, t);
    CHECK(c.root_residual < 1e-10);
    CHECK(std::abs(c.omega_identity_residual) < 1e-10);
    CHECK(c.dbar_Omega_residual < 1e-8);
    CHECK(c.d_tilde_residual < 1e-8);
    CHECK(c.tilde_volume_residual < 1e-9);
    CHECK(c.gamma_sg);
    auto gm = Metric::create(c.gamma);
    CHECK(gm->min_eigenvalue() > 0);
  }
}

TEST_CASE("Monge-Ampere constants") {
  auto t3 = load_catalogue("torus3");
  auto g0 = metric_from_form(reference_metric(t3));
  MACoefficients k = ma_constants(*g0, *g0, 1.0);
  CHECK(std::abs(k.c - 2.0 / 9.0) < 1e-14);
  CHECK(std::abs(k.c_min - k.c) < 1e-14);
  CHECK(std::abs(k.holder_gap) < 1e-14);
  CHECK(std::abs(k.b_lower - 1.0) < 1e-14);

  // |dbar u| must vary for Lambda_gamma omega to be non-constant.
  auto m = line_model();
  Form u = synthesize_form(m, 1, 0, {term(2, 1, 0, kEps), term(2, 2, 0, kEps)});
  auto gm = metric_from_form(aeppli_shift(reference_metric(m), u));
  auto w = metric_from_form(reference_metric(m));
  MACoefficients r = ma_constants(*w, *gm, 1.0);
  CHECK(r.conformal_gap > 1e-8);
  CHECK(r.holder_gap > -1e-14);
  CHECK(r.c_min <= r.c + 1e-14);
  // Trace against an oracle: tr(H_gamma^{-1} H_omega).
  for (Eigen::Index x = 0; x < r.f_normaliser.size(); ++x)
    CHECK(std::abs(r.f_normaliser[x] - (gm->H()[x].inverse() * w->H()[x]).trace().real()) < 1e-12);

  auto norm_gamma = Metric::create(omega_normalised(*w, *gm));
  MACoefficients rn = ma_constants(*w, *norm_gamma, 1.0);
  CHECK(std::abs(rn.conformal_gap) < 1e-12);
  CHECK((rn.f_normaliser.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("holomorphic one-form audit") {
  auto iw = metric_from_form(reference_metric(load_catalogue("iwasawa")));
  HoloAudit a = holo_oneform_audit(*iw);
  CHECK(a.tested == 3);
  CHECK_FALSE(a.passes);
  HoloAudit b = holo_oneform_audit(*metric_from_form(reference_metric(load_catalogue("kodaira"))));
  CHECK(b.tested == 2);
  CHECK(b.passes);
  HoloAudit c = holo_oneform_audit(*eps_metric(line_model()));
  CHECK(c.tested == 3);
  CHECK(c.passes);
}

TEST_CASE("identity residuals under refinement") {
  // The standard fixture is resolved exactly at every resolution.
  for (int N : {8, 16, 32}) {
    auto m = make_torus_model(N, {0, 1});
    auto g = eps_metric(m);
    TorsionReport t = energy_and_volume(*g);
    CHECK(norm(*g, t.rho20 - differential(Part::del, standard_perturbation(m, kEps))) < 1e-12);
    CHECK(std::abs(t.A - 1.0) < 1e-12);
    CHECK(std::abs(t.F - t.F_wedge) < 1e-12);
  }
  // A mixed fixture whose metric coefficients have an infinite spectrum.
  const std::vector<FrequencyTerm> tab{term(0, 1, 0, 0.05), term(1, 0, 1, cplx(0.03, 0.02)), term(2, 1, 1, 0.04),
                                       term(2, -1, 0, 0.03), term(0, 0, -1, cplx(0.0, 0.04))};
  std::vector<double> transport, G;
  for (int N : {8, 16, 32, 64}) {
    auto m = make_torus_model(N, {0, 1});
    Form u = synthesize_form(m, 1, 0, tab);
    auto g = metric_from_form(aeppli_shift(reference_metric(m), u));
    TorsionReport t = energy_and_volume(*g);
    transport.push_back(norm(*g, t.rho20 - differential(Part::del, u)));
    REQUIRE(t.G);
    G.push_back(*t.G);
  }
  CHECK(transport[0] > transport[1]);
  CHECK(transport[1] > transport[2]);
  CHECK(std::abs(G[0] - G[3]) > std::abs(G[1] - G[3]));
  CHECK(std::abs(G[2] - G[3]) < 1e-14);
}
