#include "hsg/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace hsg {

namespace {

json complex_array(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v[i].real(), v[i].imag()});
  return a;
}

json table(const DimTable& t) {
  json a = json::array();
  for (const auto& row : t) a.push_back(row);
  return a;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json witnesses(const std::vector<Witness>& ws) {
  json a = json::array();
  for (const auto& w : ws)
    a.push_back({{"name", w.name}, {"p", w.p}, {"q", w.q}, {"coefficients", complex_array(w.coefficients)}});
  return a;
}

[[noreturn]] void fixture_fail(int line, const std::string& msg) {
  throw Error("ParseError", "line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

std::string mono_name(Mono m, int n) {
  std::string s;
  for (int b = 0; b < 2 * n; ++b) {
    if (!(m & (Mono(1) << b))) continue;
    if (!s.empty()) s += '^';
    s += (b < n ? "phi" : "phibar") + std::to_string(b % n + 1);
  }
  return s.empty() ? "1" : s;
}

json form_to_json(const Form& a) {
  const Model& m = *a.model;
  json h;
  h["schema"] = kSchemaVersion;
  h["backend"] = m.algebraic() ? "lie" : "torus";
  h["model"] = m.name;
  h["n"] = m.n;
  h["p"] = a.p;
  h["q"] = a.q;
  json ch = json::array();
  for (int k = 0; k < a.channels(); ++k) ch.push_back(mono_name(m.basis().mono(a.p, a.q, k), m.n));
  h["channels"] = ch;
  if (m.grid) {
    h["grid"] = m.grid->resolution;
  } else {
    h["grid"] = nullptr;
  }
  h["points"] = a.points();
  h["layout"] = "channel-major";
  return {{"header", h}, {"data", complex_array(a.flat())}};
}

Form form_from_json(const ModelPtr& m, const json& j) {
  try {
    const json& h = j.at("header");
    if (h.at("schema").get<int>() != kSchemaVersion) throw Error("InvalidInput", "unsupported form schema");
    if (h.at("n").get<int>() != m->n) throw Error("ModelMismatch", "form dimension differs from the model");
    if (m->grid) {
      if (h.at("grid").is_null() || h.at("grid").get<std::array<int, kRealDims>>() != m->grid->resolution)
        throw Error("ModelMismatch", "form grid differs from the model");
    } else if (!h.at("grid").is_null()) {
      throw Error("ModelMismatch", "torus form given for a lie model");
    }
    const int p = h.at("p").get<int>(), q = h.at("q").get<int>();
    const json& d = j.at("data");
    const Eigen::Index expect = Eigen::Index(degree_dims(*m, p, q)) * m->points();
    if (Eigen::Index(d.size()) != expect) throw Error("InvalidInput", "form data has the wrong length");
    Vec v(expect);
    for (Eigen::Index i = 0; i < expect; ++i) v[i] = cplx(d[i].at(0).get<double>(), d[i].at(1).get<double>());
    return Form::from_flat(m, p, q, v);
  } catch (const json::exception& e) {
    throw Error("InvalidInput", std::string("malformed form document: ") + e.what());
  }
}

TorusFixture parse_fixture_text(const std::string& text) {
  TorusFixture f;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) fixture_fail(line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    std::istringstream val(s.substr(eq + 1));
    if (key == "resolution") {
      if (!(val >> f.resolution) || f.resolution < 1) fixture_fail(line, "bad resolution");
    } else if (key == "mask") {
      f.mask.clear();
      std::string c;
      while (val >> c) {
        try {
          f.mask.push_back(coordinate_index(c));
        } catch (const Error&) {
          fixture_fail(line, "unknown coordinate '" + c + "'");
        }
      }
    } else if (key == "term") {
      FrequencyTerm t;
      std::string ch;
      val >> ch;
      if (ch.size() != 3 || ch.compare(0, 2, "dz") != 0 || ch[2] < '1' || ch[2] > '3')
        fixture_fail(line, "term channel must be dz1, dz2 or dz3");
      t.channel = ch[2] - '1';
      for (int d = 0; d < kRealDims; ++d)
        if (!(val >> t.k[d])) fixture_fail(line, "term needs six integer frequencies");
      double re = 0.0, im = 0.0;
      if (!(val >> re)) fixture_fail(line, "term needs an amplitude");
      val >> im;
      std::string extra;
      if (val.clear(), val >> extra) fixture_fail(line, "trailing text '" + extra + "'");
      t.amplitude = cplx(re, im);
      f.terms.push_back(t);
    } else {
      fixture_fail(line, "unknown key '" + key + "'");
    }
  }
  return f;
}

TorusFixture read_fixture_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("InvalidInput", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_fixture_text(ss.str());
}

json to_json(const TorsionReport& t) {
  json j;
  j["mode"] = to_string(t.mode);
  j["F"] = t.F + 0.0;  // no negative zero
  j["F_wedge"] = t.F_wedge;
  j["vol"] = t.vol;
  j["A"] = t.A;
  j["tilde_mass"] = t.tilde_mass;
  j["residuals"] = {{"del_rho", t.residuals.del_rho},
                    {"dbar_rho_plus_del_omega", t.residuals.dbar_rho_plus_del_omega},
                    {"minimality", t.residuals.minimality}};
  j["torsion_class_zero"] = t.torsion_class_zero;
  j["G"] = optional_number(t.G);
  j["G_via_laplacian"] = optional_number(t.G_via_laplacian);
  j["G_via_xi"] = optional_number(t.G_via_xi);
  j["xi_residual"] = t.xi_residual;
  j["max_tilde_harmonic_overlap"] = optional_number(t.max_tilde_harmonic_overlap);
  j["zero_equivalence_holds"] = t.zero_equivalence_holds;
  j["tolerance"] = t.tolerance;
  return j;
}

json to_json(const Classification& c) {
  json j;
  j["kahler"] = c.kahler;
  j["skt"] = c.skt;
  j["gauduchon"] = c.gauduchon;
  j["balanced"] = c.balanced;
  j["strongly_gauduchon"] = c.strongly_gauduchon;
  j["hs_feasible"] = c.hs_feasible;
  j["residuals"] = {{"d_omega", c.residuals.d_omega},         {"ddbar_omega", c.residuals.ddbar_omega},
                    {"ddbar_omega2", c.residuals.ddbar_omega2}, {"d_omega2", c.residuals.d_omega2},
                    {"sg", c.residuals.sg},                   {"hs", c.residuals.hs}};
  j["sign_partition"] = {{"U", c.U.size()}, {"V", c.V.size()}, {"Z", c.Z.size()},
                         {"consistent", c.sign_partition_consistent}};
  j["tolerance"] = c.tolerance;
  return j;
}

json to_json(const Lefschetz& l) {
  return {{"prim_contraction", l.prim_contraction},
          {"identity_residual", l.identity_residual},
          {"integral_alpha", l.integral_alpha},
          {"integral_prim", l.integral_prim},
          {"sign_min", l.sign_field.size() ? l.sign_field.minCoeff() : 0.0},
          {"sign_max", l.sign_field.size() ? l.sign_field.maxCoeff() : 0.0}};
}

json to_json(const Completion& c) {
  return {{"gamma_sg", c.gamma_sg},
          {"root_residual", c.root_residual},
          {"omega_identity_residual", c.omega_identity_residual},
          {"dbar_Omega_residual", c.dbar_Omega_residual},
          {"d_tilde_residual", c.d_tilde_residual},
          {"tilde_volume", c.tilde_volume},
          {"tilde_volume_residual", c.tilde_volume_residual}};
}

json to_json(const HoloAudit& h) { return {{"tested", h.tested}, {"max_del", h.max_del}, {"passes", h.passes}}; }

json to_json(const ClassicalGroups& g) {
  return {{"dolbeault", table(g.dolbeault)},
          {"bott_chern", table(g.bott_chern)},
          {"aeppli", table(g.aeppli)},
          {"de_rham", g.de_rham},
          {"duality_holds", g.duality_holds}};
}

json to_json(const PageSummary& s) { return {{"r", s.r}, {"dims", table(s.dims)}, {"degenerate", s.degenerate}}; }

json to_json(const HigherPageGroups& h) {
  return {{"r", h.r}, {"bc", table(h.bc)}, {"aeppli", table(h.aeppli)}, {"er", table(h.er)},
          {"diagnostic", h.diagnostic}};
}

json to_json(const ErMembership& e) {
  return {{"r", e.r},
          {"closed", e.closed},
          {"exact", e.exact},
          {"closed_residual", e.closed_residual},
          {"exact_residual", e.exact_residual},
          {"closed_witnesses", witnesses(e.closed_witnesses)},
          {"exact_witnesses", witnesses(e.exact_witnesses)}};
}

json to_json(const E2TorsionClass& e) {
  return {{"group", e.cls.group},
          {"p", e.cls.p},
          {"q", e.cls.q},
          {"coordinates", complex_array(e.cls.coordinates)},
          {"vanishes", e.vanishes},
          {"membership_residual", e.membership_residual},
          {"xi_residual", e.xi_residual},
          {"dual_value", e.dual_value},
          {"d2_image", e.d2_image},
          {"invariance_defect", e.invariance_defect}};
}

json to_json(const E2Intersection& e) {
  return {{"stage1_residual", e.stage1_residual}, {"stage2_residual", e.stage2_residual},
          {"d_residual", e.d_residual},           {"intersection", e.intersection},
          {"A", e.A},                             {"residual", e.residual}};
}

json to_json(const CriticalCertificate& c) {
  return {{"balanced_defect", c.balanced_defect}, {"skt_residual", c.skt_residual},
          {"kahler_defect", c.kahler_defect},     {"kahler_bound", c.kahler_bound},
          {"critical", c.critical},               {"kahler", c.kahler}};
}

json to_json(const DescentIterate& it) {
  return {{"k", it.k},
          {"F", it.F},
          {"vol", it.vol},
          {"A", it.A},
          {"dbar_star_omega", it.dbar_star_omega},
          {"d_omega", it.d_omega},
          {"dF", it.dF},
          {"step", it.step},
          {"secant_slope", it.secant_slope},
          {"probe_slope", it.probe_slope},
          {"max_step", it.max_step}};
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("InvalidInput", "cannot write " + tmp);
    out << contents;
    out.flush();
    if (!out) throw Error("InvalidInput", "write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("InvalidInput", "cannot rename " + tmp + " to " + path);
  }
}

}  // namespace hsg
