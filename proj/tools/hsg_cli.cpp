// hsg: validate models, report on metrics, run the torsion descent.
#include "hsg/cohomology.hpp"
#include "hsg/descent.hpp"
#include "hsg/hs.hpp"
#include "hsg/io.hpp"
#include "hsg/lie.hpp"
#include "hsg/torus.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>

using namespace hsg;

namespace {

enum Exit { kOk = 0, kNumerical = 1, kInvalid = 2 };

const std::set<std::string> kInvalidKinds = {
    "ParseError",  "IntegrabilityError", "JacobiError",  "UnimodularityError", "InvalidInput",
    "NotPositive", "InvalidResolution",  "AliasingRisk", "BidegreeError",      "ModelMismatch"};

// Kinds that answer a question about the metric rather than signal a failure.
const std::set<std::string> kVerdictKinds = {"NotFeasible", "NotHS", "NotSKT", "HypothesisFailed", "Unsupported"};

struct RunConfig {
  std::string model = "catalogue:torus3";
  std::string metric = "reference";
  std::string perturb;
  int resolution = 0;
  std::string mask;
  double tol = 1e-6;
  int max_iters = 200;
  std::string format = "json";
  std::string out;
  unsigned seed = 0;
};

struct Setup {
  ModelPtr model;
  std::optional<TorusFixture> fixture;
  Form omega;
};

json error_json(const std::string& kind, const std::string& msg) { return {{"kind", kind}, {"message", msg}}; }

json config_json(const RunConfig& c) {
  return {{"model", c.model},         {"metric", c.metric}, {"perturb", c.perturb}, {"resolution", c.resolution},
          {"mask", c.mask},           {"tol", c.tol},       {"max_iters", c.max_iters},
          {"format", c.format},       {"seed", c.seed}};
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<int> parse_mask(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(coordinate_index(tok));
  }
  if (out.empty()) throw Error("InvalidInput", "empty mask");
  return out;
}

ModelPtr build_model(const RunConfig& c, std::optional<TorusFixture>& fixture) {
  if (c.model.rfind("catalogue:", 0) == 0) return load_catalogue(c.model.substr(10));
  if (c.model == "torus" || ends_with(c.model, ".fixture")) {
    TorusFixture f = c.model == "torus" ? TorusFixture{} : read_fixture_file(c.model);
    if (c.resolution) f.resolution = c.resolution;
    if (!c.mask.empty()) f.mask = parse_mask(c.mask);
    fixture = f;
    return make_torus_model(f.resolution, f.mask);
  }
  if (!std::filesystem::exists(c.model)) throw Error("InvalidInput", "no such model file: " + c.model);
  return load_model(read_model_file(c.model));
}

Form base_metric(const RunConfig& c, const ModelPtr& m) {
  if (c.metric == "reference") return reference_metric(m);
  if (c.metric == "random") {
    std::mt19937 rng(c.seed);
    std::normal_distribution<double> nd;
    Mat A(m->n, m->n);
    for (int i = 0; i < m->n; ++i)
      for (int j = 0; j < m->n; ++j) A(i, j) = cplx(nd(rng), nd(rng));
    return form_from_hermitian(m, std::vector<Mat>(m->points(), 0.3 * A * A.adjoint() + Mat::Identity(m->n, m->n)));
  }
  std::ifstream in(c.metric);
  if (!in) throw Error("InvalidInput", "cannot read metric file " + c.metric);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("InvalidInput", std::string("metric file is not JSON: ") + e.what());
  }
  return form_from_json(m, j);
}

// The (1,0)-form u of the Aeppli shift, if any.
std::optional<Form> perturbation(const RunConfig& c, const Setup& s) {
  std::string spec = c.perturb;
  if (spec.empty()) {
    if (s.fixture && !s.fixture->terms.empty()) return synthesize_form(s.model, 1, 0, s.fixture->terms);
    return std::nullopt;
  }
  if (spec == "none") return std::nullopt;
  if (spec.rfind("standard", 0) == 0) {
    if (!s.model->grid) throw Error("InvalidInput", "the standard perturbation needs a torus model");
    double eps = 0.05;
    if (spec.size() > 8) {
      if (spec[8] != ':') throw Error("InvalidInput", "perturbation must be standard or standard:<eps>");
      try {
        eps = std::stod(spec.substr(9));
      } catch (const std::exception&) {
        throw Error("InvalidInput", "bad perturbation amplitude '" + spec.substr(9) + "'");
      }
    }
    return standard_perturbation(s.model, eps);
  }
  TorusFixture f = read_fixture_file(spec);
  if (!s.model->grid) {
    Vec coeffs = Vec::Zero(3);
    for (const auto& t : f.terms) {
      for (int k : t.k)
        if (k) throw Error("InvalidInput", "lie models accept only constant perturbations");
      coeffs[t.channel] += t.amplitude;
    }
    if (s.model->n != 3) throw Error("InvalidInput", "perturbation files describe forms in dimension 3");
    return Form::constant(s.model, 1, 0, coeffs);
  }
  return synthesize_form(s.model, 1, 0, f.terms);
}

Setup build(const RunConfig& c) {
  Setup s;
  s.model = build_model(c, s.fixture);
  s.omega = base_metric(c, s.model);
  if (auto u = perturbation(c, s)) {
    Form du = differential(Part::dbar, *u);
    s.omega = s.omega + du + conjugate(du);
  }
  return s;
}

json model_json(const Model& m) {
  json j = {{"name", m.name}, {"backend", m.algebraic() ? "lie" : "torus"}, {"n", m.n}, {"points", m.points()}};
  if (m.grid) j["resolution"] = m.grid->resolution;
  return j;
}

// Computations are restricted to two backends; reports say which one applies.
std::string scope(const Model& m) {
  if (m.algebraic())
    return "lie backend: invariant forms of a Lie-algebra model stand in for forms on the manifold; "
           "cohomology dimensions are those of the invariant subcomplex";
  return "torus backend: flat complex 3-torus on a spectral grid with a dependence mask";
}

void emit(const RunConfig& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(c.out, text);
  }
}

std::string csv_of(const json& j) {
  std::ostringstream os;
  os << "key,value\n";
  const json flat = j.flatten();
  for (const auto& [k, v] : flat.items()) {
    if (v.is_array() || v.is_object()) continue;
    os << k << ',' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
  }
  return os.str();
}

void emit_document(const RunConfig& c, const json& doc) {
  emit(c, c.format == "csv" ? csv_of(doc) : doc.dump(2) + "\n");
}

json failure_doc(const std::string& cmd, const RunConfig& c, const std::string& kind, const std::string& msg) {
  return {{"schema", kSchemaVersion}, {"command", cmd},  {"config", config_json(c)},
          {"ok", false},              {"error", error_json(kind, msg)}};
}

// Failure documents go where the command's document would have gone.
void report_failure(const std::string& cmd, const RunConfig& c, const std::string& kind, const std::string& msg) {
  const std::string text = failure_doc(cmd, c, kind, msg).dump(2) + "\n";
  if (cmd == "descend" || c.out.empty()) {
    std::cout << text;
    return;
  }
  try {
    write_file_atomic(c.out, text);
  } catch (const Error&) {
    std::cout << text;
  }
}

int cmd_validate(const RunConfig& c) {
  Setup s = build(c);
  MetricPtr g = Metric::create(s.omega);
  json doc = {{"schema", kSchemaVersion}, {"command", "validate"}, {"config", config_json(c)},
              {"ok", true},               {"model", model_json(*s.model)},
              {"metric_min_eigenvalue", g->min_eigenvalue()}};
  emit_document(c, doc);
  return kOk;
}

// Runs one report section; verdict errors become markers, others fail the run.
template <class F>
void section(json& doc, const char* key, bool& failed, F&& f) {
  try {
    doc[key] = f();
  } catch (const Error& e) {
    doc[key] = {{"error", error_json(e.kind(), e.what())}};
    if (!kVerdictKinds.count(e.kind())) failed = true;
  }
}

int cmd_report(const RunConfig& c) {
  Setup s = build(c);
  MetricPtr g = Metric::create(s.omega);
  const Model& m = *s.model;
  bool failed = false;
  json doc = {{"schema", kSchemaVersion}, {"command", "report"}, {"scope", scope(m)},
              {"config", config_json(c)},   {"model", model_json(m)}};
  doc["tolerances"] = {{"library", default_tolerance(m)}, {"tol", c.tol}};

  Classification cls = classify_metric(*g);
  doc["classification"] = to_json(cls);
  std::optional<TorsionReport> tr;
  section(doc, "torsion", failed, [&] {
    tr = energy_and_volume(*g);
    return to_json(*tr);
  });
  doc["summary"] = {{"kahler", cls.kahler},
                    {"hs_feasible", cls.hs_feasible},
                    {"F", tr ? json(tr->F) : json(nullptr)},
                    {"G", tr && tr->G ? json(*tr->G) : json(nullptr)},
                    {"torsion_class_zero", tr ? json(tr->torsion_class_zero) : json(nullptr)},
                    {"vol", volume(*g)},
                    {"A", tr ? json(tr->A) : json(nullptr)},
                    {"tilde_mass", tr ? json(tr->tilde_mass) : json(nullptr)}};
  if (!cls.hs_feasible) doc["summary"]["hs_certificate"] = {{"residual", cls.residuals.hs}};

  section(doc, "lefschetz", failed, [&] { return to_json(lefschetz_alpha(*g)); });
  section(doc, "holomorphic_oneforms", failed, [&] { return to_json(holo_oneform_audit(*g)); });
  if (tr) {
    section(doc, "completion", failed, [&] {
      Completion comp = sg_and_completion(*g, *tr);
      json j = to_json(comp);
      MetricPtr gamma = Metric::create(comp.gamma);
      MACoefficients ma = ma_constants(*g, *gamma, tr->A);
      j["monge_ampere"] = {{"c", ma.c},
                           {"c_min", ma.c_min},
                           {"holder_gap", ma.holder_gap},
                           {"conformal_gap", ma.conformal_gap},
                           {"b_lower", ma.b_lower}};
      return j;
    });
  }

  if (m.algebraic()) {
    section(doc, "e2_torsion_class", failed, [&] { return to_json(e2_torsion_class(*g)); });
    section(doc, "cohomology", failed, [&] {
      json j;
      j["subcomplex"] = "invariant";
      j["classical"] = to_json(classical_groups(s.model));
      json pages = json::array();
      for (int r = 1; r <= m.n + 1; ++r) pages.push_back(to_json(spectral_page(s.model, r)));
      j["frolicher_pages"] = pages;
      json higher = json::array();
      for (int r = 1; r <= 3; ++r) higher.push_back(to_json(higher_page_groups(s.model, r)));
      j["higher_page_groups"] = higher;
      j["omega_e2_closed"] = to_json(er_closed_exact(g->omega(), 2));
      return j;
    });
    section(doc, "e2_intersection", failed, [&] { return to_json(e2_intersection(*g)); });
  }
  doc["ok"] = !failed;
  emit_document(c, doc);
  return failed ? kNumerical : kOk;
}

std::string join(const std::string& dir, const std::string& name) { return (std::filesystem::path(dir) / name).string(); }

int cmd_descend(const RunConfig& c) {
  Setup s = build(c);
  MetricPtr g = Metric::create(s.omega);
  if (c.max_iters < 0) throw Error("InvalidInput", "max-iters must be non-negative");
  const std::string dir = c.out.empty() ? "." : c.out;
  std::filesystem::create_directories(dir);

  DescentOptions opt;
  opt.tol = c.tol;
  opt.max_iters = c.max_iters;
  DescentTrace trace;
  std::optional<Error> failure;
  try {
    trace = descend(*g, opt);
  } catch (const DescentError& e) {
    trace = e.trace();
    failure = e;
  }

  if (c.format == "csv") {
    std::ostringstream os;
    write_trace_csv(os, trace);
    write_file_atomic(join(dir, "trace.csv"), os.str());
  } else {
    json rows = json::array();
    for (const auto& it : trace.iterates) rows.push_back(to_json(it));
    write_file_atomic(join(dir, "trace.json"),
                      json{{"schema", kSchemaVersion}, {"termination", trace.termination}, {"iterates", rows}}.dump(2) +
                          "\n");
  }
  const MetricPtr final_metric = trace.final_metric ? trace.final_metric : g;
  write_file_atomic(join(dir, "final_metric.json"), form_to_json(final_metric->omega()).dump() + "\n");

  CriticalCertificate cert = certify_critical(*final_metric, c.tol);
  json doc = {{"schema", kSchemaVersion},
              {"command", "descend"},
              {"scope", scope(*s.model)},
              {"config", config_json(c)},
              {"model", model_json(*s.model)},
              {"tolerances", {{"library", default_tolerance(*s.model)}, {"tol", c.tol}}},
              {"iterations", trace.iterates.empty() ? 0 : int(trace.iterates.size()) - 1},
              {"termination", failure ? failure->kind() : trace.termination},
              {"certificate", to_json(cert)}};
  const bool ok = !failure && (trace.termination != "converged" || cert.kahler);
  doc["ok"] = ok;
  if (failure) doc["error"] = error_json(failure->kind(), failure->what());
  write_file_atomic(join(dir, "certificate.json"), doc.dump(2) + "\n");
  std::cout << doc.dump(2) << "\n";
  return ok ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hermitian-symplectic metric toolkit"};
  app.require_subcommand(1);
  RunConfig cfg;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--model", cfg.model, "catalogue:<name>, torus, a .model file or a .fixture file");
    sub->add_option("--metric", cfg.metric, "reference, random, or a form JSON file");
    sub->add_option("--perturb", cfg.perturb, "none, standard[:eps] or a fixture file with terms");
    sub->add_option("--resolution", cfg.resolution, "torus grid points per active coordinate");
    sub->add_option("--mask", cfg.mask, "active torus coordinates, e.g. x1,x2");
    sub->add_option("--tol", cfg.tol, "criticality tolerance on ||dbar* omega||");
    sub->add_option("--max-iters", cfg.max_iters, "descent iteration budget");
    sub->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", cfg.out, "output file (validate, report) or directory (descend)");
    sub->add_option("--seed", cfg.seed, "seed for random metrics");
  };
  auto* validate = app.add_subcommand("validate", "load a model and run its eager checks");
  auto* report = app.add_subcommand("report", "metric report as one JSON document");
  auto* desc = app.add_subcommand("descend", "torsion-energy descent with trace and certificate");
  for (auto* sub : {validate, report, desc}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "validate") return cmd_validate(cfg);
    if (cmd == "report") return cmd_report(cfg);
    return cmd_descend(cfg);
  } catch (const Error& e) {
    report_failure(cmd, cfg, e.kind(), e.what());
    return kInvalidKinds.count(e.kind()) ? kInvalid : kNumerical;
  } catch (const std::exception& e) {
    report_failure(cmd, cfg, "InternalError", e.what());
    return kNumerical;
  }
}
