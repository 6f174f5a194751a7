#pragma once

#include "hsg/cohomology.hpp"
#include "hsg/descent.hpp"
#include "hsg/hs.hpp"
#include "hsg/torus.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace hsg {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Name of a basis monomial, e.g. "phi1^phibar2"; "1" for the empty one.
std::string mono_name(Mono m, int n);

// Form export: a JSON header (bidegree, channel order, grid shape) and the
// flat channel-major coefficients as [re, im] pairs.
json form_to_json(const Form& a);
// The model must match the header's dimension, grid and bidegree.
Form form_from_json(const ModelPtr& m, const json& j);

// Torus fixture file: grid resolution, dependence mask and the frequency
// table of a (1,0)-form u; see docs/model-format.md.
struct TorusFixture {
  int resolution = 16;
  std::vector<int> mask{0, 1};
  std::vector<FrequencyTerm> terms;
};
TorusFixture parse_fixture_text(const std::string& text);
TorusFixture read_fixture_file(const std::string& path);

json to_json(const TorsionReport& t);
json to_json(const Classification& c);
json to_json(const Lefschetz& l);
json to_json(const Completion& c);
json to_json(const HoloAudit& h);
json to_json(const ClassicalGroups& g);
json to_json(const PageSummary& s);
json to_json(const HigherPageGroups& h);
json to_json(const ErMembership& e);
json to_json(const E2TorsionClass& e);
json to_json(const E2Intersection& e);
json to_json(const CriticalCertificate& c);
json to_json(const DescentIterate& it);

// Writes to a sibling temporary file and renames it over path.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace hsg
