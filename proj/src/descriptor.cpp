#include "rdecay/descriptor.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rdecay/error.hpp"

namespace rdecay {

namespace {

using nlohmann::json;

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ParseError("model descriptor: '" + what + "' must be a number");
  return v.get<double>();
}

}  // namespace

ModelManifold parse_model(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model descriptor is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("model descriptor must be a JSON object");
  static const std::set<std::string> known{"type", "dimension", "kappa", "params", "table"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw ParseError("model descriptor: unknown field '" + key + "'");
  }
  if (!doc.contains("type") || !doc["type"].is_string()) throw ParseError("model descriptor: missing string 'type'");
  if (!doc.contains("dimension")) throw ParseError("model descriptor: missing 'dimension'");
  const double nd = number(doc["dimension"], "dimension");
  if (nd != static_cast<int>(nd)) throw ParseError("model descriptor: 'dimension' must be an integer");
  const int n = static_cast<int>(nd);

  Params params;
  if (doc.contains("params")) {
    if (!doc["params"].is_object()) throw ParseError("model descriptor: 'params' must be an object");
    for (const auto& [key, value] : doc["params"].items()) params[key] = number(value, "params." + key);
  }
  const bool has_kappa = doc.contains("kappa");
  const double kappa = has_kappa ? number(doc["kappa"], "kappa") : 0.0;

  try {
    const PresetKind kind = preset_from_string(doc["type"].get<std::string>());
    if (kind == PresetKind::custom_table) {
      if (!doc.contains("table") || !doc["table"].is_array()) {
        throw ParseError("model descriptor: custom_table needs a 'table' array");
      }
      MuTable table;
      for (const json& row : doc["table"]) {
        if (!row.is_array() || row.size() != 2) throw ParseError("model descriptor: table rows must be [r, mu]");
        table.emplace_back(number(row[0], "table r"), number(row[1], "table mu"));
      }
      return make_custom(n, kappa, table, params);
    }
    if (doc.contains("table")) throw ParseError("model descriptor: 'table' is only valid for custom_table");
    if (kind == PresetKind::constant_curvature && has_kappa) {
      if (params.count("kappa") && params["kappa"] != kappa) {
        throw ParseError("model descriptor: 'kappa' and 'params.kappa' disagree");
      }
      params["kappa"] = kappa;
    }
    ModelManifold m = make_preset(kind, n, params);
    if (has_kappa && kappa != m.kappa()) {
      // A declared Ricci parameter must still satisfy the comparison.
      ModelManifold declared = m.with_kappa(kappa);
      const BishopReport rep = bishop_check(declared);
      if (!rep.pass) {
        throw ParseError("model descriptor: curvature comparison fails for kappa=" + std::to_string(kappa) +
                         " first at r=" + std::to_string(rep.first_violation_r));
      }
      return declared;
    }
    return m;
  } catch (const ParseError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("model descriptor: ") + e.what());
  }
}

ModelManifold load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read model descriptor '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

std::string describe_model(const ModelManifold& m) {
  json j;
  j["type"] = to_string(m.kind());
  j["dimension"] = m.dimension();
  j["kappa"] = m.kappa();
  j["params"] = json::object();
  for (const auto& [k, v] : m.params()) j["params"][k] = v;
  if (m.kind() == PresetKind::custom_table) {
    json table = json::array();
    for (double r : m.knots()) table.push_back({r, m.mu(r)});
    j["table"] = table;
  }
  return j.dump();
}

}  // namespace rdecay
