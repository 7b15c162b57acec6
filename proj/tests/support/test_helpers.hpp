#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hclda/dataset.hpp"

namespace test_support {

using json = nlohmann::json;

/// Minimal JSON-Schema checker covering the subset the shipped schemas use:
/// type, required, properties, items. Returns the first violation or "".
inline std::string schema_violation(const json& schema, const json& value,
                                    const std::string& where = "$") {
  if (schema.contains("type")) {
    const std::string type = schema["type"].get<std::string>();
    const bool ok =
        (type == "object" && value.is_object()) ||
        (type == "array" && value.is_array()) ||
        (type == "string" && value.is_string()) ||
        (type == "integer" && value.is_number_integer()) ||
        (type == "number" && value.is_number()) ||
        (type == "boolean" && value.is_boolean()) ||
        (type == "null" && value.is_null());
    if (!ok) return where + ": expected " + type;
  }
  if (schema.contains("required") && value.is_object()) {
    for (const auto& key : schema["required"]) {
      if (!value.contains(key.get<std::string>())) {
        return where + ": missing '" + key.get<std::string>() + "'";
      }
    }
  }
  if (schema.contains("properties") && value.is_object()) {
    for (const auto& [key, subschema] : schema["properties"].items()) {
      if (!value.contains(key)) continue;
      const std::string sub =
          schema_violation(subschema, value.at(key), where + "." + key);
      if (!sub.empty()) return sub;
    }
  }
  if (schema.contains("items") && value.is_array()) {
    for (std::size_t k = 0; k < value.size(); ++k) {
      const std::string sub = schema_violation(
          schema["items"], value[k], where + "[" + std::to_string(k) + "]");
      if (!sub.empty()) return sub;
    }
  }
  return "";
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json parsed;
  in >> parsed;
  return parsed;
}

/// Two classes far apart relative to their spread; linearly separable.
inline hclda::LabeledDataset separated_pair(int per_class, double gap,
                                            unsigned seed_offset = 0) {
  const int n = 2 * per_class;
  hclda::LabeledDataset data;
  data.J = 2;
  data.X.resize(n, 2);
  data.y.resize(n);
  // deterministic low-discrepancy offsets, no RNG needed
  const int offset = static_cast<int>(seed_offset);
  for (int i = 0; i < per_class; ++i) {
    const double dx = 0.1 * ((i * 7 + offset) % 11 - 5);
    const double dy = 0.1 * ((i * 5 + offset) % 13 - 6);
    data.X.row(i) << dx, dy;
    data.y[i] = 1;
    data.X.row(per_class + i) << gap + dy, gap + dx;
    data.y[per_class + i] = 2;
  }
  return data;
}

}  // namespace test_support
