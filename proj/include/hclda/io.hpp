#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hclda/dataset.hpp"
#include "hclda/errors.hpp"
#include "hclda/metaclass.hpp"

namespace hclda {

using json = nlohmann::json;

inline std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (const char ch : field) {
    if (ch == '"') out += "\"\"";
    else out += ch;
  }
  out += '"';
  return out;
}

/// One CSV record; quoted fields may contain commas and doubled quotes.
/// Embedded line breaks are not supported.
inline std::vector<std::string> parse_csv_record(const std::string& line,
                                                 int line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool was_quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (in_quotes) {
      if (ch == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          field += '"';
          ++k;
        } else {
          in_quotes = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"' && field.empty() && !was_quoted) {
      in_quotes = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(field);
      field.clear();
      was_quoted = false;
    } else {
      field += ch;
    }
  }
  if (in_quotes) {
    throw ParseError("unterminated quoted field on line " +
                     std::to_string(line_no));
  }
  fields.push_back(field);
  return fields;
}

inline std::vector<std::string> read_csv_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline double parse_number(const std::string& field, int line_no,
                           const std::string& column) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || field.empty()) {
    throw ParseError("non-numeric value '" + field + "' in column '" + column +
                     "' on line " + std::to_string(line_no));
  }
  return value;
}

struct LoadedDataset {
  LabeledDataset data;
  std::vector<std::string> label_names;    // class id - 1 -> original label
  std::vector<std::string> feature_names;  // length p
};

/// Dataset CSV: header row, first column `label`, remaining columns numeric
/// features. Integer labels keep numeric order; anything else maps to 1..J
/// lexicographically.
inline LoadedDataset load_dataset_csv(const std::string& path) {
  const std::vector<std::string> lines = read_csv_lines(path);
  if (lines.empty()) throw ParseError("'" + path + "' is empty");
  const std::vector<std::string> header = parse_csv_record(lines[0], 1);
  if (header.empty() || header[0] != "label") {
    throw ParseError("first column must be named 'label', found '" +
                     (header.empty() ? std::string() : header[0]) + "'");
  }
  const int p = static_cast<int>(header.size()) - 1;
  if (p < 1) throw ParseError("no feature columns after 'label'");
  const int n = static_cast<int>(lines.size()) - 1;
  if (n < 1) throw ParseError("no data rows in '" + path + "'");

  LoadedDataset out;
  out.feature_names.assign(header.begin() + 1, header.end());
  out.data.X.resize(n, p);
  std::vector<std::string> raw_labels(n);
  for (int i = 0; i < n; ++i) {
    const int line_no = i + 2;
    const std::vector<std::string> fields =
        parse_csv_record(lines[i + 1], line_no);
    if (static_cast<int>(fields.size()) != p + 1) {
      throw ParseError("line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(p + 1));
    }
    raw_labels[i] = fields[0];
    for (int k = 0; k < p; ++k) {
      out.data.X(i, k) = parse_number(fields[k + 1], line_no, header[k + 1]);
    }
  }

  auto as_integer = [](const std::string& s) -> std::optional<long> {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (*end != '\0') return std::nullopt;
    return v;
  };
  bool all_integer = true;
  for (const auto& s : raw_labels) all_integer = all_integer && as_integer(s).has_value();

  // Numeric order for integer labels, lexicographic otherwise; the string
  // tiebreak keeps the order total for inputs like "7" vs "007".
  const auto before = [&](const std::string& a, const std::string& b) {
    if (all_integer) {
      const long ka = *as_integer(a);
      const long kb = *as_integer(b);
      if (ka != kb) return ka < kb;
    }
    return a < b;
  };
  std::vector<std::string> names = raw_labels;
  std::sort(names.begin(), names.end(), before);
  names.erase(std::unique(names.begin(), names.end()), names.end());
  if (names.size() < 2) {
    throw ParseError("dataset contains a single class; nothing to classify");
  }
  out.label_names = names;
  out.data.J = static_cast<int>(names.size());
  out.data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto it =
        std::lower_bound(names.begin(), names.end(), raw_labels[i], before);
    out.data.y[i] = static_cast<int>(it - names.begin()) + 1;
  }
  validate(out.data);
  return out;
}

inline void save_dataset_csv(const std::string& path,
                             const LabeledDataset& data,
                             const std::vector<std::string>* label_names =
                                 nullptr) {
  std::ofstream outfile(path, std::ios::binary);
  if (!outfile) throw InvalidInput("cannot write '" + path + "'");
  outfile << "label";
  for (int k = 0; k < data.p(); ++k) outfile << ",x" << (k + 1);
  outfile << "\r\n";
  for (int i = 0; i < data.n(); ++i) {
    if (label_names) {
      outfile << csv_escape((*label_names)[data.y[i] - 1]);
    } else {
      outfile << data.y[i];
    }
    for (int k = 0; k < data.p(); ++k) {
      outfile << ',' << format_double(data.X(i, k));
    }
    outfile << "\r\n";
  }
}

/// Feature rows for prediction. An empty file yields zero rows; a leading
/// `label` column, when present, is ignored.
inline Eigen::MatrixXd load_feature_matrix(const std::string& path) {
  const std::vector<std::string> lines = read_csv_lines(path);
  if (lines.empty()) return Eigen::MatrixXd(0, 0);
  const std::vector<std::string> header = parse_csv_record(lines[0], 1);
  const bool skip_label = !header.empty() && header[0] == "label";
  const int offset = skip_label ? 1 : 0;
  const int p = static_cast<int>(header.size()) - offset;
  if (p < 1) throw ParseError("no feature columns in '" + path + "'");
  const int n = static_cast<int>(lines.size()) - 1;
  Eigen::MatrixXd X(std::max(n, 0), p);
  for (int i = 0; i < n; ++i) {
    const int line_no = i + 2;
    const std::vector<std::string> fields =
        parse_csv_record(lines[i + 1], line_no);
    if (static_cast<int>(fields.size()) != p + offset) {
      throw ParseError("line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(p + offset));
    }
    for (int k = 0; k < p; ++k) {
      X(i, k) = parse_number(fields[k + offset], line_no, header[k + offset]);
    }
  }
  return X;
}

inline json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& rows,
                                        const std::string& name) {
  if (!rows.is_array()) throw ParseError("'" + name + "' must be an array");
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
  Eigen::MatrixXd M(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(rows[i].size()) != c) {
      throw ParseError("'" + name + "' is ragged");
    }
    for (int j = 0; j < c; ++j) M(i, j) = rows[i][j].get<double>();
  }
  return M;
}

inline json discriminant_to_json(const DiscriminantModel& model) {
  json out;
  out["D"] = model.D;
  out["delta"] = model.delta;
  out["T"] = matrix_to_json(model.T);
  json lambdas = json::array();
  for (int d = 0; d < model.D; ++d) lambdas.push_back(model.lambdas(d));
  out["lambdas"] = std::move(lambdas);
  out["centroids"] = matrix_to_json(model.centroids);
  out["labels"] = model.labels;
  return out;
}

inline DiscriminantModel discriminant_from_json(const json& in) {
  DiscriminantModel model;
  model.D = in.at("D").get<int>();
  model.delta = in.at("delta").get<double>();
  model.T = matrix_from_json(in.at("T"), "T");
  const auto& lambdas = in.at("lambdas");
  model.lambdas.resize(static_cast<Eigen::Index>(lambdas.size()));
  for (std::size_t d = 0; d < lambdas.size(); ++d) {
    model.lambdas(static_cast<Eigen::Index>(d)) = lambdas[d].get<double>();
  }
  model.centroids = matrix_from_json(in.at("centroids"), "centroids");
  model.labels = in.at("labels").get<std::vector<int>>();
  return model;
}

inline constexpr int kModelFormatVersion = 1;

inline json model_to_json(const TwoStageModel& model,
                          const std::vector<std::string>& label_names) {
  json out;
  out["version"] = kModelFormatVersion;
  out["delta"] = model.delta;
  out["D"] = model.D_requested;
  out["labels"] = label_names;
  out["partition"] = model.partition.blocks;
  out["stage1"] =
      model.stage1 ? discriminant_to_json(*model.stage1) : json(nullptr);
  json stage2 = json::array();
  for (const auto& [block, fitted] : model.stage2) {
    json entry = discriminant_to_json(fitted);
    entry["block"] = block;
    stage2.push_back(std::move(entry));
  }
  out["stage2"] = std::move(stage2);
  return out;
}

inline std::pair<TwoStageModel, std::vector<std::string>> model_from_json(
    const json& in) {
  if (in.at("version").get<int>() != kModelFormatVersion) {
    throw ParseError("unsupported model format version");
  }
  TwoStageModel model;
  model.delta = in.at("delta").get<double>();
  model.D_requested = in.at("D").get<int>();
  std::vector<std::string> label_names =
      in.at("labels").get<std::vector<std::string>>();
  model.partition = make_partition(
      in.at("partition").get<std::vector<std::vector<int>>>(),
      static_cast<int>(label_names.size()));
  if (!in.at("stage1").is_null()) {
    model.stage1 = discriminant_from_json(in.at("stage1"));
  }
  for (const auto& entry : in.at("stage2")) {
    model.stage2.emplace(entry.at("block").get<int>(),
                         discriminant_from_json(entry));
  }
  return {std::move(model), std::move(label_names)};
}

inline void save_model(const std::string& path, const TwoStageModel& model,
                       const std::vector<std::string>& label_names) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << model_to_json(model, label_names).dump(2) << '\n';
}

inline std::pair<TwoStageModel, std::vector<std::string>> load_model(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  json parsed;
  try {
    in >> parsed;
  } catch (const json::exception& err) {
    throw ParseError("invalid model JSON in '" + path + "': " + err.what());
  }
  try {
    return model_from_json(parsed);
  } catch (const json::exception& err) {
    throw ParseError("invalid model JSON in '" + path + "': " + err.what());
  }
}

inline json merge_trace_to_json(const MergeTrace& trace) {
  json out;
  out["selected_t"] = trace.selected_t;
  json steps = json::array();
  for (const auto& step : trace.steps) {
    json entry;
    entry["t"] = step.t;
    if (step.t == 0) {
      entry["merged"] = json(nullptr);
    } else {
      entry["merged"] = json::array({step.merged_a, step.merged_b});
    }
    entry["cv"] = step.cv;
    entry["blocks"] = step.partition.blocks;
    steps.push_back(std::move(entry));
  }
  out["steps"] = std::move(steps);
  return out;
}

}  // namespace hclda
