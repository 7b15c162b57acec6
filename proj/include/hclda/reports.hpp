#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hclda/cross_validation.hpp"
#include "hclda/errors.hpp"
#include "hclda/io.hpp"

namespace hclda {

struct ExperimentConfig {
  std::string model = "model2";  // model1 | model2 | csv
  int n = 600;
  int p = 20;
  int J = 30;
  int D = 2;
  double delta = 1e-5;
  std::uint64_t seed = 1;
  int replicates = 10;
  CvEngine engine = CvEngine::fast;
  bool loo_means = true;
  std::string csv_path;
  std::string out_dir = ".";
  unsigned threads = 0;
};

inline void validate_config(const ExperimentConfig& config) {
  if (config.delta < 0.0) throw InvalidInput("delta must be nonnegative");
  if (config.D < 1) throw InvalidDimension("dim must be positive");
  if (config.replicates < 1) throw InvalidInput("replicates must be positive");
  if (config.model == "model1") {
    if (config.n < 18) throw InvalidInput("model1 needs n >= 2J = 18");
  } else if (config.model == "model2") {
    if (config.J < 3 || config.J % 3 != 0) {
      throw InvalidInput("model2 needs a class count divisible by 3");
    }
    if (config.n < 2 * config.J) {
      throw InvalidInput("model2 needs n >= 2J");
    }
    if (config.p < 1) throw InvalidInput("model2 needs p >= 1");
  } else if (config.model == "csv") {
    if (config.csv_path.empty()) {
      throw InvalidInput("model 'csv' requires a dataset path");
    }
  } else {
    throw InvalidInput("unknown model '" + config.model + "'");
  }
}

inline json config_to_json(const ExperimentConfig& config) {
  json out;
  out["model"] = config.model;
  out["n"] = config.n;
  out["p"] = config.p;
  out["J"] = config.J;
  out["D"] = config.D;
  out["delta"] = config.delta;
  out["seed"] = config.seed;
  out["replicates"] = config.replicates;
  out["engine"] = config.engine == CvEngine::fast ? "fast" : "exact";
  out["loo_means"] = config.loo_means;
  if (!config.csv_path.empty()) out["csv"] = config.csv_path;
  return out;
}

/// Mean with the one-standard-error bar: sd is the n-1 sample deviation and
/// se = sd / sqrt(count).
struct SummaryStat {
  int count = 0;
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
};

inline SummaryStat summarize(const std::vector<double>& values) {
  SummaryStat stat;
  stat.count = static_cast<int>(values.size());
  if (stat.count == 0) return stat;
  double sum = 0.0;
  for (const double v : values) sum += v;
  stat.mean = sum / stat.count;
  if (stat.count > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - stat.mean) * (v - stat.mean);
    stat.sd = std::sqrt(ss / (stat.count - 1));
    stat.se = stat.sd / std::sqrt(static_cast<double>(stat.count));
  }
  return stat;
}

inline json summary_to_json(const SummaryStat& stat) {
  return json{{"count", stat.count},
              {"mean", stat.mean},
              {"sd", stat.sd},
              {"se", stat.se}};
}

inline void write_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (k) out << ',';
    out << csv_escape(header[k]);
  }
  out << "\r\n";
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out << ',';
      out << csv_escape(row[k]);
    }
    out << "\r\n";
  }
}

inline void write_json(const std::string& path, const json& value) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << value.dump(2) << '\n';
}

/// Standard report envelope: configuration, one entry per replicate, and the
/// aggregated summary.
inline json make_report(const ExperimentConfig& config, json per_replicate,
                        json summary) {
  json out;
  out["config"] = config_to_json(config);
  out["per_replicate"] = std::move(per_replicate);
  out["summary"] = std::move(summary);
  return out;
}

}  // namespace hclda
