#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hclda/hclda.hpp"

namespace {

using namespace hclda;

std::vector<std::string> default_label_names(int J) {
  std::vector<std::string> names(J);
  for (int j = 0; j < J; ++j) names[j] = std::to_string(j + 1);
  return names;
}

struct CommonOptions {
  ExperimentConfig config;
  std::string engine_name = "fast";
};

void add_common_flags(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--model", opts.config.model,
                  "data source: model1, model2 or csv");
  cmd->add_option("--n", opts.config.n, "observations per dataset");
  cmd->add_option("--p", opts.config.p, "feature dimension (model2)");
  cmd->add_option("--classes", opts.config.J, "class count (model2)");
  cmd->add_option("--dim", opts.config.D, "projected dimension D");
  cmd->add_option("--delta", opts.config.delta, "ridge parameter");
  cmd->add_option("--seed", opts.config.seed, "base RNG seed");
  cmd->add_option("--engine", opts.engine_name, "CV engine: fast or exact");
  cmd->add_option("--replicates", opts.config.replicates, "replicate count");
  cmd->add_option("--out", opts.config.out_dir, "output directory");
  cmd->add_option("--csv", opts.config.csv_path, "dataset CSV path");
  cmd->add_option("--threads", opts.config.threads,
                  "worker threads (0 = auto)");
  cmd->add_flag("--loo-means,!--no-loo-means", opts.config.loo_means,
                "use leave-one-out class means in the fast CV rule");
}

void resolve_engine(CommonOptions& opts) {
  if (opts.engine_name == "fast") {
    opts.config.engine = CvEngine::fast;
  } else if (opts.engine_name == "exact") {
    opts.config.engine = CvEngine::exact;
  } else {
    throw InvalidInput("unknown engine '" + opts.engine_name +
                       "' (want fast or exact)");
  }
  if (!opts.config.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(opts.config.out_dir, ec);
  }
}

std::vector<int> parse_grid(const std::string& text) {
  std::vector<int> grid;
  std::string item;
  std::stringstream stream(text);
  while (std::getline(stream, item, ',')) {
    if (item.empty()) continue;
    grid.push_back(std::stoi(item));
  }
  if (grid.empty()) throw InvalidInput("empty grid '" + text + "'");
  return grid;
}

MetaclassPartition load_partition_file(const std::string& path, int J) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open partition file '" + path + "'");
  json parsed;
  try {
    in >> parsed;
  } catch (const json::exception& err) {
    throw ParseError("invalid partition JSON: " + std::string(err.what()));
  }
  const json& blocks = parsed.is_object() ? parsed.at("blocks") : parsed;
  return make_partition(blocks.get<std::vector<std::vector<int>>>(), J);
}

struct LoadedOrGenerated {
  LabeledDataset data;
  std::vector<std::string> label_names;
  std::optional<MetaclassPartition> truth;
};

LoadedOrGenerated obtain_dataset(const ExperimentConfig& config) {
  LoadedOrGenerated out;
  if (config.model == "csv") {
    if (config.csv_path.empty()) {
      throw InvalidInput("--model csv requires --csv PATH");
    }
    LoadedDataset loaded = load_dataset_csv(config.csv_path);
    out.data = std::move(loaded.data);
    out.label_names = std::move(loaded.label_names);
  } else {
    GeneratedData gen = generate_config_dataset(config, config.seed);
    out.data = std::move(gen.data);
    out.truth = std::move(gen.truth);
    out.label_names = default_label_names(out.data.J);
  }
  return out;
}

int cmd_simulate(const CommonOptions& opts) {
  ExperimentConfig config = opts.config;
  validate_config(config);
  const GeneratedData gen = generate_config_dataset(config, config.seed);
  const std::string path = config.out_dir + "/dataset.csv";
  save_dataset_csv(path, gen.data);
  json meta;
  meta["config"] = config_to_json(config);
  if (gen.truth) meta["true_blocks"] = gen.truth->blocks;
  write_json(config.out_dir + "/dataset_meta.json", meta);
  std::cout << "wrote " << path << " (n=" << gen.data.n()
            << ", p=" << gen.data.p() << ", J=" << gen.data.J << ")\n";
  return 0;
}

int cmd_fit(const CommonOptions& opts, const std::string& partition_file,
            int forced_t) {
  const ExperimentConfig& config = opts.config;
  LoadedOrGenerated input = obtain_dataset(config);

  TwoStageModel model;
  if (!partition_file.empty()) {
    const MetaclassPartition partition =
        load_partition_file(partition_file, input.data.J);
    model = two_stage_fit(input.data, partition, config.D, config.delta);
    const double cv = two_stage_cv(input.data, partition, config.D,
                                   config.delta, config.engine,
                                   config.loo_means, config.threads);
    std::cout << "fixed partition with " << partition.m()
              << " metaclasses, cv=" << cv << "\n";
  } else {
    const MergeTrace trace =
        hierarchical_fit(input.data, config.D, config.delta, config.engine,
                         config.loo_means, config.threads);
    write_json(config.out_dir + "/merge_trace.json",
               merge_trace_to_json(trace));
    int chosen = trace.selected_t;
    if (forced_t >= 0) {
      if (forced_t >= static_cast<int>(trace.steps.size())) {
        throw InvalidInput("--t beyond the last merge step");
      }
      chosen = forced_t;
    }
    model = two_stage_fit(input.data, trace.steps[chosen].partition, config.D,
                          config.delta);
    std::cout << "selected t=" << chosen << " ("
              << trace.steps[chosen].partition.m()
              << " metaclasses), cv=" << trace.steps[chosen].cv << "\n";
  }
  const std::string path = config.out_dir + "/model.json";
  save_model(path, model, input.label_names);
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& out_path) {
  const auto [model, label_names] = load_model(model_path);
  const Eigen::MatrixXd X = load_feature_matrix(input_path);
  const int expected_p =
      model.stage1 ? model.stage1->p()
                   : (model.stage2.empty() ? -1 : model.stage2.begin()->second.p());
  if (X.rows() > 0 && expected_p >= 0 && X.cols() != expected_p) {
    throw InvalidInput("input has " + std::to_string(X.cols()) +
                       " features, model expects " +
                       std::to_string(expected_p));
  }

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) throw InvalidInput("cannot write '" + out_path + "'");
    out = &file;
  }
  *out << "label\r\n";
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const int label = two_stage_predict(model, X.row(i).transpose());
    *out << csv_escape(label_names[label - 1]) << "\r\n";
  }
  return 0;
}

int cmd_cv_curve(const CommonOptions& opts) {
  const CvCurveReport report = run_cv_curve(opts.config);
  write_cv_curve_report(report);
  std::cout << "wrote " << opts.config.out_dir << "/cv_curve.{csv,json}\n";
  return 0;
}

int cmd_compare(const CommonOptions& opts, const std::string& partition_file) {
  std::optional<MetaclassPartition> supplied;
  if (!partition_file.empty()) {
    int J = opts.config.J;
    if (opts.config.model == "model1") J = 9;
    supplied = load_partition_file(partition_file, J);
  }
  const CompareReport report = run_compare(opts.config, supplied);
  write_compare_report(report);
  std::cout << "wrote " << opts.config.out_dir << "/compare.{csv,json}\n";
  return 0;
}

int cmd_bench(const CommonOptions& opts, const std::string& p_grid_text,
              const std::string& n_grid_text, int runs) {
  std::vector<int> p_grid, n_grid;
  if (!p_grid_text.empty()) p_grid = parse_grid(p_grid_text);
  if (!n_grid_text.empty()) n_grid = parse_grid(n_grid_text);
  if (p_grid.empty() && n_grid.empty()) {
    throw InvalidInput("bench needs --p-grid and/or --n-grid");
  }
  const BenchReport report = run_bench(opts.config, p_grid, n_grid, runs);
  write_bench_report(report);
  std::cout << "wrote " << opts.config.out_dir << "/bench.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hclda: hierarchical clustered multiclass LDA"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string partition_file;
  std::string model_path, input_path, out_path;
  std::string p_grid_text, n_grid_text;
  int forced_t = -1;
  int runs = 3;

  CLI::App* simulate = app.add_subcommand("simulate", "generate a dataset CSV");
  add_common_flags(simulate, opts);

  CLI::App* fit = app.add_subcommand(
      "fit", "fit a CV-selected hierarchical model and save it");
  add_common_flags(fit, opts);
  fit->add_option("--partition-file", partition_file,
                  "fit this fixed partition instead of merging");
  fit->add_option("--t", forced_t, "force the merge step instead of argmin CV");

  CLI::App* predict =
      app.add_subcommand("predict", "label feature rows with a saved model");
  predict->add_option("--model-file", model_path, "saved model JSON")
      ->required();
  predict->add_option("--csv", input_path, "feature rows CSV")->required();
  predict->add_option("--out", out_path, "output CSV (default stdout)");

  CLI::App* cv_curve = app.add_subcommand(
      "cv-curve", "CV error as a function of the merge step t");
  add_common_flags(cv_curve, opts);

  CLI::App* compare = app.add_subcommand(
      "compare", "test error of LDA, HLDA and a supplied partition vs D");
  add_common_flags(compare, opts);
  compare->add_option("--partition-file", partition_file,
                      "partition to compare against");

  CLI::App* bench = app.add_subcommand(
      "bench", "time the CV engines and measure the fast-vs-exact gap");
  add_common_flags(bench, opts);
  bench->add_option("--p-grid", p_grid_text, "comma list of p values to time");
  bench->add_option("--n-grid", n_grid_text,
                    "comma list of n values for the error gap");
  bench->add_option("--runs", runs, "timing runs per grid cell");

  try {
    app.parse(argc, argv);
    resolve_engine(opts);
    if (simulate->parsed()) return cmd_simulate(opts);
    if (fit->parsed()) return cmd_fit(opts, partition_file, forced_t);
    if (predict->parsed()) return cmd_predict(model_path, input_path, out_path);
    if (cv_curve->parsed()) return cmd_cv_curve(opts);
    if (compare->parsed()) return cmd_compare(opts, partition_file);
    if (bench->parsed()) return cmd_bench(opts, p_grid_text, n_grid_text, runs);
    return 2;
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  } catch (const hclda::InputError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const hclda::NumericalError& err) {
    std::cerr << "numerical error: " << err.what() << "\n";
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
}
