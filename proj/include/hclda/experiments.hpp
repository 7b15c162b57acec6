#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hclda/cross_validation.hpp"
#include "hclda/io.hpp"
#include "hclda/metaclass.hpp"
#include "hclda/random.hpp"
#include "hclda/reports.hpp"
#include "hclda/simulate.hpp"

namespace hclda {

/// One synthetic draw for a replicate; model 2 carries its ground-truth
/// three-block partition.
struct GeneratedData {
  LabeledDataset data;
  std::optional<MetaclassPartition> truth;
};

inline GeneratedData generate_config_dataset(const ExperimentConfig& config,
                                             std::uint64_t seed) {
  GeneratedData out;
  if (config.model == "model1") {
    out.data = generate_model1(config.n, seed);
  } else if (config.model == "model2") {
    Model2Data m2 = generate_model2(config.n, config.p, config.J, seed);
    out.data = std::move(m2.data);
    out.truth = make_partition(m2.true_blocks, config.J);
  } else {
    throw InvalidInput("dataset generation needs model1 or model2");
  }
  return out;
}

/// Train and test sets of one replicate come from the same distribution:
/// model 1 has fixed means, while model 2 shares the replicate's drawn class
/// means between the two sets.
struct TrainTestPair {
  LabeledDataset train;
  LabeledDataset test;
  std::optional<MetaclassPartition> truth;
};

inline TrainTestPair generate_train_test(const ExperimentConfig& config,
                                         int replicate) {
  TrainTestPair pair;
  if (config.model == "model1") {
    pair.train =
        generate_model1(config.n, derive_seed(config.seed, 2 * replicate));
    pair.test =
        generate_model1(config.n, derive_seed(config.seed, 2 * replicate + 1));
  } else if (config.model == "model2") {
    Rng rng(derive_seed(config.seed, replicate));
    const Model2Distribution dist =
        sample_model2_distribution(config.p, config.J, rng);
    pair.train = sample_model2_data(dist, config.n, rng);
    pair.test = sample_model2_data(dist, config.n, rng);
    pair.truth = make_partition(dist.true_blocks, config.J);
  } else {
    throw InvalidInput("train/test generation needs model1 or model2");
  }
  return pair;
}

inline double engine_cv_error(const LabeledDataset& data, int D, double delta,
                              CvEngine engine, bool loo_means,
                              unsigned threads) {
  return engine == CvEngine::fast
             ? fast_loo_allocations(data, D, delta, loo_means, threads).error
             : exact_loo_allocations(data, D, delta, threads).error;
}

inline double plain_lda_test_error(const LabeledDataset& train,
                                   const LabeledDataset& test, int D,
                                   double delta) {
  const DiscriminantModel model = fit_lda(class_statistics(train, delta), D);
  int wrong = 0;
  for (int i = 0; i < test.n(); ++i) {
    if (classify(model, test.X.row(i).transpose()) != test.y[i]) ++wrong;
  }
  return static_cast<double>(wrong) / test.n();
}

inline double two_stage_test_error(const TwoStageModel& model,
                                   const LabeledDataset& test) {
  int wrong = 0;
  for (int i = 0; i < test.n(); ++i) {
    if (two_stage_predict(model, test.X.row(i).transpose()) != test.y[i]) {
      ++wrong;
    }
  }
  return static_cast<double>(wrong) / test.n();
}

// ---------------------------------------------------------------------------
// cv-curve: CV error as a function of the merge step t.

struct CvCurveReplicate {
  int replicate = 0;
  MergeTrace trace;
};

struct CvCurveReport {
  ExperimentConfig config;
  std::vector<CvCurveReplicate> replicates;
};

inline CvCurveReport run_cv_curve(const ExperimentConfig& config) {
  validate_config(config);
  CvCurveReport report;
  report.config = config;
  report.replicates.resize(config.replicates);
  // Replicates are independent given their derived seeds and write disjoint
  // slots, so the parallel map cannot change the report.
  parallel_for(
      static_cast<std::size_t>(config.replicates),
      [&](std::size_t r) {
        const GeneratedData gen = generate_config_dataset(
            config, derive_seed(config.seed, 2 * static_cast<int>(r)));
        report.replicates[r].replicate = static_cast<int>(r);
        report.replicates[r].trace =
            hierarchical_fit(gen.data, config.D, config.delta, config.engine,
                             config.loo_means, 1);
      },
      config.threads);
  return report;
}

inline void write_cv_curve_report(const CvCurveReport& report) {
  std::vector<std::vector<std::string>> rows;
  json per_replicate = json::array();
  for (const auto& rep : report.replicates) {
    json entry;
    entry["replicate"] = rep.replicate;
    entry["selected_t"] = rep.trace.selected_t;
    json curve = json::array();
    for (const auto& step : rep.trace.steps) {
      rows.push_back({std::to_string(rep.replicate), std::to_string(step.t),
                      std::to_string(step.partition.m()),
                      format_double(step.cv)});
      curve.push_back(json{{"t", step.t},
                           {"clusters", step.partition.m()},
                           {"cv", step.cv}});
    }
    entry["curve"] = std::move(curve);
    per_replicate.push_back(std::move(entry));
  }

  std::vector<double> selected_cv;
  std::vector<double> t0_cv;
  for (const auto& rep : report.replicates) {
    selected_cv.push_back(rep.trace.steps[rep.trace.selected_t].cv);
    t0_cv.push_back(rep.trace.steps[0].cv);
  }
  json summary;
  summary["selected_cv"] = summary_to_json(summarize(selected_cv));
  summary["t0_cv"] = summary_to_json(summarize(t0_cv));

  write_csv(report.config.out_dir + "/cv_curve.csv",
            {"replicate", "t", "clusters", "cv"}, rows);
  write_json(report.config.out_dir + "/cv_curve.json",
             make_report(report.config, per_replicate, summary));
}

// ---------------------------------------------------------------------------
// compare: test error of LDA, CV-selected HLDA and a supplied partition.

struct CompareCell {
  int replicate = 0;
  int D = 0;
  double lda = 0.0;
  double hlda = 0.0;
  std::optional<double> supplied;
  int selected_t = 0;
};

struct CompareReport {
  ExperimentConfig config;
  std::vector<CompareCell> cells;
};

/// Test-set errors at one projected dimension for one train/test draw.
inline CompareCell compare_at_dimension(
    const LabeledDataset& train, const LabeledDataset& test, int D,
    const ExperimentConfig& config,
    const std::optional<MetaclassPartition>& supplied) {
  CompareCell cell;
  cell.D = D;
  cell.lda = plain_lda_test_error(train, test, D, config.delta);
  const MergeTrace trace = hierarchical_fit(
      train, D, config.delta, config.engine, config.loo_means, config.threads);
  cell.selected_t = trace.selected_t;
  const TwoStageModel hlda =
      two_stage_fit(train, select_partition(trace), D, config.delta);
  cell.hlda = two_stage_test_error(hlda, test);
  if (supplied) {
    const TwoStageModel fixed = two_stage_fit(train, *supplied, D, config.delta);
    cell.supplied = two_stage_test_error(fixed, test);
  }
  return cell;
}

/// Sweeps D = 1..config.D. The supplied partition defaults to model 2's
/// ground truth; an explicit partition overrides it.
inline CompareReport run_compare(
    const ExperimentConfig& config,
    const std::optional<MetaclassPartition>& supplied_override = std::nullopt) {
  validate_config(config);
  CompareReport report;
  report.config = config;
  report.cells.resize(static_cast<std::size_t>(config.replicates) * config.D);
  parallel_for(
      static_cast<std::size_t>(config.replicates),
      [&](std::size_t r) {
        const TrainTestPair pair =
            generate_train_test(config, static_cast<int>(r));
        std::optional<MetaclassPartition> supplied = supplied_override;
        if (!supplied && pair.truth) supplied = pair.truth;
        ExperimentConfig inner = config;
        inner.threads = 1;
        for (int D = 1; D <= config.D; ++D) {
          CompareCell cell =
              compare_at_dimension(pair.train, pair.test, D, inner, supplied);
          cell.replicate = static_cast<int>(r);
          report.cells[r * config.D + (D - 1)] = std::move(cell);
        }
      },
      config.threads);
  return report;
}

inline void write_compare_report(const CompareReport& report) {
  std::vector<std::vector<std::string>> rows;
  json per_replicate = json::array();
  for (const auto& cell : report.cells) {
    rows.push_back({std::to_string(cell.replicate), std::to_string(cell.D),
                    format_double(cell.lda), format_double(cell.hlda),
                    cell.supplied ? format_double(*cell.supplied) : "",
                    std::to_string(cell.selected_t)});
    json entry{{"replicate", cell.replicate},
               {"D", cell.D},
               {"lda", cell.lda},
               {"hlda", cell.hlda},
               {"selected_t", cell.selected_t}};
    if (cell.supplied) entry["supplied"] = *cell.supplied;
    per_replicate.push_back(std::move(entry));
  }

  json summary = json::array();
  for (int D = 1; D <= report.config.D; ++D) {
    std::vector<double> lda, hlda, supplied;
    for (const auto& cell : report.cells) {
      if (cell.D != D) continue;
      lda.push_back(cell.lda);
      hlda.push_back(cell.hlda);
      if (cell.supplied) supplied.push_back(*cell.supplied);
    }
    json entry{{"D", D},
               {"lda", summary_to_json(summarize(lda))},
               {"hlda", summary_to_json(summarize(hlda))}};
    if (!supplied.empty()) {
      entry["supplied"] = summary_to_json(summarize(supplied));
    }
    summary.push_back(std::move(entry));
  }

  write_csv(report.config.out_dir + "/compare.csv",
            {"replicate", "D", "lda", "hlda", "supplied", "selected_t"}, rows);
  write_json(report.config.out_dir + "/compare.json",
             make_report(report.config, per_replicate, summary));
}

// ---------------------------------------------------------------------------
// bench: wall time of the two CV engines over a p grid, and the fast-vs-exact
// error gap over an n grid.

struct BenchTimingCell {
  int p = 0;
  int n = 0;
  std::string engine;
  double min_s = 0.0;
  double median_s = 0.0;
  double max_s = 0.0;
};

struct BenchGapCell {
  int n = 0;
  double fast_mean = 0.0;
  double exact_mean = 0.0;
  double aer_mean = 0.0;
  double gap_mean = 0.0;  // mean |fast - exact| over replicates
};

struct BenchReport {
  ExperimentConfig config;
  std::vector<BenchTimingCell> timing;
  std::vector<BenchGapCell> gaps;
};

inline double wall_seconds(const std::function<void()>& body) {
  const auto start = std::chrono::steady_clock::now();
  body();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

inline BenchTimingCell time_engine(const LabeledDataset& data, int D,
                                   double delta, CvEngine engine, int runs,
                                   unsigned threads) {
  std::vector<double> samples;
  samples.reserve(runs);
  for (int r = 0; r < runs; ++r) {
    samples.push_back(wall_seconds([&] {
      if (engine == CvEngine::fast) {
        fast_loo_allocations(data, D, delta, true, threads);
      } else {
        exact_loo_allocations(data, D, delta, threads);
      }
    }));
  }
  std::sort(samples.begin(), samples.end());
  BenchTimingCell cell;
  cell.p = data.p();
  cell.n = data.n();
  cell.engine = engine == CvEngine::fast ? "fast" : "exact";
  cell.min_s = samples.front();
  cell.median_s = samples[samples.size() / 2];
  cell.max_s = samples.back();
  return cell;
}

inline BenchReport run_bench(const ExperimentConfig& config,
                             const std::vector<int>& p_grid,
                             const std::vector<int>& n_grid, int runs) {
  validate_config(config);
  if (runs < 1) throw InvalidInput("bench needs at least one run");
  BenchReport report;
  report.config = config;

  for (const int p : p_grid) {
    if (config.n > kMaxHatObservations) {
      std::fprintf(stderr,
                   "notice: skipping p=%d, n=%d exceeds the hat-matrix bound\n",
                   p, config.n);
      continue;
    }
    ExperimentConfig cell_config = config;
    cell_config.p = p;
    const GeneratedData gen =
        generate_config_dataset(cell_config, derive_seed(config.seed, p));
    report.timing.push_back(time_engine(gen.data, config.D, config.delta,
                                        CvEngine::fast, runs, config.threads));
    report.timing.push_back(time_engine(gen.data, config.D, config.delta,
                                        CvEngine::exact, runs, config.threads));
  }

  for (const int n : n_grid) {
    if (n > kMaxHatObservations) {
      std::fprintf(stderr,
                   "notice: skipping n=%d, exceeds the hat-matrix bound\n", n);
      continue;
    }
    ExperimentConfig cell_config = config;
    cell_config.n = n;
    std::vector<double> fast_err, exact_err, aer, gap;
    for (int r = 0; r < config.replicates; ++r) {
      const GeneratedData gen = generate_config_dataset(
          cell_config, derive_seed(config.seed, 1000003ull * n + r));
      const double fe = fast_loo_allocations(gen.data, config.D, config.delta,
                                             config.loo_means, config.threads)
                            .error;
      const double ee =
          exact_loo_allocations(gen.data, config.D, config.delta,
                                config.threads)
              .error;
      fast_err.push_back(fe);
      exact_err.push_back(ee);
      aer.push_back(apparent_error(gen.data, config.D, config.delta));
      gap.push_back(std::abs(fe - ee));
    }
    BenchGapCell cell;
    cell.n = n;
    cell.fast_mean = summarize(fast_err).mean;
    cell.exact_mean = summarize(exact_err).mean;
    cell.aer_mean = summarize(aer).mean;
    cell.gap_mean = summarize(gap).mean;
    report.gaps.push_back(cell);
  }
  return report;
}

inline void write_bench_report(const BenchReport& report) {
  std::vector<std::vector<std::string>> timing_rows;
  json timing_json = json::array();
  for (const auto& cell : report.timing) {
    timing_rows.push_back({std::to_string(cell.p), std::to_string(cell.n),
                           cell.engine, format_double(cell.min_s),
                           format_double(cell.median_s),
                           format_double(cell.max_s)});
    timing_json.push_back(json{{"p", cell.p},
                               {"n", cell.n},
                               {"engine", cell.engine},
                               {"min_s", cell.min_s},
                               {"median_s", cell.median_s},
                               {"max_s", cell.max_s}});
  }
  std::vector<std::vector<std::string>> gap_rows;
  json gap_json = json::array();
  for (const auto& cell : report.gaps) {
    gap_rows.push_back({std::to_string(cell.n), format_double(cell.fast_mean),
                        format_double(cell.exact_mean),
                        format_double(cell.aer_mean),
                        format_double(cell.gap_mean)});
    gap_json.push_back(json{{"n", cell.n},
                            {"fast", cell.fast_mean},
                            {"exact", cell.exact_mean},
                            {"aer", cell.aer_mean},
                            {"gap", cell.gap_mean}});
  }

  if (!report.timing.empty()) {
    write_csv(report.config.out_dir + "/bench_timing.csv",
              {"p", "n", "engine", "min_s", "median_s", "max_s"}, timing_rows);
  }
  if (!report.gaps.empty()) {
    write_csv(report.config.out_dir + "/bench_gap.csv",
              {"n", "fast", "exact", "aer", "gap"}, gap_rows);
  }
  json summary;
  summary["timing"] = std::move(timing_json);
  summary["gap"] = std::move(gap_json);
  write_json(report.config.out_dir + "/bench.json",
             make_report(report.config, json::array(), summary));
}

}  // namespace hclda
