// Acceptance suite: one line per criterion, exit code = number of failures.
// Every tolerance is fixed here, in code; nothing is deferred to calibration.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "hclda/experiments.hpp"
#include "hclda/hclda.hpp"

using namespace hclda;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id,
              what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(
    const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

struct FittedPipeline {
  LabeledDataset data;
  ClassStatistics stats;
  DiscriminantModel model;
  ResponseSet responses;
  HatMatrixBundle bundle;
  RidgeSolution solution;
};

FittedPipeline fit_pipeline(LabeledDataset data, double delta, int D) {
  FittedPipeline f;
  f.data = std::move(data);
  f.stats = class_statistics(f.data, delta);
  f.model = fit_lda(f.stats, D);
  f.responses = build_responses(f.data, f.stats, f.model);
  f.bundle = hat_bundle(f.data, delta);
  f.solution = ridge_solve(f.bundle, f.data, f.responses);
  return f;
}

// Largest relative deviation of beta_d from t_d / (1 + lambda_d).
double coefficient_direction_deviation(const FittedPipeline& f) {
  double worst = 0.0;
  for (int d = 0; d < f.model.D; ++d) {
    const Eigen::VectorXd expected =
        f.model.T.col(d) / (1.0 + f.model.lambdas(d));
    const Eigen::VectorXd got = f.solution.alpha.col(d).tail(f.data.p());
    worst = std::max(worst, (got - expected).norm() / expected.norm());
  }
  return worst;
}

struct IdentityDeviations {
  double response_sum = 0.0;    // |sum_j n_j xi_jd| / sum_j |n_j xi_jd|
  double response_cross = 0.0;  // ||X' y_d - n Swd t_d|| / ||n Swd t_d||
  double fitted_sum = 0.0;   // fitted-sum identity, relative
};

IdentityDeviations identity_deviations(const FittedPipeline& f, double delta) {
  IdentityDeviations dev;
  for (int d = 0; d < f.model.D; ++d) {
    double weighted = 0.0;
    double scale = 0.0;
    for (int j = 0; j < f.stats.J(); ++j) {
      weighted += f.stats.counts[j] * f.responses.xi(j, d);
      scale += std::abs(f.stats.counts[j] * f.responses.xi(j, d));
    }
    dev.response_sum = std::max(dev.response_sum, std::abs(weighted) / scale);

    const Eigen::VectorXd lhs = f.data.X.transpose() * f.responses.Y.col(d);
    const Eigen::VectorXd rhs =
        f.data.n() * (f.stats.Swd * f.model.T.col(d));
    dev.response_cross =
        std::max(dev.response_cross, (lhs - rhs).norm() / rhs.norm());

    const Eigen::VectorXd fitted = f.bundle.Xt * f.solution.alpha.col(d);
    const double sum_lhs =
        (fitted.squaredNorm() +
         delta * f.solution.alpha.col(d).tail(f.data.p()).squaredNorm()) /
        f.data.n();
    const double sum_rhs = 1.0 / (1.0 + f.model.lambdas(d));
    dev.fitted_sum =
        std::max(dev.fitted_sum, std::abs(sum_lhs - sum_rhs) / sum_rhs);
  }
  return dev;
}

LabeledDataset random_small_instance(std::uint64_t seed) {
  Rng rng(seed);
  const int J = 2 + static_cast<int>(rng.uniform() * 4);       // 2..5
  const int p = 1 + static_cast<int>(rng.uniform() * 10);      // 1..10
  const int n = std::max(4 * J, 20 + static_cast<int>(rng.uniform() * 81));
  LabeledDataset data;
  data.J = J;
  data.X.resize(n, p);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    data.y[i] = i % J + 1;
    for (int k = 0; k < p; ++k) {
      data.X(i, k) = 1.5 * data.y[i] * ((k + i) % 3 - 1) + rng.normal();
    }
  }
  return data;
}

void criterion1_and_2() {
  const auto start = std::chrono::steady_clock::now();
  double worst_direction = 0.0;
  IdentityDeviations worst;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto m2 = generate_model2(600, 20, 30, seed);
    const FittedPipeline f = fit_pipeline(m2.data, 1e-5, 4);
    worst_direction = std::max(worst_direction, coefficient_direction_deviation(f));
    const IdentityDeviations dev = identity_deviations(f, 1e-5);
    worst.response_sum = std::max(worst.response_sum, dev.response_sum);
    worst.response_cross = std::max(worst.response_cross, dev.response_cross);
    worst.fitted_sum = std::max(worst.fitted_sum, dev.fitted_sum);
  }
  const double elapsed = seconds_since(start);
  report(1, worst_direction < 1e-8 && elapsed < 10.0,
         "ridge coefficients parallel to discriminant directions (10 datasets)",
         "max rel dev " + format_double(worst_direction) + ", " +
             format_double(elapsed) + " s");

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LabeledDataset data = random_small_instance(1000 + seed);
    const double delta = std::pow(10.0, -6.0 + 4.0 * (seed % 5) / 4.0);
    const int D = std::min(2, std::min(data.J - 1, data.p()));
    const FittedPipeline f = fit_pipeline(data, delta, D);
    const IdentityDeviations dev = identity_deviations(f, delta);
    worst.response_sum = std::max(worst.response_sum, dev.response_sum);
    worst.response_cross = std::max(worst.response_cross, dev.response_cross);
    worst.fitted_sum = std::max(worst.fitted_sum, dev.fitted_sum);
  }
  report(2,
         worst.response_sum < 1e-8 && worst.response_cross < 1e-8 &&
             worst.fitted_sum < 1e-8,
         "response-vector and fitted-sum identities",
         "responses " + format_double(worst.response_sum) + " / " +
             format_double(worst.response_cross) + ", fitted-sum " +
             format_double(worst.fitted_sum));
}

void criterion3() {
  const auto start = std::chrono::steady_clock::now();
  const auto m2 = generate_model2(60, 5, 6, 3);
  const double delta = 1e-5;
  const FittedPipeline f = fit_pipeline(m2.data, delta, 2);
  const int n = f.data.n();
  const int p = f.data.p();
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd Xt(n - 1, p + 1);
    Eigen::MatrixXd Y(n - 1, f.model.D);
    int r = 0;
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      Xt.row(r) = f.bundle.Xt.row(k);
      Y.row(r) = f.responses.Y.row(k);
      ++r;
    }
    Eigen::MatrixXd C = Xt.transpose() * Xt;
    C.diagonal().tail(p).array() += delta;
    const Eigen::MatrixXd direct = C.llt().solve(Xt.transpose() * Y);
    for (int d = 0; d < f.model.D; ++d) {
      const double a = (f.solution.fitted(i, d) - f.responses.Y(i, d)) /
                       (1.0 - f.bundle.hdiag(i));
      const Eigen::VectorXd updated =
          f.solution.alpha.col(d) + a * f.bundle.K.col(i);
      worst = std::max(
          worst, (updated - direct.col(d)).norm() / direct.col(d).norm());
    }
  }
  const double elapsed = seconds_since(start);
  report(3, worst < 1e-8 && elapsed < 5.0,
         "rank-one held-out coefficients equal direct refits (n=60, p=5)",
         "max rel dev " + format_double(worst) + ", " +
             format_double(elapsed) + " s");
}

void criterion4() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<int> grid = {300, 600, 1200, 2400, 4800};
  std::vector<double> mean_gap(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto m2 = generate_model2(grid[g], 20, 30, 40 + seed);
      const double fast = fast_loo_allocations(m2.data, 2, 1e-5).error;
      const double exact = exact_loo_allocations(m2.data, 2, 1e-5).error;
      acc += std::abs(fast - exact);
    }
    mean_gap[g] = acc / 10.0;
  }
  const double elapsed = seconds_since(start);

  // The gate uses n in {600, 1200, 2400, 4800}; n = 300 additionally
  // exercises the five-point convergence property.
  const auto inversions_ok = [&](std::size_t first) {
    int inversions = 0;
    double excess = 0.0;
    for (std::size_t g = first + 1; g < grid.size(); ++g) {
      if (mean_gap[g] > mean_gap[g - 1]) {
        ++inversions;
        excess = std::max(excess, mean_gap[g] - mean_gap[g - 1]);
      }
    }
    return inversions == 0 || (inversions == 1 && excess <= 0.005);
  };
  std::string detail = "mean|fast-exact| =";
  for (std::size_t g = 0; g < grid.size(); ++g) {
    detail += " " + std::to_string(grid[g]) + ":" + format_double(mean_gap[g]);
  }
  detail += ", " + format_double(elapsed) + " s";
  const bool pass = mean_gap[3] <= 0.02 && inversions_ok(1) &&
                    elapsed < 600.0;
  report(4, pass, "fast-vs-exact CV gap shrinks with n (model 2, D=2)",
         detail + (inversions_ok(0) ? ", 5-point property holds"
                                    : ", 5-point property violated"));
}

void criterion5() {
  const std::vector<int> grid = {50, 100, 200, 500};
  std::vector<double> fast_s, exact_s;
  for (const int p : grid) {
    const auto m2 = generate_model2(2000, p, 30, 70 + p);
    const auto t0 = std::chrono::steady_clock::now();
    fast_loo_allocations(m2.data, 2, 1e-5);
    fast_s.push_back(seconds_since(t0));
    const auto t1 = std::chrono::steady_clock::now();
    exact_loo_allocations(m2.data, 2, 1e-5);
    exact_s.push_back(seconds_since(t1));
  }
  bool faster_everywhere = true;
  bool ratio_monotone = true;
  std::string detail;
  double prev_ratio = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double ratio = exact_s[g] / fast_s[g];
    faster_everywhere = faster_everywhere && fast_s[g] < exact_s[g];
    if (g > 0 && ratio < prev_ratio) ratio_monotone = false;
    prev_ratio = ratio;
    detail += "p=" + std::to_string(grid[g]) + " fast " +
              format_double(fast_s[g]) + "s exact " +
              format_double(exact_s[g]) + "s; ";
  }
  report(5, faster_everywhere && ratio_monotone,
         "fast CV is faster at every p and the speedup grows with p", detail);
}

void criterion6() {
  ExperimentConfig config;
  config.model = "model1";
  config.n = 200;
  config.delta = 1e-5;
  config.engine = CvEngine::fast;

  config.seed = 601;
  std::vector<double> lda1, hlda1, lda2, hlda2;
  int selected_zero = 0;
  for (int r = 0; r < 10; ++r) {
    const TrainTestPair pair = generate_train_test(config, r);
    const CompareCell at1 =
        compare_at_dimension(pair.train, pair.test, 1, config, std::nullopt);
    lda1.push_back(at1.lda);
    hlda1.push_back(at1.hlda);
    const CompareCell at2 =
        compare_at_dimension(pair.train, pair.test, 2, config, std::nullopt);
    lda2.push_back(at2.lda);
    hlda2.push_back(at2.hlda);
    if (at2.selected_t == 0) ++selected_zero;
  }
  const double mean_lda1 = summarize(lda1).mean;
  const double mean_hlda1 = summarize(hlda1).mean;
  const double mean_lda2 = summarize(lda2).mean;
  const double mean_hlda2 = summarize(hlda2).mean;
  const bool pass = mean_hlda1 < 0.5 * mean_lda1 && selected_zero >= 7 &&
                    std::abs(mean_hlda2 - mean_lda2) <= 0.02;
  report(6, pass, "model 1: HLDA halves the D=1 error and matches LDA at D=2",
         "D=1 lda " + format_double(mean_lda1) + " hlda " +
             format_double(mean_hlda1) + "; D=2 lda " +
             format_double(mean_lda2) + " hlda " + format_double(mean_hlda2) +
             ", t=0 selected " + std::to_string(selected_zero) + "/10");
}

void criterion7() {
  ExperimentConfig config;
  config.model = "model2";
  config.n = 600;
  config.p = 20;
  config.J = 30;
  config.delta = 1e-5;
  config.engine = CvEngine::fast;
  config.seed = 701;

  std::vector<double> lda, hlda, truth;
  for (int r = 0; r < 10; ++r) {
    const TrainTestPair pair = generate_train_test(config, r);
    const CompareCell cell =
        compare_at_dimension(pair.train, pair.test, 2, config, *pair.truth);
    lda.push_back(cell.lda);
    hlda.push_back(cell.hlda);
    truth.push_back(*cell.supplied);
  }
  const double mean_lda = summarize(lda).mean;
  const double mean_hlda = summarize(hlda).mean;
  const double mean_truth = summarize(truth).mean;
  const bool pass =
      mean_hlda <= mean_lda && mean_hlda <= mean_truth + 0.03;
  report(7, pass,
         "model 2, D=2: HLDA beats LDA and stays near the true partition",
         "lda " + format_double(mean_lda) + ", hlda " +
             format_double(mean_hlda) + ", truth " + format_double(mean_truth));
}

void criterion8() {
  bool pass = true;
  std::string detail;
  const auto check = [&](const LabeledDataset& data, int D, double delta,
                         const std::string& name) {
    for (const CvEngine engine : {CvEngine::fast, CvEngine::exact}) {
      const double plain =
          engine == CvEngine::fast
              ? fast_loo_allocations(data, D, delta).error
              : exact_loo_allocations(data, D, delta).error;
      const double t0 =
          two_stage_cv(data, singleton_partition(data.J), D, delta, engine);
      const double one =
          two_stage_cv(data, one_block_partition(data.J), D, delta, engine);
      if (t0 != plain || one != plain) {
        pass = false;
        detail += name + " mismatch; ";
      }
    }
  };
  check(generate_model1(140, 3), 1, 1e-5, "model1");
  check(generate_model2(240, 6, 6, 11).data, 2, 1e-5, "model2");
  {
    // CSV-shaped small dataset with a singleton class.
    LabeledDataset tiny;
    tiny.J = 2;
    tiny.X.resize(5, 2);
    tiny.X << 0.1, 0.2, -0.3, 0.4, 0.2, -0.1, 4.0, 4.2, 4.1, 3.9;
    tiny.y = {1, 1, 1, 2, 2};
    check(tiny, 1, 0.5, "tiny");
  }
  report(8, pass, "two-stage CV equals plain CV at t=0 and t=J-1 exactly",
         pass ? "fast and exact engines, three datasets" : detail);
}

void criterion9() {
  // The mouse consomic reference dataset (63% vs 78% CV) is not publicly
  // distributed, so those numbers are not reproduced; criteria 6 and 7 are
  // the synthetic stand-ins.
  // What is asserted here: a user-supplied CSV drives the full pipeline.
  bool pass = true;
  std::string detail;
  try {
    const auto dir = std::filesystem::temp_directory_path() / "hclda_accept";
    std::filesystem::create_directories(dir);
    const std::string csv = (dir / "user.csv").string();
    const auto m2 = generate_model2(180, 5, 6, 99);
    save_dataset_csv(csv, m2.data);
    const LoadedDataset loaded = load_dataset_csv(csv);
    const MergeTrace trace =
        hierarchical_fit(loaded.data, 2, 1e-5, CvEngine::fast);
    const TwoStageModel model = two_stage_fit(
        loaded.data, select_partition(trace), 2, 1e-5);
    detail = "CSV pipeline ran: selected t=" +
             std::to_string(trace.selected_t) + ", cv=" +
             format_double(trace.steps[trace.selected_t].cv) +
             "; real mouse data not distributed, synthetic analogues gate";
    std::filesystem::remove_all(dir);
  } catch (const std::exception& err) {
    pass = false;
    detail = err.what();
  }
  report(9, pass, "user-supplied CSV path works end to end", detail);
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  criterion1_and_2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  std::printf("%d criterion(s) failed; total %.1f s\n", failures,
              seconds_since(start));
  return failures;
}
