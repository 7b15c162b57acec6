#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hclda/dataset.hpp"
#include "hclda/errors.hpp"
#include "hclda/lda.hpp"
#include "hclda/linalg.hpp"
#include "hclda/parallel.hpp"
#include "hclda/regression.hpp"

namespace hclda {

enum class CvEngine { fast, exact };

/// Leave-one-out allocations with per-observation correctness. `error` is the
/// exact fraction of mismatches.
struct CvResult {
  std::vector<int> allocations;
  std::vector<std::uint8_t> correct;
  double error = 0.0;
};

inline double cv_error(const CvResult& result) {
  if (result.correct.empty()) throw InvalidInput("empty CV result");
  std::size_t wrong = 0;
  for (const auto c : result.correct) wrong += (c == 0);
  return static_cast<double>(wrong) / static_cast<double>(result.correct.size());
}

/// Leverages this close to one make the rank-one downdate blow up; the
/// observation interpolates the ridge fit exactly.
inline constexpr double kLeverageTolerance = 1e-10;

/// Precomputed hat-matrix machinery for the fast leave-one-out CV. Everything
/// here depends only on (X, delta) and the base class labeling, so one
/// workspace serves every metaclass partition of the same dataset: a block's
/// aggregates are sums of the per-class aggregates (and a singleton block's
/// are verbatim copies, which keeps the t = 0 endpoint bit-identical to the
/// plain evaluation).
class FastCvWorkspace {
 public:
  FastCvWorkspace(const LabeledDataset& data, double delta)
      : data_(data), delta_(delta), bundle_(hat_bundle(data, delta)),
        stats_(class_statistics(data, delta)) {
    const int n = data_.n();
    const int J = data_.J;
    rowsq_ = bundle_.H.rowwise().squaredNorm();
    csq_ = bundle_.K.bottomRows(data_.p()).colwise().squaredNorm();

    class_hat_.setZero(n, J);
    for (int k = 0; k < n; ++k) {
      class_hat_.col(data_.y[k] - 1) += bundle_.H.col(k);
    }
    class_hat2_ = bundle_.H * class_hat_;
    class_K_.setZero(data_.p() + 1, J);
    for (int k = 0; k < n; ++k) {
      class_K_.col(data_.y[k] - 1) += bundle_.K.col(k);
    }
  }

  const HatMatrixBundle& bundle() const { return bundle_; }
  const ClassStatistics& stats() const { return stats_; }
  const LabeledDataset& data() const { return data_; }

  /// Response coefficients, fitted values and cached sums for one block
  /// partition, everything the per-observation loop needs.
  struct Evaluation {
    int D = 0;
    std::vector<int> block_of;      // observation -> block index (1-based)
    std::vector<int> block_obs;     // observations per block
    Eigen::MatrixXd xi;             // m x D response coefficients
    Eigen::MatrixXd yhat;           // n x D fitted values H y_d
    Eigen::MatrixXd hyhat;          // n x D, H (H y_d)
    Eigen::VectorXd total_sq;       // D, sum_k yhat_kd^2
    Eigen::MatrixXd block_yhat_sum; // m x D, per-block sums of yhat
    Eigen::MatrixXd block_hat;      // n x m block-aggregated hat sums
    Eigen::VectorXd beta_sq;        // D, beta_d . beta_d
    Eigen::MatrixXd beta_dot_c;     // n x D, beta_d . c_i'
    DiscriminantModel model;
  };

  Evaluation prepare(const std::vector<std::vector<int>>& blocks,
                     int requested_D) const {
    const int n = data_.n();
    const int p = data_.p();
    const int J = data_.J;
    const int m = static_cast<int>(blocks.size());

    Evaluation ev;
    std::vector<int> block_of_class(J, 0);
    for (int b = 0; b < m; ++b) {
      for (const int label : blocks[b]) {
        if (label < 1 || label > J) {
          throw InvalidPartition("block references class " +
                                 std::to_string(label));
        }
        block_of_class[label - 1] = b + 1;
      }
    }
    ev.block_of.resize(n);
    ev.block_obs.assign(m, 0);
    for (int i = 0; i < n; ++i) {
      const int b = block_of_class[data_.y[i] - 1];
      if (b == 0) throw InvalidPartition("partition does not cover all classes");
      ev.block_of[i] = b;
      ++ev.block_obs[b - 1];
    }

    // Pooled block statistics. Singleton blocks copy the class moments so the
    // singleton partition reproduces the base statistics exactly.
    std::vector<int> bcounts(m);
    Eigen::MatrixXd bmeans(p, m);
    std::vector<Eigen::MatrixXd> bscatter(m);
    for (int b = 0; b < m; ++b) {
      if (blocks[b].size() == 1) {
        const int j = blocks[b][0] - 1;
        bcounts[b] = stats_.counts[j];
        bmeans.col(b) = stats_.class_means.col(j);
        bscatter[b] = stats_.class_scatter[j];
      } else {
        int nb = 0;
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
        for (const int label : blocks[b]) {
          const int j = label - 1;
          nb += stats_.counts[j];
          sum += stats_.counts[j] * stats_.class_means.col(j);
        }
        bcounts[b] = nb;
        bmeans.col(b) = sum / static_cast<double>(nb);
        Eigen::MatrixXd W = Eigen::MatrixXd::Zero(p, p);
        for (const int label : blocks[b]) {
          const int j = label - 1;
          const Eigen::VectorXd d = stats_.class_means.col(j) - bmeans.col(b);
          W += stats_.class_scatter[j] +
               stats_.counts[j] * (d * d.transpose());
        }
        bscatter[b] = std::move(W);
      }
    }
    const ClassStatistics block_stats = statistics_from_moments(
        n, delta_, bcounts, std::move(bmeans), std::move(bscatter));

    ev.D = std::min(requested_D, std::min(m - 1, p));
    if (ev.D < 1) throw InvalidDimension("no usable projected dimension");
    ev.model = fit_lda(block_stats, ev.D);
    ev.xi = response_coefficients(block_stats, ev.model);

    // Block aggregates of the hat sums; singletons are copies.
    ev.block_hat.resize(n, m);
    Eigen::MatrixXd block_hat2(n, m);
    Eigen::MatrixXd block_K(p + 1, m);
    for (int b = 0; b < m; ++b) {
      if (blocks[b].size() == 1) {
        const int j = blocks[b][0] - 1;
        ev.block_hat.col(b) = class_hat_.col(j);
        block_hat2.col(b) = class_hat2_.col(j);
        block_K.col(b) = class_K_.col(j);
      } else {
        ev.block_hat.col(b).setZero();
        block_hat2.col(b).setZero();
        block_K.col(b).setZero();
        for (const int label : blocks[b]) {
          const int j = label - 1;
          ev.block_hat.col(b) += class_hat_.col(j);
          block_hat2.col(b) += class_hat2_.col(j);
          block_K.col(b) += class_K_.col(j);
        }
      }
    }

    ev.yhat = ev.block_hat * ev.xi;
    ev.hyhat = block_hat2 * ev.xi;
    ev.total_sq = ev.yhat.colwise().squaredNorm();
    ev.block_yhat_sum.setZero(m, ev.D);
    for (int i = 0; i < n; ++i) {
      ev.block_yhat_sum.row(ev.block_of[i] - 1) += ev.yhat.row(i);
    }
    const Eigen::MatrixXd alpha = block_K * ev.xi;
    const Eigen::MatrixXd beta = alpha.bottomRows(p);
    ev.beta_sq = beta.colwise().squaredNorm();
    ev.beta_dot_c = bundle_.K.bottomRows(p).transpose() * beta;
    return ev;
  }

  /// Allocates every observation by the rank-one leave-one-out update rule.
  /// `loo_means` selects leave-one-out block means (the default) or the
  /// full-sample means in the squared-distance rule. `weight_scale` rescales
  /// every per-dimension squared term by a common positive constant; powers
  /// of two leave the argmin exactly unchanged, which the property suite
  /// exercises.
  CvResult allocate(const Evaluation& ev, bool loo_means, unsigned threads,
                    double weight_scale = 1.0) const {
    const int n = data_.n();
    const int m = static_cast<int>(ev.block_obs.size());
    const int D = ev.D;
    const double nm1 = static_cast<double>(n - 1);

    CvResult result;
    result.allocations.assign(n, 0);
    result.correct.assign(n, 0);

    if (m == 1) {
      for (int i = 0; i < n; ++i) {
        result.allocations[i] = 1;
        result.correct[i] = 1;
      }
      result.error = 0.0;
      return result;
    }

    parallel_for(
        static_cast<std::size_t>(n),
        [&](std::size_t idx) {
          const int i = static_cast<int>(idx);
          const double h = bundle_.hdiag(i);
          if (h >= 1.0 - kLeverageTolerance) {
            throw LeverageOverflow(
                "leverage of observation " + std::to_string(i + 1) +
                " is numerically one; the ridge delta is too small");
          }
          const int own = ev.block_of[i] - 1;
          const bool exclude_own = (ev.block_obs[own] == 1);

          Eigen::ArrayXd a(D), xa(D), weight(D);
          for (int d = 0; d < D; ++d) {
            const double y_id = ev.xi(own, d);
            const double yhat_id = ev.yhat(i, d);
            const double a_d = (yhat_id - y_id) / (1.0 - h);
            const double sumsq =
                (ev.total_sq(d) - yhat_id * yhat_id) +
                2.0 * a_d * (ev.hyhat(i, d) - h * yhat_id) +
                a_d * a_d * (rowsq_(i) - h * h);
            const double btb = ev.beta_sq(d) + 2.0 * a_d * ev.beta_dot_c(i, d) +
                               a_d * a_d * csq_(i);
            // The ridge term carries the same 1/(n-1) as the sum: that is the
            // form under which the reconstruction equals the held-out
            // eigenvalue exactly when the responses coincide.
            const double denom = (sumsq + delta_ * btb) / nm1;
            if (!(denom > 0.0) || !std::isfinite(denom)) {
              throw DegenerateEigenvalue(
                  "leave-one-out eigenvalue reconstruction degenerated at "
                  "observation " +
                  std::to_string(i + 1));
            }
            const double one_plus_lambda = 1.0 / denom;
            a(d) = a_d;
            xa(d) = (yhat_id - y_id * h) / (1.0 - h);
            weight(d) = weight_scale * one_plus_lambda * one_plus_lambda;
          }

          int best = -1;
          double best_dist = std::numeric_limits<double>::infinity();
          for (int b = 0; b < m; ++b) {
            if (exclude_own && b == own) continue;
            double dist = 0.0;
            for (int d = 0; d < D; ++d) {
              double mean_proj;
              if (loo_means) {
                double s1 = ev.block_yhat_sum(b, d);
                double sh = ev.block_hat(i, b);
                int nb = ev.block_obs[b];
                if (b == own) {
                  s1 -= ev.yhat(i, d);
                  sh -= h;
                  nb -= 1;
                }
                mean_proj = (s1 + a(d) * sh) / static_cast<double>(nb);
              } else {
                mean_proj = (ev.block_yhat_sum(b, d) + a(d) * ev.block_hat(i, b)) /
                            static_cast<double>(ev.block_obs[b]);
              }
              const double diff = xa(d) - mean_proj;
              dist += weight(d) * diff * diff;
            }
            if (dist < best_dist) {
              best_dist = dist;
              best = b;
            }
          }
          result.allocations[i] = best + 1;
          result.correct[i] = (best == own) ? 1 : 0;
        },
        threads);

    result.error = cv_error(result);
    return result;
  }

  CvResult evaluate_blocks(const std::vector<std::vector<int>>& blocks, int D,
                           bool loo_means = true, unsigned threads = 0) const {
    return allocate(prepare(blocks, D), loo_means, threads);
  }

  /// Plain CV: every class is its own block.
  CvResult evaluate(int D, bool loo_means = true, unsigned threads = 0) const {
    std::vector<std::vector<int>> blocks(data_.J);
    for (int j = 0; j < data_.J; ++j) blocks[j] = {j + 1};
    return evaluate_blocks(blocks, D, loo_means, threads);
  }

 private:
  LabeledDataset data_;
  double delta_;
  HatMatrixBundle bundle_;
  ClassStatistics stats_;
  Eigen::VectorXd rowsq_;       // per-row squared norms of H
  Eigen::VectorXd csq_;         // squared norms of the non-intercept part of c_i
  Eigen::MatrixXd class_hat_;   // n x J, per-class sums of H columns
  Eigen::MatrixXd class_hat2_;  // n x J, H * class_hat
  Eigen::MatrixXd class_K_;     // (p+1) x J, per-class sums of c_k
};

inline void check_projection_range(int D, int J, int p) {
  if (D < 1 || D > std::min(J - 1, p)) {
    throw InvalidDimension("projected dimension " + std::to_string(D) +
                           " outside 1..min(J-1, p) = 1.." +
                           std::to_string(std::min(J - 1, p)));
  }
}

/// Approximate leave-one-out CV in O(n) per observation after the workspace
/// is built.
inline CvResult fast_loo_allocations(const LabeledDataset& data, int D,
                                     double delta, bool loo_means = true,
                                     unsigned threads = 0) {
  validate(data);
  check_projection_range(D, data.J, data.p());
  const FastCvWorkspace workspace(data, delta);
  return workspace.evaluate(D, loo_means, threads);
}

/// Exact leave-one-out CV: refits the eigenproblem for every held-out
/// observation. The held-out scatter matrices are assembled by exact rank-one
/// downdates of the full-sample moments; the eigensolve itself is fresh per
/// observation.
inline CvResult exact_loo_allocations(const LabeledDataset& data, int D,
                                      double delta, unsigned threads = 0) {
  validate(data);
  check_projection_range(D, data.J, data.p());
  const int n = data.n();
  const int p = data.p();
  const int J = data.J;
  if (n < 2) throw InvalidInput("leave-one-out needs at least 2 observations");

  const ClassStatistics stats = class_statistics(data, delta);
  Eigen::MatrixXd Uw = Eigen::MatrixXd::Zero(p, p);
  for (const auto& W : stats.class_scatter) Uw += W;

  CvResult result;
  result.allocations.assign(n, 0);
  result.correct.assign(n, 0);

  parallel_for(
      static_cast<std::size_t>(n),
      [&](std::size_t idx) {
        const int i = static_cast<int>(idx);
        const int c = data.y[i] - 1;
        const int n1 = n - 1;
        const Eigen::VectorXd x = data.X.row(i).transpose();
        const bool class_vanishes = (stats.counts[c] == 1);
        const int J_eff = J - (class_vanishes ? 1 : 0);

        std::vector<int> survivors;
        survivors.reserve(J_eff);
        for (int j = 0; j < J; ++j) {
          if (class_vanishes && j == c) continue;
          survivors.push_back(j);
        }
        if (J_eff == 1) {
          result.allocations[i] = survivors[0] + 1;
          result.correct[i] = (survivors[0] == c) ? 1 : 0;
          return;
        }

        const Eigen::VectorXd grand =
            (n * stats.grand_mean - x) / static_cast<double>(n1);
        Eigen::VectorXd mean_c;
        if (!class_vanishes) {
          mean_c = (stats.counts[c] * stats.class_means.col(c) - x) /
                   static_cast<double>(stats.counts[c] - 1);
        }

        Eigen::MatrixXd Uw_i = Uw;
        if (!class_vanishes) {
          const Eigen::VectorXd d = x - stats.class_means.col(c);
          Uw_i -= (static_cast<double>(stats.counts[c]) /
                   static_cast<double>(stats.counts[c] - 1)) *
                  (d * d.transpose());
        }
        Eigen::MatrixXd Swd_i = Uw_i / static_cast<double>(n1);
        Swd_i.diagonal().array() += delta / static_cast<double>(n1);

        const SymmetricEigen ew = eig_sym(Swd_i);
        const double emax = ew.values(p - 1);
        if (!(emax > 0.0) || ew.values(0) <= kSpdTolerance * emax) {
          throw SingularMatrix(
              "held-out within-class matrix is singular at observation " +
              std::to_string(i + 1) + "; increase delta");
        }

        // Between-class factor Phi with Sb = Phi Phi^T; the top eigenpairs of
        // Swd^{-1/2} Sb Swd^{-1/2} come from the small Gram matrix of
        // Swd^{-1/2} Phi.
        Eigen::MatrixXd Phi(p, J_eff);
        for (int s = 0; s < J_eff; ++s) {
          const int j = survivors[s];
          const int count = stats.counts[j] - ((j == c) ? 1 : 0);
          const Eigen::VectorXd mean_j =
              (j == c) ? mean_c : stats.class_means.col(j);
          Phi.col(s) = std::sqrt(static_cast<double>(count) /
                                 static_cast<double>(n1)) *
                       (mean_j - grand);
        }
        const Eigen::MatrixXd A2 = ew.vectors.transpose() * Phi;
        const Eigen::VectorXd inv_sqrt_e = ew.values.array().rsqrt();
        const Eigen::MatrixXd A2s = inv_sqrt_e.asDiagonal() * A2;
        const Eigen::MatrixXd G = A2s.transpose() * A2s;
        const SymmetricEigen eg = eig_sym(G);

        const int D_cap = std::min(D, std::min(J_eff - 1, p));
        const double lam_max = std::max(0.0, eg.values(J_eff - 1));
        int D_use = 0;
        while (D_use < D_cap &&
               eg.values(J_eff - 1 - D_use) > 1e-12 * std::max(1.0, lam_max)) {
          ++D_use;
        }
        if (D_use == 0) {
          // All class means coincide after deletion: no informative direction,
          // fall back to the nearest surviving mean in the original space.
          int best = survivors[0];
          double best_dist = std::numeric_limits<double>::infinity();
          for (int s = 0; s < J_eff; ++s) {
            const int j = survivors[s];
            const Eigen::VectorXd mean_j =
                (j == c) ? mean_c : stats.class_means.col(j);
            const double dist = (x - mean_j).squaredNorm();
            if (dist < best_dist) {
              best_dist = dist;
              best = j;
            }
          }
          result.allocations[i] = best + 1;
          result.correct[i] = (best == c) ? 1 : 0;
          return;
        }

        const Eigen::VectorXd inv_e = ew.values.array().inverse();
        Eigen::MatrixXd T(p, D_use);
        for (int d = 0; d < D_use; ++d) {
          const Eigen::Index col = J_eff - 1 - d;
          const Eigen::VectorXd w = A2 * eg.vectors.col(col);
          T.col(d) = ew.vectors * (inv_e.asDiagonal() * w) /
                     std::sqrt(eg.values(col));
        }

        const Eigen::VectorXd z = T.transpose() * x;
        int best = survivors[0];
        double best_dist = std::numeric_limits<double>::infinity();
        for (int s = 0; s < J_eff; ++s) {
          const int j = survivors[s];
          const Eigen::VectorXd mean_j =
              (j == c) ? mean_c : stats.class_means.col(j);
          const double dist = (z - T.transpose() * mean_j).squaredNorm();
          if (dist < best_dist) {
            best_dist = dist;
            best = j;
          }
        }
        result.allocations[i] = best + 1;
        result.correct[i] = (best == c) ? 1 : 0;
      },
      threads);

  result.error = cv_error(result);
  return result;
}

/// Training error of the model fit on all data (the optimistic CV substitute).
inline double apparent_error(const LabeledDataset& data, int D, double delta) {
  validate(data);
  if (data.J == 1) return 0.0;
  check_projection_range(D, data.J, data.p());
  const ClassStatistics stats = class_statistics(data, delta);
  const DiscriminantModel model = fit_lda(stats, D);
  int wrong = 0;
  for (int i = 0; i < data.n(); ++i) {
    if (classify(model, data.X.row(i).transpose()) != data.y[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.n());
}

}  // namespace hclda
