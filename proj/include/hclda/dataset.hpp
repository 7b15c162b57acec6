#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hclda/errors.hpp"

namespace hclda {

/// n observations in the rows of X, labels in {1..J}. Every class must be
/// nonempty and every feature finite; `validate` enforces both.
struct LabeledDataset {
  Eigen::MatrixXd X;   // n x p, one observation per row
  std::vector<int> y;  // values in {1..J}
  int J = 0;

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
};

inline std::vector<int> class_counts(const LabeledDataset& data) {
  if (static_cast<int>(data.y.size()) != data.n()) {
    throw InvalidDataset("label vector has " + std::to_string(data.y.size()) +
                         " entries for " + std::to_string(data.n()) + " rows");
  }
  if (data.J < 1) throw InvalidDataset("class count must be at least 1");
  std::vector<int> counts(data.J, 0);
  for (int label : data.y) {
    if (label < 1 || label > data.J) {
      throw InvalidDataset("label " + std::to_string(label) +
                           " outside {1.." + std::to_string(data.J) + "}");
    }
    ++counts[label - 1];
  }
  for (int j = 0; j < data.J; ++j) {
    if (counts[j] == 0) {
      throw InvalidDataset("class " + std::to_string(j + 1) +
                           " has no observations");
    }
  }
  return counts;
}

inline void validate(const LabeledDataset& data) {
  class_counts(data);
  if (!data.X.allFinite()) {
    throw InvalidDataset("dataset contains a non-finite feature value");
  }
}

/// Per-class moments plus the scatter matrices of the trace-ratio problem.
/// All normalizations are 1/n; the ridge enters as Swd = Sw + (delta/n) I.
struct ClassStatistics {
  int n = 0;
  double delta = 0.0;
  std::vector<int> counts;                     // n_j
  Eigen::MatrixXd class_means;                 // p x J, column j = class mean
  Eigen::VectorXd grand_mean;                  // p
  std::vector<Eigen::MatrixXd> class_scatter;  // per-class centered outer-product sums
  Eigen::MatrixXd Sb;                          // between-class, p x p
  Eigen::MatrixXd Sw;                          // within-class, p x p
  Eigen::MatrixXd Swd;                         // Sw + (delta/n) I

  int J() const { return static_cast<int>(counts.size()); }
  int p() const { return static_cast<int>(class_means.rows()); }
};

/// Assembles statistics from per-class moments. Shared by the raw-data path
/// and the metaclass pooling path; the reduction runs in class-index order,
/// so pooling singleton blocks reproduces the original statistics bit for bit.
inline ClassStatistics statistics_from_moments(
    int n, double delta, std::vector<int> counts, Eigen::MatrixXd class_means,
    std::vector<Eigen::MatrixXd> class_scatter) {
  if (delta < 0.0) throw InvalidInput("ridge delta must be nonnegative");
  const int J = static_cast<int>(counts.size());
  const int p = static_cast<int>(class_means.rows());

  ClassStatistics stats;
  stats.n = n;
  stats.delta = delta;
  stats.counts = std::move(counts);
  stats.class_means = std::move(class_means);
  stats.class_scatter = std::move(class_scatter);

  stats.grand_mean = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < J; ++j) {
    stats.grand_mean += stats.counts[j] * stats.class_means.col(j);
  }
  stats.grand_mean /= static_cast<double>(n);

  stats.Sw = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < J; ++j) stats.Sw += stats.class_scatter[j];
  stats.Sw /= static_cast<double>(n);

  stats.Sb = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < J; ++j) {
    const Eigen::VectorXd centered = stats.class_means.col(j) - stats.grand_mean;
    stats.Sb += stats.counts[j] * (centered * centered.transpose());
  }
  stats.Sb /= static_cast<double>(n);

  stats.Swd = stats.Sw + (delta / static_cast<double>(n)) *
                             Eigen::MatrixXd::Identity(p, p);
  return stats;
}

inline ClassStatistics class_statistics(const LabeledDataset& data,
                                        double delta) {
  validate(data);
  if (delta < 0.0) throw InvalidInput("ridge delta must be nonnegative");
  const int n = data.n();
  const int p = data.p();
  const int J = data.J;

  std::vector<int> counts(J, 0);
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(p, J);
  for (int i = 0; i < n; ++i) {
    const int j = data.y[i] - 1;
    ++counts[j];
    means.col(j) += data.X.row(i).transpose();
  }
  for (int j = 0; j < J; ++j) means.col(j) /= static_cast<double>(counts[j]);

  std::vector<Eigen::MatrixXd> scatter(J, Eigen::MatrixXd::Zero(p, p));
  for (int i = 0; i < n; ++i) {
    const int j = data.y[i] - 1;
    const Eigen::VectorXd centered = data.X.row(i).transpose() - means.col(j);
    scatter[j].selfadjointView<Eigen::Lower>().rankUpdate(centered);
  }
  for (auto& W : scatter) {
    W.triangularView<Eigen::StrictlyUpper>() =
        W.transpose().triangularView<Eigen::StrictlyUpper>();
  }

  return statistics_from_moments(n, delta, std::move(counts), std::move(means),
                                 std::move(scatter));
}

}  // namespace hclda
