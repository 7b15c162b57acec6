#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hclda/dataset.hpp"
#include "hclda/errors.hpp"
#include "hclda/random.hpp"

namespace hclda {

/// Nine class means on the 3x3 grid {-5, 0, 5}^2.
inline Eigen::Vector2d model1_mean(int j) {
  const int row = (j - 1) / 3;
  return 5.0 * Eigen::Vector2d(row - 1, j - 2 - 3 * row);
}

/// Multinomial labels with equal class probabilities; the whole label vector
/// is redrawn if any class comes up empty so the dataset invariant holds.
inline std::vector<int> equal_probability_labels(int n, int J, Rng& rng) {
  constexpr int kMaxAttempts = 10000;
  std::vector<int> labels(n);
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<int> counts(J, 0);
    for (int i = 0; i < n; ++i) {
      labels[i] = rng.categorical(J) + 1;
      ++counts[labels[i] - 1];
    }
    bool complete = true;
    for (int j = 0; j < J; ++j) complete = complete && counts[j] > 0;
    if (complete) return labels;
  }
  throw InvalidInput("n = " + std::to_string(n) +
                     " is too small to populate all " + std::to_string(J) +
                     " classes");
}

/// 9 well-separated spherical Gaussian classes in the plane.
inline LabeledDataset generate_model1(int n, std::uint64_t seed) {
  constexpr int J = 9;
  if (n < J) throw InvalidInput("model 1 needs n >= 9");
  Rng rng(seed);
  LabeledDataset data;
  data.J = J;
  data.y = equal_probability_labels(n, J, rng);
  data.X.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d mu = model1_mean(data.y[i]);
    data.X(i, 0) = mu(0) + rng.normal();
    data.X(i, 1) = mu(1) + rng.normal();
  }
  return data;
}

/// Cluster centers for model 2: thirds of the label range sit at 1, 10 and
/// -10 (per coordinate).
inline double model2_center(int j, int J) {
  return (j <= J / 3) ? 1.0 : (j <= 2 * J / 3) ? 10.0 : -10.0;
}

/// The model-2 population: class means drawn once around the three cluster
/// centers. Train and test sets of one replicate must come from the same
/// draw.
struct Model2Distribution {
  int p = 0;
  int J = 0;
  Eigen::MatrixXd mu;  // p x J
  std::vector<std::vector<int>> true_blocks;
};

inline Model2Distribution sample_model2_distribution(int p, int J, Rng& rng) {
  if (J < 3 || J % 3 != 0) {
    throw InvalidInput("model 2 needs a class count divisible by 3");
  }
  if (p < 1) throw InvalidInput("model 2 needs p >= 1");
  Model2Distribution dist;
  dist.p = p;
  dist.J = J;
  dist.mu.resize(p, J);
  const double spread = std::sqrt(10.0);
  for (int j = 1; j <= J; ++j) {
    const double center = model2_center(j, J);
    for (int k = 0; k < p; ++k) {
      dist.mu(k, j - 1) = center + spread * rng.normal();
    }
  }
  dist.true_blocks.resize(3);
  for (int j = 1; j <= J; ++j) {
    dist.true_blocks[(j - 1) / (J / 3)].push_back(j);
  }
  return dist;
}

inline LabeledDataset sample_model2_data(const Model2Distribution& dist, int n,
                                         Rng& rng) {
  if (n < dist.J) throw InvalidInput("model 2 needs n >= J");
  LabeledDataset data;
  data.J = dist.J;
  data.y = equal_probability_labels(n, dist.J, rng);
  data.X.resize(n, dist.p);
  for (int i = 0; i < n; ++i) {
    const int j = data.y[i] - 1;
    for (int k = 0; k < dist.p; ++k) {
      data.X(i, k) = dist.mu(k, j) + rng.normal();
    }
  }
  return data;
}

/// Model 2 carries its ground truth: the class means fall in three clusters
/// around 1, 10*1 and -10*1, split by thirds of the label range.
struct Model2Data {
  LabeledDataset data;
  Eigen::MatrixXd mu;  // p x J generated class means
  std::vector<std::vector<int>> true_blocks;
};

inline Model2Data generate_model2(int n, int p, int J, std::uint64_t seed) {
  Rng rng(seed);
  const Model2Distribution dist = sample_model2_distribution(p, J, rng);
  Model2Data out;
  out.data = sample_model2_data(dist, n, rng);
  out.mu = dist.mu;
  out.true_blocks = dist.true_blocks;
  return out;
}

}  // namespace hclda
