#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hclda/dataset.hpp"
#include "hclda/errors.hpp"
#include "hclda/linalg.hpp"

namespace hclda {

/// Fitted discriminant projection. Columns of T satisfy T^T Swd T = I and
/// are ordered by descending eigenvalue; centroids are the projected class
/// means. `labels[j]` maps centroid column j back to the caller's label,
/// which matters for models fit inside a metaclass.
struct DiscriminantModel {
  int D = 0;
  double delta = 0.0;
  Eigen::MatrixXd T;          // p x D
  Eigen::VectorXd lambdas;    // length D, nonincreasing, >= 0
  Eigen::MatrixXd centroids;  // D x J
  std::vector<int> labels;    // column j of centroids -> class label

  int p() const { return static_cast<int>(T.rows()); }
  int J() const { return static_cast<int>(centroids.cols()); }
};

/// Sign convention: the first component with magnitude above 1e-12 is made
/// positive, so fitted directions are reproducible across eigensolvers.
inline void orient_eigenvector(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (std::abs(v(k)) > 1e-12) {
      if (v(k) < 0.0) v = -v;
      return;
    }
  }
}

inline DiscriminantModel fit_lda(const ClassStatistics& stats, int D) {
  const int p = stats.p();
  const int J = stats.J();
  if (D < 1 || D > std::min(J - 1, p)) {
    throw InvalidDimension("projected dimension " + std::to_string(D) +
                           " outside 1..min(J-1, p) = 1.." +
                           std::to_string(std::min(J - 1, p)));
  }

  const Eigen::MatrixXd R = inv_sqrt_sym(stats.Swd);
  const Eigen::MatrixXd M = R * stats.Sb * R;
  const SymmetricEigen eig = eig_sym(M);

  DiscriminantModel model;
  model.D = D;
  model.delta = stats.delta;
  model.T.resize(p, D);
  model.lambdas.resize(D);
  for (int d = 0; d < D; ++d) {
    const Eigen::Index idx = p - 1 - d;  // solver returns ascending order
    Eigen::VectorXd s = eig.vectors.col(idx);
    orient_eigenvector(s);
    model.lambdas(d) = std::max(0.0, eig.values(idx));
    model.T.col(d) = R * s;
  }
  model.centroids = model.T.transpose() * stats.class_means;
  model.labels.resize(J);
  std::iota(model.labels.begin(), model.labels.end(), 1);
  return model;
}

inline Eigen::VectorXd transform(const DiscriminantModel& model,
                                 const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.T.rows()) {
    throw InvalidInput("input has " + std::to_string(x.size()) +
                       " features, model expects " +
                       std::to_string(model.T.rows()));
  }
  return model.T.transpose() * x;
}

/// Nearest projected centroid; ties go to the smallest class index.
inline int classify(const DiscriminantModel& model,
                    const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::VectorXd z = transform(model, x);
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int j = 0; j < model.J(); ++j) {
    const double dist = (z - model.centroids.col(j)).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = j;
    }
  }
  return model.labels[best];
}

}  // namespace hclda
