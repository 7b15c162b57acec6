#pragma once

#include <algorithm>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "hclda/dataset.hpp"
#include "hclda/errors.hpp"
#include "hclda/lda.hpp"

namespace hclda {

/// Dense hat matrices cost 8 n^2 bytes; beyond this the exact leave-one-out
/// engine should be used instead.
inline constexpr int kMaxHatObservations = 10000;

/// Class-coded regression targets. xi(j, d) is the response shared by every
/// observation of class j in dimension d; Y materializes them per row.
struct ResponseSet {
  Eigen::MatrixXd xi;  // J x D
  Eigen::MatrixXd Y;   // n x D, Y(i, d) = xi(y_i - 1, d)
};

/// xi_{jd} = (xbar_j - xbar)^T t_d / lambda_d. Requires every used
/// eigenvalue to be bounded away from zero.
inline Eigen::MatrixXd response_coefficients(const ClassStatistics& stats,
                                             const DiscriminantModel& model) {
  const int J = stats.J();
  const int D = model.D;
  const double floor = 1e-12 * std::max(1.0, model.lambdas(0));
  const Eigen::MatrixXd centered =
      stats.class_means.colwise() - stats.grand_mean;
  Eigen::MatrixXd xi(J, D);
  for (int d = 0; d < D; ++d) {
    if (!(model.lambdas(d) > floor)) {
      throw DegenerateEigenvalue(
          "eigenvalue " + std::to_string(d + 1) +
          " is numerically zero; class means are indistinguishable in that "
          "direction");
    }
    xi.col(d) = centered.transpose() * model.T.col(d) / model.lambdas(d);
  }
  return xi;
}

inline ResponseSet build_responses(const LabeledDataset& data,
                                   const ClassStatistics& stats,
                                   const DiscriminantModel& model) {
  if (data.J != stats.J() || data.p() != stats.p()) {
    throw InvalidInput("dataset and statistics disagree on shape");
  }
  ResponseSet responses;
  responses.xi = response_coefficients(stats, model);
  responses.Y.resize(data.n(), model.D);
  for (int i = 0; i < data.n(); ++i) {
    responses.Y.row(i) = responses.xi.row(data.y[i] - 1);
  }
  return responses;
}

/// Ridge hat matrix of the augmented design (1, X) with the intercept left
/// unpenalized. Cinv is kept because the leave-one-out updates need
/// c_i = Cinv x~_i for every i; K stores those columns.
struct HatMatrixBundle {
  double delta = 0.0;
  Eigen::MatrixXd Xt;     // n x (p+1), first column all ones
  Eigen::MatrixXd Cinv;   // (p+1) x (p+1)
  Eigen::MatrixXd K;      // (p+1) x n, column i = Cinv * xt_i
  Eigen::MatrixXd H;      // n x n, symmetric
  Eigen::VectorXd hdiag;  // leverages h_ii

  int n() const { return static_cast<int>(Xt.rows()); }
  int pa() const { return static_cast<int>(Xt.cols()); }  // p + 1
};

inline HatMatrixBundle hat_bundle(const LabeledDataset& data, double delta) {
  validate(data);
  if (delta < 0.0) throw InvalidInput("ridge delta must be nonnegative");
  const int n = data.n();
  const int p = data.p();
  if (n > kMaxHatObservations) {
    throw InvalidInput(
        "n = " + std::to_string(n) + " exceeds the dense hat-matrix bound of " +
        std::to_string(kMaxHatObservations) + " (8 n^2 bytes of storage)");
  }
  if (delta == 0.0 && p + 1 > n) {
    throw SingularMatrix(
        "the unridged normal equation is singular when p >= n");
  }

  HatMatrixBundle bundle;
  bundle.delta = delta;
  bundle.Xt.resize(n, p + 1);
  bundle.Xt.col(0).setOnes();
  bundle.Xt.rightCols(p) = data.X;

  Eigen::MatrixXd C = bundle.Xt.transpose() * bundle.Xt;
  C.diagonal().tail(p).array() += delta;
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrix(
        "ridge normal equation is not positive definite; increase delta");
  }
  bundle.Cinv = llt.solve(Eigen::MatrixXd::Identity(p + 1, p + 1));
  bundle.Cinv = (0.5 * (bundle.Cinv + bundle.Cinv.transpose())).eval();
  bundle.K = bundle.Cinv * bundle.Xt.transpose();
  bundle.H = bundle.Xt * bundle.K;
  bundle.H = (0.5 * (bundle.H + bundle.H.transpose())).eval();
  bundle.hdiag = bundle.H.diagonal();
  return bundle;
}

/// Ridge coefficients for every response dimension, intercept in row 0.
struct RidgeSolution {
  Eigen::MatrixXd alpha;   // (p+1) x D
  Eigen::MatrixXd fitted;  // n x D, H * Y

  Eigen::VectorXd intercepts() const { return alpha.row(0).transpose(); }
  Eigen::MatrixXd coefficients() const {
    return alpha.bottomRows(alpha.rows() - 1);
  }
};

inline RidgeSolution ridge_solve(const HatMatrixBundle& bundle,
                                 const LabeledDataset& data,
                                 const ResponseSet& responses) {
  if (bundle.n() != data.n() || responses.Y.rows() != data.n() ||
      bundle.pa() != data.p() + 1) {
    throw InvalidInput("hat bundle, dataset and responses disagree on shape");
  }
  RidgeSolution solution;
  solution.alpha = bundle.K * responses.Y;
  solution.fitted = bundle.H * responses.Y;
  return solution;
}

}  // namespace hclda
