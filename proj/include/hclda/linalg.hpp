#pragma once

#include <Eigen/Dense>

#include "hclda/errors.hpp"

namespace hclda {

/// Relative positive-definiteness floor: the smallest eigenvalue must exceed
/// this fraction of the largest one.
inline constexpr double kSpdTolerance = 1e-12;

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns match values
};

inline SymmetricEigen eig_sym(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      0.5 * (M + M.transpose()));
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigendecomposition did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Symmetric inverse square root of an SPD matrix: returns R with R M R = I.
inline Eigen::MatrixXd inv_sqrt_sym(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) {
    throw InvalidInput("inverse square root requires a square matrix");
  }
  const SymmetricEigen eig = eig_sym(M);
  const double largest = eig.values(eig.values.size() - 1);
  if (!(largest > 0.0) || eig.values(0) <= kSpdTolerance * largest) {
    throw SingularMatrix(
        "matrix is numerically singular; a larger ridge delta is needed");
  }
  const Eigen::VectorXd scale = eig.values.array().rsqrt();
  return eig.vectors * scale.asDiagonal() * eig.vectors.transpose();
}

/// Symmetric square root of an SPD matrix (used by identity checks).
inline Eigen::MatrixXd sqrt_sym(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) {
    throw InvalidInput("square root requires a square matrix");
  }
  const SymmetricEigen eig = eig_sym(M);
  const double largest = eig.values(eig.values.size() - 1);
  if (!(largest > 0.0) || eig.values(0) <= kSpdTolerance * largest) {
    throw SingularMatrix(
        "matrix is numerically singular; a larger ridge delta is needed");
  }
  const Eigen::VectorXd scale = eig.values.array().sqrt();
  return eig.vectors * scale.asDiagonal() * eig.vectors.transpose();
}

}  // namespace hclda
