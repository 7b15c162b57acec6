#include <catch2/catch_amalgamated.hpp>

#include "hclda/lda.hpp"
#include "hclda/linalg.hpp"
#include "hclda/random.hpp"
#include "hclda/simulate.hpp"

using namespace hclda;

namespace {

Eigen::MatrixXd random_spd(int p, Rng& rng) {
  Eigen::MatrixXd A(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) A(i, j) = rng.normal();
  }
  return A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(p, p);
}

LabeledDataset one_dim_pairs() {
  LabeledDataset data;
  data.J = 2;
  data.X.resize(4, 1);
  data.X << 0, 2, 4, 6;
  data.y = {1, 1, 2, 2};
  return data;
}

/// Dataset whose class means are exactly the model-1 grid: four points per
/// class placed symmetrically around each mean.
LabeledDataset grid_mean_dataset() {
  LabeledDataset data;
  data.J = 9;
  data.X.resize(36, 2);
  data.y.resize(36);
  int r = 0;
  for (int j = 1; j <= 9; ++j) {
    const Eigen::Vector2d mu = model1_mean(j);
    for (const auto& off : {Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0),
                            Eigen::Vector2d(0, 1), Eigen::Vector2d(0, -1)}) {
      data.X.row(r) = (mu + off).transpose();
      data.y[r] = j;
      ++r;
    }
  }
  return data;
}

}  // namespace

TEST_CASE("inverse square root of the identity", "[lda]") {
  CHECK(inv_sqrt_sym(Eigen::MatrixXd::Identity(3, 3))
            .isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-14));
}

TEST_CASE("inverse square root of a diagonal matrix", "[lda]") {
  Eigen::MatrixXd M = Eigen::Vector2d(4.0, 9.0).asDiagonal();
  const Eigen::MatrixXd R = inv_sqrt_sym(M);
  CHECK(R(0, 0) == Catch::Approx(0.5).margin(1e-14));
  CHECK(R(1, 1) == Catch::Approx(1.0 / 3.0).margin(1e-14));
  CHECK(std::abs(R(0, 1)) < 1e-14);
}

TEST_CASE("inverse square root residual on random SPD matrices", "[lda]") {
  Rng rng(99);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::MatrixXd M = random_spd(5, rng);
    const Eigen::MatrixXd R = inv_sqrt_sym(M);
    CHECK((R * M * R - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((R - R.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("singular input raises SingularMatrix", "[lda]") {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(3, 3);
  M(0, 0) = 1.0;
  CHECK_THROWS_AS(inv_sqrt_sym(M), SingularMatrix);
}

TEST_CASE("1-D fit has lambda 4 and unit direction", "[lda]") {
  const DiscriminantModel model =
      fit_lda(class_statistics(one_dim_pairs(), 0.0), 1);
  CHECK(model.lambdas(0) == Catch::Approx(4.0).margin(1e-12));
  CHECK(model.T(0, 0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("coincident class means give a zero eigenvalue", "[lda]") {
  LabeledDataset data;
  data.J = 2;
  data.X.resize(4, 2);
  data.X << 0, 0, 2, 2, 0, 2, 2, 0;  // both class means are (1, 1)
  data.y = {1, 1, 2, 2};
  const DiscriminantModel model = fit_lda(class_statistics(data, 1.0), 1);
  CHECK(model.lambdas(0) < 1e-12);
}

TEST_CASE("model-2 spectrum is strictly ordered and positive", "[lda]") {
  const auto m2 = generate_model2(600, 20, 30, 1);
  const ClassStatistics stats = class_statistics(m2.data, 1e-5);
  const DiscriminantModel model = fit_lda(stats, 4);
  CHECK(model.lambdas(0) > model.lambdas(1));
  CHECK(model.lambdas(1) > model.lambdas(2));
  CHECK(model.lambdas(2) > model.lambdas(3));
  CHECK(model.lambdas(3) > 0.0);

  // Independent route: the generalized symmetric-definite solver.
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> gen(stats.Sb,
                                                                stats.Swd);
  for (int d = 0; d < 4; ++d) {
    CHECK(model.lambdas(d) ==
          Catch::Approx(gen.eigenvalues()(19 - d)).epsilon(1e-9));
  }
}

TEST_CASE("projection dimension is range checked", "[lda]") {
  const ClassStatistics stats = class_statistics(one_dim_pairs(), 0.0);
  CHECK_THROWS_AS(fit_lda(stats, 0), InvalidDimension);
  CHECK_THROWS_AS(fit_lda(stats, 2), InvalidDimension);  // min(J-1, p) = 1
}

TEST_CASE("unridged fit on wide data raises SingularMatrix", "[lda]") {
  LabeledDataset data;
  data.J = 2;
  data.X.resize(3, 5);
  data.X << 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0;
  data.y = {1, 1, 2};
  CHECK_THROWS_AS(fit_lda(class_statistics(data, 0.0), 1), SingularMatrix);
}

TEST_CASE("transform is linear and maps class means to centroids", "[lda]") {
  const auto m2 = generate_model2(240, 8, 6, 3);
  const ClassStatistics stats = class_statistics(m2.data, 1e-5);
  const DiscriminantModel model = fit_lda(stats, 3);

  CHECK(transform(model, Eigen::VectorXd::Zero(8)).isZero(0.0));
  for (int j = 0; j < 6; ++j) {
    const Eigen::VectorXd z = transform(model, stats.class_means.col(j));
    CHECK((z - model.centroids.col(j)).cwiseAbs().maxCoeff() < 1e-12);
  }

  // Against an independently recomputed projection (generalized solver),
  // directions agree up to sign.
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> gen(stats.Sb,
                                                                stats.Swd);
  Rng rng(7);
  Eigen::VectorXd x(8);
  for (int k = 0; k < 8; ++k) x(k) = 5 * rng.normal();
  const Eigen::VectorXd z = transform(model, x);
  for (int d = 0; d < 3; ++d) {
    const Eigen::VectorXd t_ref = gen.eigenvectors().col(7 - d);
    CHECK(std::abs(std::abs(z(d)) - std::abs(t_ref.dot(x))) < 1e-8);
  }
  CHECK_THROWS_AS(transform(model, Eigen::VectorXd::Zero(5)), InvalidInput);
}

TEST_CASE("classify recovers class means and breaks ties downward", "[lda]") {
  const LabeledDataset grid = grid_mean_dataset();
  const DiscriminantModel model = fit_lda(class_statistics(grid, 1e-8), 2);
  for (int j = 1; j <= 9; ++j) {
    CHECK(classify(model, model1_mean(j)) == j);
  }
  CHECK(classify(model, Eigen::Vector2d(5, 5)) == 9);

  // Hand-built model with two equidistant centroids.
  DiscriminantModel tie;
  tie.D = 1;
  tie.T = Eigen::MatrixXd::Identity(1, 1);
  tie.lambdas = Eigen::VectorXd::Ones(1);
  tie.centroids.resize(1, 2);
  tie.centroids << -1.0, 1.0;
  tie.labels = {1, 2};
  CHECK(classify(tie, Eigen::VectorXd::Zero(1)) == 1);
}

TEST_CASE("fitted models satisfy the constraint and eigen residual", "[lda]") {
  const auto m2 = generate_model2(600, 20, 30, 2);
  const ClassStatistics stats = class_statistics(m2.data, 1e-5);
  const DiscriminantModel model = fit_lda(stats, 4);

  const Eigen::MatrixXd gram = model.T.transpose() * stats.Swd * model.T;
  CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);

  const Eigen::MatrixXd R = inv_sqrt_sym(stats.Swd);
  const Eigen::MatrixXd M = R * stats.Sb * R;
  const Eigen::MatrixXd S = sqrt_sym(stats.Swd);
  for (int d = 0; d < 4; ++d) {
    const Eigen::VectorXd s = S * model.T.col(d);
    CHECK((M * s - model.lambdas(d) * s).norm() < 1e-8 * s.norm());
    CHECK(model.lambdas(d) >= 0.0);
  }
}

TEST_CASE("the fitted pipeline is translation invariant", "[lda]") {
  const auto m2 = generate_model2(300, 6, 6, 9);
  const ClassStatistics stats = class_statistics(m2.data, 1e-5);
  const DiscriminantModel model = fit_lda(stats, 2);

  LabeledDataset shifted = m2.data;
  const Eigen::RowVectorXd shift = Eigen::RowVectorXd::Constant(6, 17.5);
  shifted.X.rowwise() += shift;
  const DiscriminantModel model2 = fit_lda(class_statistics(shifted, 1e-5), 2);

  for (int i = 0; i < m2.data.n(); ++i) {
    const int before = classify(model, m2.data.X.row(i).transpose());
    const int after = classify(model2, shifted.X.row(i).transpose());
    CHECK(before == after);
  }
}
