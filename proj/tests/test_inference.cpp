#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ajl/errors.hpp"
#include "ajl/inference.hpp"
#include "ajl/simgen.hpp"

using namespace ajl;

namespace {

LongitudinalDataset grid_data(int n, int T, int K, int p, uint64_t seed) {
  Rng rng(seed);
  LongitudinalDataset data;
  data.K = K;
  data.p = p;
  for (int i = 0; i < n; ++i) {
    SubjectRecord s;
    s.id = "s" + std::to_string(i);
    s.times = Eigen::VectorXd::LinSpaced(T, 0.0, 1.0);
    s.X.resize(T, p);
    s.Y.resize(T, K);
    for (int l = 0; l < T; ++l)
      for (int j = 0; j < p; ++j) s.X(l, j) = rng.normal();
    s.Y.setZero();
    data.subjects.push_back(std::move(s));
  }
  return data;
}

// Y generated exactly from known spline coefficients (no noise).
Eigen::MatrixXd exact_outcomes(LongitudinalDataset& data,
                               const DesignMatrices& design,
                               const CoefficientSet& coef) {
  const Eigen::MatrixXd Yhat = design.predict(coef);
  Eigen::Index r = 0;
  for (auto& s : data.subjects) {
    for (Eigen::Index l = 0; l < s.times.size(); ++l)
      s.Y.row(l) = Yhat.row(r++);
  }
  return Yhat;
}

}  // namespace

TEST_CASE("model df counts coefficient runs") {
  FitResult fit;
  fit.coef.A.resize(5, 2);
  fit.coef.A.col(0) << 1, 1, 1, 1, 1;   // one run
  fit.coef.A.col(1) << 1, 1, 2, 2, 3;   // three runs
  fit.coef.B.push_back(Eigen::MatrixXd::Zero(5, 2));
  fit.coef.B.push_back(Eigen::MatrixXd::Zero(5, 2));
  fit.coef.B[1].col(0) << 1, 2, 3, 4, 5;  // five runs
  fit.coef.B[1].col(1) << 0, 0, 7, 7, 7;  // two runs
  fit.active_set = {1};
  CHECK(model_df(fit) == 1 + 3 + 5 + 2);
}

TEST_CASE("noise variance vanishes on noiseless data and is calibrated on "
          "pure noise") {
  const int M = 6, K = 2, p = 3;
  LongitudinalDataset data = grid_data(12, 10, K, p, 4);
  const SplineBasis basis(M, 3, 0.0, 1.0);
  {
    DesignMatrices design(data, basis);
    CoefficientSet coef = CoefficientSet::zero(M, K, p);
    Rng rng(8);
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k) coef.A(m, k) = rng.normal();
    coef.B[1].setConstant(0.7);
    const Eigen::MatrixXd Y = exact_outcomes(data, design, coef);

    FitResult fit;
    fit.coef = coef;
    fit.active_set = {1};
    CHECK(noise_variance(fit, design, Y) <= 1e-10);
  }
  {
    // Pure standard normal outcomes against the zero model.
    LongitudinalDataset noisy = grid_data(60, 15, K, p, 5);
    Rng rng(6);
    for (auto& s : noisy.subjects)
      for (Eigen::Index l = 0; l < s.Y.rows(); ++l)
        for (int k = 0; k < K; ++k) s.Y(l, k) = rng.normal();
    DesignMatrices design(noisy, basis);
    FitResult fit;
    fit.coef = CoefficientSet::zero(M, K, p);
    fit.coef.A.setConstant(1e-300);  // single run per column, ~zero value
    CHECK(noise_variance(fit, design, design.Y()) ==
          doctest::Approx(1.0).epsilon(0.1));
  }
}

TEST_CASE("saturated models are rejected") {
  const int M = 6, K = 1, p = 2;
  LongitudinalDataset data = grid_data(1, 8, K, p, 4);
  const SplineBasis basis(M, 3, 0.0, 1.0);
  DesignMatrices design(data, basis);
  FitResult fit;
  fit.coef = CoefficientSet::zero(M, K, p);
  fit.coef.A.col(0) << 1, 2, 3, 4, 5, 6;
  fit.coef.B[0].col(0) << 1, 2, 3, 4, 5, 6;
  fit.active_set = {0};
  // df = 12 >= N K = 8.
  CHECK_THROWS_AS(noise_variance(fit, design, design.Y()), InferenceError);
}

TEST_CASE("bands are centered on the fitted curve and tighten with noise") {
  const int M = 6, K = 2, p = 3;
  LongitudinalDataset data = grid_data(20, 12, K, p, 4);
  const SplineBasis basis(M, 3, 0.0, 1.0);
  DesignMatrices design(data, basis);
  CoefficientSet coef = CoefficientSet::zero(M, K, p);
  coef.A.col(0).setLinSpaced(M, 0.0, 2.0);
  coef.A.col(1).setConstant(1.0);
  coef.B[0].col(0).setConstant(0.5);
  coef.B[0].col(1).setConstant(-0.25);
  Eigen::MatrixXd Y = exact_outcomes(data, design, coef);
  // Add small noise so sigma2 > 0.
  Rng rng(10);
  for (Eigen::Index i = 0; i < Y.rows(); ++i)
    for (int k = 0; k < K; ++k) Y(i, k) += 0.05 * rng.normal();

  FitResult fit;
  fit.coef = coef;
  fit.active_set = {0};
  fit.changepoints_alpha.assign(K, {});
  fit.changepoints_beta.assign(p, std::vector<std::vector<int>>(K));

  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(50, 0.0, 1.0);
  const BandEstimate band =
      pointwise_band(fit, design, Y, BandTarget::alpha, 0, 0, grid, 0.95);
  REQUIRE(band.grid.size() == 50);
  REQUIRE(band.center.size() == 50);
  REQUIRE(band.halfwidth.size() == 50);
  CHECK(band.halfwidth.minCoeff() > 0.0);
  // Center equals the reconstructed alpha_1 curve.
  const Eigen::VectorXd curve = reconstruct(coef.A.col(0), basis, grid);
  CHECK((band.center - curve).lpNorm<Eigen::Infinity>() < 1e-12);

  // Wider level, wider band; same centers.
  const BandEstimate wide =
      pointwise_band(fit, design, Y, BandTarget::alpha, 0, 0, grid, 0.99);
  CHECK((wide.center - band.center).lpNorm<Eigen::Infinity>() == 0.0);
  for (int g = 0; g < 50; ++g)
    CHECK(wide.halfwidth[g] > band.halfwidth[g]);
  // Ratio of halfwidths equals z(0.995)/z(0.975) everywhere.
  const double ratio = wide.halfwidth[7] / band.halfwidth[7];
  CHECK(ratio == doctest::Approx(2.5758293035 / 1.9599639845).epsilon(1e-6));

  // Beta band for the active covariate works, inactive ones are rejected.
  const BandEstimate bb =
      pointwise_band(fit, design, Y, BandTarget::beta, 0, 1, grid, 0.95);
  const Eigen::VectorXd bcurve = reconstruct(coef.B[0].col(1), basis, grid);
  CHECK((bb.center - bcurve).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK_THROWS_AS(
      pointwise_band(fit, design, Y, BandTarget::beta, 2, 0, grid, 0.95),
      InferenceError);

  // With tiny noise, bands are tight and cover the generating curve.
  const double cov = empirical_coverage(band, curve);
  CHECK(cov == 1.0);
  CHECK(band.halfwidth.maxCoeff() < 0.2);
}

TEST_CASE("changepoint-adjacent grid points are flagged") {
  const int M = 8, K = 1, p = 1;
  LongitudinalDataset data = grid_data(15, 12, K, p, 4);
  const SplineBasis basis(M, 3, 0.0, 1.0);
  DesignMatrices design(data, basis);
  CoefficientSet coef = CoefficientSet::zero(M, K, p);
  coef.A.col(0) << 1, 1, 1, 1, 3, 3, 3, 3;
  Eigen::MatrixXd Y = exact_outcomes(data, design, coef);
  Rng rng(2);
  for (Eigen::Index i = 0; i < Y.rows(); ++i) Y(i, 0) += 0.1 * rng.normal();

  FitResult fit;
  fit.coef = coef;
  fit.changepoints_alpha = {{3}};  // jump between coefficients 3 and 4
  fit.changepoints_beta.assign(p, std::vector<std::vector<int>>(K));

  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(40, 0.0, 1.0);
  const BandEstimate band =
      pointwise_band(fit, design, Y, BandTarget::alpha, 0, 0, grid, 0.95);
  REQUIRE(band.flagged.size() == 40);
  int n_flagged = 0;
  for (bool f : band.flagged) n_flagged += f ? 1 : 0;
  CHECK(n_flagged > 0);
  CHECK(n_flagged < 40);
  // Flags cluster around the jump location.
  const double cp_time = basis.edge_time(3);
  for (int g = 0; g < 40; ++g)
    if (std::abs(grid[g] - cp_time) > 0.3) CHECK(!band.flagged[g]);
}

TEST_CASE("empirical coverage counts grid points inside the band") {
  BandEstimate band;
  band.grid = Eigen::VectorXd::LinSpaced(4, 0.0, 1.0);
  band.center = Eigen::VectorXd::Zero(4);
  band.halfwidth = Eigen::VectorXd::Constant(4, 1.0);
  Eigen::VectorXd truth(4);
  truth << 0.5, -0.5, 2.0, 1.0;  // last one exactly on the boundary
  CHECK(empirical_coverage(band, truth) == doctest::Approx(0.75));
  Eigen::VectorXd wrong_size(3);
  wrong_size.setZero();
  CHECK_THROWS_AS(empirical_coverage(band, wrong_size), StructuralError);
}
