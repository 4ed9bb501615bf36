#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "ajl/errors.hpp"
#include "ajl/solver.hpp"
#include "test_util.hpp"

using namespace ajl;

namespace {

struct Problem {
  LongitudinalDataset data;
  SplineBasis basis;
  DesignMatrices design;
  Problem(std::mt19937_64& rng, int n, int T, int p, int K, int M)
      : data(testutil::random_dataset(rng, n, T, p, K)),
        basis(M, 3, 0.0, 1.0),
        design(data, basis) {}
};

/// Slow proximal-gradient reference for the full joint objective with
/// slope fusion off. The fused prox is evaluated by exhaustive pattern
/// enumeration (identity quadratic), so the reference shares no code
/// with the production block-coordinate path.
double ista_reference_objective(const DesignMatrices& d,
                                const Eigen::MatrixXd& Y, double lambda_g,
                                double lambda_f, int iters) {
  const int M = d.M(), p = d.p(), K = static_cast<int>(Y.cols());
  const double N = static_cast<double>(d.rows());
  // full design [Z, X_1, ..., X_p]
  Eigen::MatrixXd W(d.rows(), M * (p + 1));
  W.leftCols(M) = d.Z();
  for (int j = 0; j < p; ++j) W.middleCols(M * (j + 1), M) = d.block(j);
  const Eigen::MatrixXd G = W.transpose() * W;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const double step = 1.0 / (es.eigenvalues().maxCoeff() / N);

  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(M * (p + 1), K);
  const Eigen::VectorXd w_tv =
      Eigen::VectorXd::Constant(M - 1, step * lambda_f);
  for (int it = 0; it < iters; ++it) {
    const Eigen::MatrixXd grad = (G * theta - W.transpose() * Y) / N;
    Eigen::MatrixXd v = theta - step * grad;
    // intercept prox: weighted TV per outcome via enumeration
    for (int k = 0; k < K; ++k)
      v.col(k).head(M) = testutil::oracle_fused(
          Eigen::MatrixXd::Identity(M, M), v.col(k).head(M), 1.0, w_tv);
    // slope prox: block soft threshold
    for (int j = 0; j < p; ++j) {
      Eigen::MatrixXd blockv = v.middleRows(M * (j + 1), M);
      const double nrm = blockv.norm();
      const double tau = step * lambda_g;
      v.middleRows(M * (j + 1), M) =
          nrm <= tau ? Eigen::MatrixXd::Zero(M, K).eval()
                     : ((1.0 - tau / nrm) * blockv).eval();
    }
    theta = v;
  }
  double obj = 0.5 * (Y - W * theta).squaredNorm() / N;
  for (int j = 0; j < p; ++j)
    obj += lambda_g * theta.middleRows(M * (j + 1), M).norm();
  for (int k = 0; k < K; ++k)
    for (int m = 0; m + 1 < M; ++m)
      obj += lambda_f * std::abs(theta(m + 1, k) - theta(m, k));
  return obj;
}

}  // namespace

TEST_CASE("objective trace is monotone non-increasing") {
  std::mt19937_64 rng(31);
  for (int it = 0; it < 8; ++it) {
    Problem pr(rng, 8, 5, 5, 2, 7);
    FitConfig cfg;
    cfg.lambda_g = 0.02 + 0.05 * static_cast<double>(it % 4);
    cfg.lambda_f_alpha = 0.01 + 0.03 * static_cast<double>(it % 3);
    if (it % 3 == 2) cfg.lambda_f_beta = 0.02;
    const FitResult res = fit_penalized(pr.design, pr.design.Y(), cfg);
    REQUIRE(res.objective_trace.size() >= 2);
    for (size_t s = 1; s < res.objective_trace.size(); ++s)
      CHECK(res.objective_trace[s] <= res.objective_trace[s - 1] + 1e-12);
    CHECK(res.converged);
  }
}

TEST_CASE("joint fit matches a long proximal-gradient reference") {
  std::mt19937_64 rng(32);
  Problem pr(rng, 12, 6, 3, 2, 6);
  const double lambda_g = 0.05, lambda_f = 0.04;
  FitConfig cfg;
  cfg.lambda_g = lambda_g;
  cfg.lambda_f_alpha = lambda_f;
  cfg.outer_tol = 1e-12;
  cfg.subsolver_tol = 1e-10;
  cfg.max_sweeps = 2000;
  const FitResult res = fit_penalized(pr.design, pr.design.Y(), cfg);
  const double ref =
      ista_reference_objective(pr.design, pr.design.Y(), lambda_g, lambda_f,
                               20000);
  CHECK(res.final_objective() <= ref + 1e-6 * std::max(1.0, std::abs(ref)));
  CHECK(res.final_objective() >= ref - 1e-6 * std::max(1.0, std::abs(ref)));
}

TEST_CASE("stationarity diagnostics are small at convergence") {
  std::mt19937_64 rng(33);
  for (int it = 0; it < 5; ++it) {
    Problem pr(rng, 10, 5, 4, 2, 7);
    FitConfig cfg;
    cfg.lambda_g = 0.05;
    cfg.lambda_f_alpha = 0.03;
    cfg.outer_tol = 1e-10;
    cfg.subsolver_tol = 1e-8;
    cfg.max_sweeps = 3000;
    const FitResult res = fit_penalized(pr.design, pr.design.Y(), cfg);
    const KktReport rep = kkt_diagnostics(res, pr.design, pr.design.Y(), cfg);
    CHECK(rep.max_violation <= 1e-4);
  }
}

TEST_CASE("zero blocks are exactly zero and a huge penalty empties the model") {
  std::mt19937_64 rng(34);
  Problem pr(rng, 10, 5, 6, 2, 7);
  FitConfig cfg;
  cfg.lambda_g = 1e4;
  cfg.lambda_f_alpha = 0.01;
  const FitResult res = fit_penalized(pr.design, pr.design.Y(), cfg);
  CHECK(res.active_set.empty());
  for (int j = 0; j < 6; ++j) CHECK(res.coef.B[j].norm() == 0.0);

  // objective value helper agrees with the trace
  CHECK(std::abs(penalized_objective(pr.design, pr.design.Y(), cfg, res.coef) -
                 res.final_objective()) <= 1e-9);
}

TEST_CASE("adaptive weights separate signal from noise") {
  std::mt19937_64 rng(35);
  // planted model: only covariate 0 matters, strong intercept jump
  LongitudinalDataset data = testutil::random_dataset(rng, 40, 8, 5, 1);
  SplineBasis basis(7, 3, 0.0, 1.0);
  for (auto& s : data.subjects)
    for (Eigen::Index l = 0; l < s.times.size(); ++l) {
      const double t = s.times[l];
      const double alpha = t > 0.5 ? 2.0 : -1.0;
      s.Y(l, 0) = alpha + 3.0 * std::sin(2 * M_PI * t) * s.X(l, 0) +
                  0.1 * s.Y(l, 0);
    }
  DesignMatrices design(data, basis);
  const FitResult res =
      fit_ajl(design, design.Y(), 0.05, 0.02, 0.05, 0.02);
  REQUIRE(res.pilot.has_value());
  const PenaltyWeights w = compute_weights(*res.pilot, 1.5, 1.5, 1.5,
                                           1.0 / design.rows());
  // true active covariate has a far smaller weight than the noise ones
  double min_noise = std::numeric_limits<double>::infinity();
  for (int j = 1; j < 5; ++j) min_noise = std::min(min_noise, w.w_g[j]);
  CHECK(w.w_g[0] * 10.0 <= min_noise);
  CHECK(std::find(res.active_set.begin(), res.active_set.end(), 0) !=
        res.active_set.end());
}

TEST_CASE("refine keeps screened-out blocks at zero") {
  std::mt19937_64 rng(36);
  Problem pr(rng, 10, 5, 5, 2, 7);
  FitConfig cfg;
  cfg.lambda_g = 0.5;
  cfg.lambda_f_alpha = 0.05;
  const FitResult screen = fit_penalized(pr.design, pr.design.Y(), cfg);
  PenaltyWeights w = PenaltyWeights::uniform(7, 2, 5);
  const FitResult refined =
      refine(pr.design, pr.design.Y(), screen, 0.05, 0.02, w);
  for (int j = 0; j < 5; ++j) {
    const bool was_active =
        std::find(screen.active_set.begin(), screen.active_set.end(), j) !=
        screen.active_set.end();
    if (!was_active) CHECK(refined.coef.B[j].norm() == 0.0);
  }
}

TEST_CASE("per-outcome l1 competitor behaves at the extremes") {
  std::mt19937_64 rng(37);
  Problem pr(rng, 12, 5, 4, 2, 7);
  // huge lambda removes every slope coefficient
  const FitResult empty = fit_slasso(pr.design, pr.design.Y(), {1e6});
  CHECK(empty.active_set.empty());
  // the intercept then solves the ridge-stabilized least squares
  Eigen::MatrixXd Greg =
      pr.design.gram_Z() / static_cast<double>(pr.design.rows());
  Greg.diagonal().array() += 1e-10;
  const Eigen::MatrixXd ls = Greg.ldlt().solve(
      pr.design.Zt_times(pr.design.Y()) / static_cast<double>(pr.design.rows()));
  CHECK((empty.coef.A - ls).norm() <= 1e-6);
}

TEST_CASE("oracle competitor recovers the planted structure") {
  std::mt19937_64 rng(38);
  LongitudinalDataset data = testutil::random_dataset(rng, 50, 10, 4, 2);
  SplineBasis basis(9, 3, 0.0, 1.0);
  for (auto& s : data.subjects)
    for (Eigen::Index l = 0; l < s.times.size(); ++l) {
      const double t = s.times[l];
      double alpha = 1.0;
      if (t > 1.0 / 3.0) alpha = 2.5;
      if (t > 2.0 / 3.0) alpha = 0.5;
      for (int k = 0; k < 2; ++k)
        s.Y(l, k) = alpha + 2.0 * t * s.X(l, 1) + 0.05 * s.Y(l, k);
    }
  DesignMatrices design(data, basis);
  OracleTruth truth;
  truth.active_set = {1};
  truth.changepoint_times = {1.0 / 3.0, 2.0 / 3.0};
  const FitResult res = fit_competitor(Competitor::Oracle, design, design.Y(),
                                       CompetitorConfig{}, &truth);
  CHECK(res.active_set == std::vector<int>{1});
  for (int k = 0; k < 2; ++k)
    CHECK(res.changepoints_alpha[k].size() == 2);
  for (int j : {0, 2, 3}) CHECK(res.coef.B[j].norm() == 0.0);
  CHECK_THROWS_AS(fit_competitor(Competitor::Oracle, design, design.Y(),
                                 CompetitorConfig{}, nullptr),
                  ConfigError);
}

TEST_CASE("warm started refits converge in few sweeps") {
  std::mt19937_64 rng(39);
  Problem pr(rng, 10, 5, 4, 2, 7);
  FitConfig cfg;
  cfg.lambda_g = 0.1;
  cfg.lambda_f_alpha = 0.05;
  const FitResult first = fit_penalized(pr.design, pr.design.Y(), cfg);
  FitConfig again = cfg;
  again.init = &first.coef;
  const FitResult second = fit_penalized(pr.design, pr.design.Y(), again);
  CHECK(second.sweeps <= 2);
  CHECK(second.final_objective() <= first.final_objective() + 1e-12);
}
