#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "ajl/errors.hpp"
#include "ajl/subsolvers.hpp"
#include "test_util.hpp"

using namespace ajl;

namespace {

Eigen::MatrixXd random_gram(std::mt19937_64& rng, int N, int M) {
  const Eigen::MatrixXd X = testutil::random_matrix(rng, N, M);
  return X.transpose() * X;
}

double rel_gap(double got, double oracle) {
  return (got - oracle) / std::max(1.0, std::abs(oracle));
}

}  // namespace

TEST_CASE("block soft threshold") {
  std::mt19937_64 rng(21);
  const Eigen::MatrixXd V = testutil::random_matrix(rng, 6, 3);
  CHECK((block_soft_threshold(V, 0.0) - V).norm() == 0.0);
  CHECK(block_soft_threshold(V, V.norm() + 1.0).norm() == 0.0);
  const double tau = 0.3 * V.norm();
  const Eigen::MatrixXd S = block_soft_threshold(V, tau);
  CHECK(std::abs(S.norm() - (V.norm() - tau)) <= 1e-12);
  CHECK((S / S.norm() - V / V.norm()).norm() <= 1e-12);
  CHECK_THROWS_AS(block_soft_threshold(V, -1.0), ConfigError);

  // nonexpansive: ||prox(u) - prox(v)|| <= ||u - v||
  for (int it = 0; it < 50; ++it) {
    const Eigen::MatrixXd U = testutil::random_matrix(rng, 4, 2);
    const Eigen::MatrixXd W = testutil::random_matrix(rng, 4, 2);
    CHECK((block_soft_threshold(U, 0.7) - block_soft_threshold(W, 0.7))
              .norm() <= (U - W).norm() + 1e-12);
  }
}

TEST_CASE("banded Cholesky matches dense") {
  std::mt19937_64 rng(22);
  for (int it = 0; it < 20; ++it) {
    const int M = 10;
    const int bw = 1 + static_cast<int>(rng() % 4);
    Eigen::MatrixXd A = random_gram(rng, 40, M);
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j)
        if (std::abs(i - j) > bw) A(i, j) = 0.0;
    A.diagonal().array() += 10.0;  // keep banded truncation PD
    BandedCholesky chol;
    chol.factor(A, bw);
    const Eigen::VectorXd b = testutil::random_matrix(rng, M, 1);
    CHECK((chol.solve(b) - A.llt().solve(b)).norm() <= 1e-9);
  }
  BandedCholesky chol;
  Eigen::MatrixXd neg = -Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(chol.factor(neg, 1), NumericalError);
}

TEST_CASE("power iteration finds the top eigenvalue") {
  std::mt19937_64 rng(23);
  for (int it = 0; it < 20; ++it) {
    const Eigen::MatrixXd G = random_gram(rng, 30, 8);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const double expect = es.eigenvalues().maxCoeff();
    CHECK(std::abs(power_iteration_lmax(G, 500, 1e-14) - expect) <=
          1e-6 * expect);
  }
}

TEST_CASE("group subproblem matches the secular-equation oracle") {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int it = 0; it < 60; ++it) {
    const int M = 4 + static_cast<int>(rng() % 6);
    const int K = 1 + static_cast<int>(rng() % 4);
    const int N = M + 5 + static_cast<int>(rng() % 40);
    const Eigen::MatrixXd G = random_gram(rng, N, M);
    const Eigen::MatrixXd C = testutil::random_matrix(rng, M, K, 2.0);
    const double scale = C.norm() / N;
    // spread lambda across the whole path including exact-zero territory
    const double lambda = scale * (0.01 + 2.0 * ud(rng));

    const Eigen::MatrixXd oracle = testutil::oracle_group(G, C, N, lambda);
    const Eigen::MatrixXd got =
        solve_group_gram(G, C, static_cast<double>(N), lambda, 1e-9, 200000);
    const double fo = testutil::group_obj(G, C, N, lambda, oracle);
    const double fg = testutil::group_obj(G, C, N, lambda, got);
    CHECK(rel_gap(fg, fo) <= 1e-6);
    if (oracle.norm() == 0.0) CHECK(got.norm() == 0.0);
  }
}

TEST_CASE("group subproblem special cases") {
  std::mt19937_64 rng(25);
  const int M = 6, K = 3, N = 50;
  const Eigen::MatrixXd G = random_gram(rng, N, M);
  const Eigen::MatrixXd C = testutil::random_matrix(rng, M, K);

  // lambda = 0 reduces to least squares
  const Eigen::MatrixXd ls =
      solve_group_gram(G, C, static_cast<double>(N), 0.0, 1e-10, 1000);
  CHECK((G * ls - C).norm() <= 1e-6 * std::max(1.0, C.norm()));

  // supercritical lambda gives the exact zero
  const double lam_zero = C.norm() / N * 1.0001;
  CHECK(solve_group_gram(G, C, static_cast<double>(N), lam_zero, 1e-10, 1000)
            .norm() == 0.0);

  // warm start never worsens the objective
  const double lambda = 0.3 * C.norm() / N;
  const Eigen::MatrixXd cold =
      solve_group_gram(G, C, static_cast<double>(N), lambda, 1e-9, 200000);
  const Eigen::MatrixXd warm_bad = testutil::random_matrix(rng, M, K, 5.0);
  const Eigen::MatrixXd warmed = solve_group_gram(
      G, C, static_cast<double>(N), lambda, 1e-9, 200000, nullptr, &warm_bad);
  CHECK(testutil::group_obj(G, C, N, lambda, warmed) <=
        testutil::group_obj(G, C, N, lambda, warm_bad) + 1e-12);
  CHECK(rel_gap(testutil::group_obj(G, C, N, lambda, warmed),
                testutil::group_obj(G, C, N, lambda, cold)) <= 1e-6);
}

TEST_CASE("fused subproblem matches the enumeration oracle") {
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int it = 0; it < 60; ++it) {
    const int M = 4 + static_cast<int>(rng() % 4);  // up to 3^6 patterns
    const int N = M + 10 + static_cast<int>(rng() % 30);
    const Eigen::MatrixXd G = random_gram(rng, N, M);
    const Eigen::VectorXd q = testutil::random_matrix(rng, M, 1, 3.0);
    Eigen::VectorXd w(M - 1);
    for (int m = 0; m < M - 1; ++m) w[m] = 0.05 + 2.0 * ud(rng);

    const Eigen::VectorXd oracle = testutil::oracle_fused(G, q, N, w);
    const Eigen::VectorXd got = solve_fused_gram(
        G, q, static_cast<double>(N), w, 3, 1.0, 1e-10, 1e-10, 100000);
    const double fo = testutil::fused_obj(G, q, N, w, oracle);
    const double fg = testutil::fused_obj(G, q, N, w, got);
    CHECK(rel_gap(fg, fo) <= 1e-6);
  }
}

TEST_CASE("fused subproblem produces exact fusions and honors hard edges") {
  std::mt19937_64 rng(27);
  const int M = 6, N = 60;
  const Eigen::MatrixXd G = random_gram(rng, N, M);
  const Eigen::VectorXd q = testutil::random_matrix(rng, M, 1, 2.0);

  // enormous weights force a globally constant solution
  Eigen::VectorXd w_big = Eigen::VectorXd::Constant(M - 1, 1e6);
  const Eigen::VectorXd flat =
      solve_fused_gram(G, q, static_cast<double>(N), w_big, 3, 1.0, 1e-10,
                       1e-10, 100000);
  for (int m = 0; m + 1 < M; ++m) CHECK(flat[m + 1] == flat[m]);

  // hard fusion on one edge only
  Eigen::VectorXd w_hard = Eigen::VectorXd::Constant(M - 1, 0.0);
  w_hard[2] = kHardFusion;
  const Eigen::VectorXd pinned =
      solve_fused_gram(G, q, static_cast<double>(N), w_hard, 3, 1.0, 1e-10,
                       1e-10, 100000);
  CHECK(pinned[3] == pinned[2]);
  // other edges are unpenalized: solution solves the constrained LS
  const Eigen::VectorXd oracle = testutil::oracle_fused(G, q, N, w_hard);
  CHECK(rel_gap(testutil::fused_obj(G, q, N, w_hard, pinned),
                testutil::fused_obj(G, q, N, w_hard, oracle)) <= 1e-6);
}

TEST_CASE("fused warm start never worsens the objective") {
  std::mt19937_64 rng(28);
  const int M = 7, N = 70;
  const Eigen::MatrixXd G = random_gram(rng, N, M);
  const Eigen::VectorXd q = testutil::random_matrix(rng, M, 1);
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(M - 1, 0.4);
  const Eigen::VectorXd warm = testutil::random_matrix(rng, M, 1, 10.0);
  const Eigen::VectorXd got = solve_fused_gram(
      G, q, static_cast<double>(N), w, 3, 1.0, 1e-10, 1e-10, 100000, nullptr,
      &warm);
  CHECK(testutil::fused_obj(G, q, N, w, got) <=
        testutil::fused_obj(G, q, N, w, warm) + 1e-12);
}

TEST_CASE("matrix-form wrappers agree with the gram forms") {
  std::mt19937_64 rng(29);
  const int N = 40, M = 6, K = 2;
  const Eigen::MatrixXd X = testutil::random_matrix(rng, N, M);
  const Eigen::MatrixXd R = testutil::random_matrix(rng, N, K);

  GroupSubproblem gs;
  gs.R = R;
  gs.Xj = X;
  gs.lambda_eff = 0.2;
  gs.tol = 1e-9;
  gs.max_iter = 100000;
  const Eigen::MatrixXd via_wrap = solve_group(gs);
  const Eigen::MatrixXd via_gram =
      solve_group_gram(X.transpose() * X, X.transpose() * R,
                       static_cast<double>(N), 0.2, 1e-9, 100000);
  CHECK((via_wrap - via_gram).norm() <= 1e-6);

  FusedSubproblem fs;
  fs.e = R.col(0);
  fs.Z = X;
  fs.lambda_weights = Eigen::VectorXd::Constant(M - 1, 0.3);
  fs.tol_primal = fs.tol_dual = 1e-10;
  fs.max_iter = 100000;
  const Eigen::VectorXd fused_wrap = solve_fused(fs);
  const Eigen::VectorXd fused_gram = solve_fused_gram(
      X.transpose() * X, X.transpose() * R.col(0), static_cast<double>(N),
      fs.lambda_weights, M - 1, 1.0, 1e-10, 1e-10, 100000);
  CHECK((fused_wrap - fused_gram).norm() <= 1e-6);
}
