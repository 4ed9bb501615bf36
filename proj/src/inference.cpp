#include "ajl/inference.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "ajl/errors.hpp"

namespace ajl {

namespace {

int runs_in_column(const Eigen::VectorXd& col) {
  int runs = 1;
  for (Eigen::Index m = 0; m + 1 < col.size(); ++m)
    if (col[m + 1] != col[m]) ++runs;
  return runs;
}

/// Standard normal quantile by bisection on erf; deterministic and
/// accurate far beyond band needs.
double normal_quantile(double prob) {
  double lo = 0.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * (1.0 + std::erf(mid / std::sqrt(2.0)));
    (cdf < prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

int model_df(const FitResult& result) {
  const CoefficientSet& c = result.coef;
  int df = 0;
  for (int k = 0; k < c.K(); ++k) df += runs_in_column(c.A.col(k));
  for (int j : result.active_set)
    for (int k = 0; k < c.K(); ++k) df += runs_in_column(c.B[j].col(k));
  return df;
}

double noise_variance(const FitResult& result, const DesignMatrices& design,
                      const Eigen::MatrixXd& Y) {
  const double cells = static_cast<double>(Y.rows() * Y.cols());
  const int df = model_df(result);
  if (static_cast<double>(df) >= cells)
    throw InferenceError("selected model is saturated (df >= N*K)");
  const double rss = (Y - design.predict(result.coef)).squaredNorm();
  return rss / std::max(cells - static_cast<double>(df), 1.0);
}

BandEstimate pointwise_band(const FitResult& result,
                            const DesignMatrices& design,
                            const Eigen::MatrixXd& Y, BandTarget target,
                            int covariate, int outcome,
                            const Eigen::VectorXd& grid, double level) {
  if (level <= 0.0 || level >= 1.0)
    throw ConfigError("band level must lie in (0, 1)");
  const int M = design.M();
  const int K = static_cast<int>(Y.cols());
  if (outcome < 0 || outcome >= K)
    throw ConfigError("outcome index out of range");

  int block_offset = 0;  // intercept block
  if (target == BandTarget::beta) {
    const auto it = std::find(result.active_set.begin(),
                              result.active_set.end(), covariate);
    if (it == result.active_set.end())
      throw InferenceError(
          "post-selection band requested for an unselected covariate");
    block_offset =
        M * (1 + static_cast<int>(it - result.active_set.begin()));
  }

  // restricted design [Z | X_j : j active]
  const int a = static_cast<int>(result.active_set.size());
  Eigen::MatrixXd W(design.rows(), M * (1 + a));
  W.leftCols(M) = design.Z();
  for (int i = 0; i < a; ++i)
    W.middleCols(M * (1 + i), M) = design.block(result.active_set[i]);
  Eigen::MatrixXd H = W.transpose() * W;
  H.diagonal().array() += 1e-10;
  const double sigma2 = noise_variance(result, design, Y);
  const Eigen::MatrixXd omega =
      sigma2 * H.ldlt().solve(
                   Eigen::MatrixXd::Identity(H.rows(), H.cols()));
  const Eigen::MatrixXd omega_block =
      omega.block(block_offset, block_offset, M, M);

  const SplineBasis& basis = design.basis();
  const Eigen::VectorXd coef_col =
      target == BandTarget::alpha
          ? Eigen::VectorXd(result.coef.A.col(outcome))
          : Eigen::VectorXd(result.coef.B[covariate].col(outcome));
  const double z = normal_quantile(1.0 - 0.5 * (1.0 - level));

  // changepoint knots of the target curve, for flagging
  std::vector<double> cp_times;
  for (Eigen::Index m = 0; m + 1 < coef_col.size(); ++m)
    if (coef_col[m + 1] != coef_col[m] &&
        (target == BandTarget::alpha
             ? std::find(result.changepoints_alpha[outcome].begin(),
                         result.changepoints_alpha[outcome].end(),
                         static_cast<int>(m)) !=
                   result.changepoints_alpha[outcome].end()
             : true))
      cp_times.push_back(basis.edge_time(static_cast<int>(m)));
  const double span =
      (basis.t_hi() - basis.t_lo()) / std::max(M - basis.degree(), 1);

  BandEstimate band;
  band.grid = grid;
  band.level = level;
  band.center = reconstruct(coef_col, basis, grid);
  band.halfwidth.resize(grid.size());
  band.flagged.assign(static_cast<size_t>(grid.size()), false);
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    const Eigen::VectorXd phi = basis.eval(grid[g]);
    const double var = phi.dot(omega_block * phi);
    band.halfwidth[g] = z * std::sqrt(std::max(var, 0.0));
    for (double ct : cp_times)
      if (std::abs(grid[g] - ct) <= span)
        band.flagged[static_cast<size_t>(g)] = true;
  }
  return band;
}

double empirical_coverage(const BandEstimate& band,
                          const Eigen::VectorXd& truth_curve) {
  if (truth_curve.size() != band.grid.size())
    throw StructuralError("coverage grid mismatch");
  int hit = 0;
  for (Eigen::Index g = 0; g < band.grid.size(); ++g)
    if (std::abs(truth_curve[g] - band.center[g]) <= band.halfwidth[g]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(band.grid.size());
}

}  // namespace ajl
