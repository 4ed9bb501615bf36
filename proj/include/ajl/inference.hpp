#pragma once

#include <Eigen/Core>
#include <vector>

#include "ajl/design.hpp"
#include "ajl/solver.hpp"

namespace ajl {

/// Pointwise confidence band for one coefficient curve.
struct BandEstimate {
  Eigen::VectorXd grid;
  Eigen::VectorXd center;
  Eigen::VectorXd halfwidth;  // z_{alpha/2} * sigma_hat(t), >= 0
  double level = 0.95;
  /// Grid points adjacent to a detected changepoint knot, where the
  /// asymptotic band is not formally justified; reported, not dropped.
  std::vector<bool> flagged;
};

enum class BandTarget { alpha, beta };

/// Model degrees of freedom of the selected structure: one parameter per
/// coefficient run (fusion collapsing) in the intercepts and in every
/// active slope block.
int model_df(const FitResult& result);

/// sigma^2 = RSS / (N K - df). Throws InferenceError when df >= N K.
double noise_variance(const FitResult& result, const DesignMatrices& design,
                      const Eigen::MatrixXd& Y);

/// Band for alpha_k (target = alpha, index k) or beta_{jk}
/// (target = beta, covariate j, outcome k). Beta bands exist only for
/// active covariates. Covariance is sigma^2 (W_A' W_A + ridge)^-1 on the
/// design restricted to {Z} union active blocks.
BandEstimate pointwise_band(const FitResult& result,
                            const DesignMatrices& design,
                            const Eigen::MatrixXd& Y, BandTarget target,
                            int covariate, int outcome,
                            const Eigen::VectorXd& grid, double level = 0.95);

/// Fraction of grid points with |truth - center| <= halfwidth.
double empirical_coverage(const BandEstimate& band,
                          const Eigen::VectorXd& truth_curve);

}  // namespace ajl
