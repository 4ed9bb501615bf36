#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ajl/design.hpp"
#include "ajl/subsolvers.hpp"

namespace ajl {

/// Adaptive penalty multipliers derived from a pilot estimate.
struct PenaltyWeights {
  Eigen::VectorXd w_g;                    // p
  Eigen::MatrixXd w_f_alpha;              // K x (M-1)
  std::vector<Eigen::MatrixXd> w_f_beta;  // p entries, each K x (M-1)
  double gamma_g = 1.5;
  double gamma_f = 1.5;
  double gamma_s = 1.5;
  double eps = 0.0;

  static PenaltyWeights uniform(int M, int K, int p);
  void validate(int M, int K, int p) const;
};

enum class FitMode { baseline, adaptive_screen, refine };

struct FitConfig {
  double lambda_g = 0.0;
  double lambda_f_alpha = 0.0;
  double lambda_f_beta = 0.0;
  std::optional<PenaltyWeights> weights;  // absent = uniform
  double outer_tol = 1e-6;                // relative objective decrease
  int max_sweeps = 500;
  double subsolver_tol = 1e-6;
  int subsolver_max_iter = 20000;
  FitMode mode = FitMode::baseline;
  /// When nonempty, blocks outside this list are frozen at zero.
  std::vector<int> restrict_active;
  /// Optional warm start.
  const CoefficientSet* init = nullptr;

  void validate() const;
};

struct FitResult {
  CoefficientSet coef;
  std::vector<int> active_set;  // {j : ||B_j||_F > 0}, exact zeros
  std::vector<std::vector<int>> changepoints_alpha;  // per outcome k
  std::vector<std::vector<std::vector<int>>> changepoints_beta;  // [j][k]
  std::vector<double> objective_trace;
  int sweeps = 0;
  bool converged = false;
  double kkt_residual = std::numeric_limits<double>::quiet_NaN();

  /// Stage-1 coefficients (fit_ajl only).
  std::optional<CoefficientSet> pilot;

  double final_objective() const { return objective_trace.back(); }
  double cp_count_alpha(int k) const {
    return static_cast<double>(changepoints_alpha[k].size());
  }
};

/// Per-design caches shared across fits on the same data (CV grids,
/// stages): block Grams and Lipschitz constants. Read-only after build.
class SolverWorkspace {
 public:
  explicit SolverWorkspace(const DesignMatrices& design);
  const Eigen::MatrixXd& gram_Z() const { return gram_Z_; }
  const Eigen::MatrixXd& gram_block(int j) const { return gram_[j]; }
  double block_lipschitz(int j) const { return L_[j]; }

 private:
  Eigen::MatrixXd gram_Z_;
  std::vector<Eigen::MatrixXd> gram_;
  std::vector<double> L_;
};

/// Block coordinate descent over {B_j} then {a_k} for the penalized
/// objective with optional adaptive weights and slope fusion.
FitResult fit_penalized(const DesignMatrices& design, const Eigen::MatrixXd& Y,
                        const FitConfig& config,
                        const SolverWorkspace* workspace = nullptr);

/// w_g[j] = (||B_j||_F^g_g + eps)^-1 and analogous fused weights.
PenaltyWeights compute_weights(const CoefficientSet& initial, double gamma_g,
                               double gamma_f, double gamma_s, double eps);

struct AjlOptions {
  double gamma_g = 1.5;
  double gamma_f = 1.5;
  double gamma_s = 1.5;
  double eps = 0.0;  // 0 -> 1/N
  double outer_tol = 1e-6;
  int max_sweeps = 500;
};

/// 3-stage pipeline: non-adaptive pilot fit, weight computation, adaptive
/// screening fit (slope fusion off). Stage-1 coefficients are attached to
/// the result.
FitResult fit_ajl(const DesignMatrices& design, const Eigen::MatrixXd& Y,
                  double pilot_lambda_g, double pilot_lambda_f,
                  double final_lambda_g, double final_lambda_f,
                  const AjlOptions& options = {},
                  const SolverWorkspace* workspace = nullptr);

/// Post-selection refinement: re-solve restricted to the screened active
/// set with slope fusion on and the group penalty removed.
FitResult refine(const DesignMatrices& design, const Eigen::MatrixXd& Y,
                 const FitResult& screen_result, double lambda_f_alpha,
                 double lambda_f_beta, const PenaltyWeights& weights,
                 const AjlOptions& options = {},
                 const SolverWorkspace* workspace = nullptr);

/// Ground truth needed by the Oracle competitor.
struct OracleTruth {
  std::vector<int> active_set;           // true S
  std::vector<double> changepoint_times; // intercept jump times
};

enum class Competitor { JLL, SAJL, SLasso, Oracle };

struct CompetitorConfig {
  double lambda_g = 0.0;        // JLL
  double lambda_f_alpha = 0.0;  // JLL / S-AJL
  // S-AJL per-outcome tuning (same values reused across outcomes).
  double pilot_lambda_g = 0.0;
  double pilot_lambda_f = 0.0;
  // S-Lasso l1 level, one per outcome (single value broadcast if size 1).
  std::vector<double> slasso_lambda;
  AjlOptions ajl;
};

FitResult fit_competitor(Competitor method, const DesignMatrices& design,
                         const Eigen::MatrixXd& Y,
                         const CompetitorConfig& config,
                         const OracleTruth* truth = nullptr,
                         const SolverWorkspace* workspace = nullptr);

/// Plain per-outcome l1 on all p*M expanded slope coefficients
/// (coordinate descent); intercept spline left unpenalized.
FitResult fit_slasso(const DesignMatrices& design, const Eigen::MatrixXd& Y,
                     const std::vector<double>& lambda_per_outcome,
                     double tol = 1e-6, int max_sweeps = 2000);

struct KktReport {
  double max_violation = 0.0;
  double max_inactive_violation = 0.0;   // group zero blocks
  double max_stationarity = 0.0;         // active blocks
  double max_fused_violation = 0.0;      // intercept edges
};

KktReport kkt_diagnostics(const FitResult& result,
                          const DesignMatrices& design,
                          const Eigen::MatrixXd& Y, const FitConfig& config);

/// Objective value of the weighted problem at given coefficients.
double penalized_objective(const DesignMatrices& design,
                           const Eigen::MatrixXd& Y, const FitConfig& config,
                           const CoefficientSet& coef);

}  // namespace ajl
