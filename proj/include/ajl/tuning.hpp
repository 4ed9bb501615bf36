#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "ajl/design.hpp"
#include "ajl/solver.hpp"

namespace ajl {

/// Log-spaced penalty grid, sorted descending on both axes.
struct TuningGrid {
  Eigen::VectorXd lambda_g_values;
  Eigen::VectorXd lambda_f_values;

  static TuningGrid log_spaced(double lambda_g_max, double lambda_f_max,
                               int n_g = 12, int n_f = 12,
                               double min_ratio = 1e-3);
  /// Every other point of this grid (coarse pilot search).
  TuningGrid coarse() const;
  void validate() const;
};

/// Smallest lambda_g that zeroes every block at A = 0:
/// max_j ||(1/N) X_j' Y||_F.
double lambda_max_group(const DesignMatrices& design,
                        const Eigen::MatrixXd& Y);

/// Smallest lambda_f making the fully fused (constant) intercept optimal
/// with B = 0: the max absolute fused-dual coordinate at the constant
/// least-squares intercept.
double lambda_max_fused(const DesignMatrices& design,
                        const Eigen::MatrixXd& Y);

/// Deterministic subject-level folds: sizes differ by at most one, every
/// visit of a subject stays in one fold.
struct FoldSplit {
  std::vector<int> train_ids;
  std::vector<int> valid_ids;
};
std::vector<FoldSplit> subject_kfold(int n_subjects, int folds,
                                     uint64_t seed);

enum class CvPipeline { baseline, ajl };

struct CvResult {
  double best_lambda_g = 0.0;
  double best_lambda_f = 0.0;
  Eigen::MatrixXd surface;  // n_g x n_f mean held-out PE (+inf = failed)
  TuningGrid grid;
};

/// Mean held-out prediction error per grid point over subject folds.
/// Ties prefer the larger lambda_g, then larger lambda_f. The ajl
/// pipeline runs stage 1 at `pilot_lambda_*` per fold, derives weights,
/// and scans the grid over the adaptive stage with pathwise warm starts.
CvResult cross_validate(const LongitudinalDataset& data,
                        const SplineBasis& basis, const TuningGrid& grid,
                        CvPipeline pipeline, int folds, uint64_t seed,
                        double pilot_lambda_g = 0.0,
                        double pilot_lambda_f = 0.0,
                        const AjlOptions& options = {});

/// Two-round tuning: coarse baseline CV for the pilot penalties, then the
/// fine grid over the adaptive stage.
struct TunedPenalties {
  double pilot_lambda_g = 0.0;
  double pilot_lambda_f = 0.0;
  double lambda_g = 0.0;
  double lambda_f = 0.0;
  CvResult pilot_cv;
  CvResult final_cv;
};
TunedPenalties tune_ajl(const LongitudinalDataset& data,
                        const SplineBasis& basis, int folds, uint64_t seed,
                        int n_g = 12, int n_f = 12,
                        const AjlOptions& options = {});

/// HBIC score for a fitted model (experimental alternative to CV):
/// log(RSS/(NK)) + df * log(NK) * log(log(p M K)) / (NK).
double hbic(const FitResult& result, const DesignMatrices& design,
            const Eigen::MatrixXd& Y);

}  // namespace ajl
