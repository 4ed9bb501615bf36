#pragma once

#include <optional>
#include <vector>

#include "ajl/design.hpp"
#include "ajl/simgen.hpp"
#include "ajl/solver.hpp"

namespace ajl {

struct MetricsReport {
  double pe = 0.0;
  double ise_beta = 0.0;
  double ise_alpha = 0.0;
  double tp = 0.0;
  double fp = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double specificity = 0.0;
  double f1 = 0.0;
  double cp_err = 0.0;
  std::optional<double> coverage;
};

/// Mean squared error over all test cells: (1/(N_test K)) ||Yhat - Y||^2.
double prediction_error(const CoefficientSet& coef,
                        const DesignMatrices& test_design,
                        const Eigen::MatrixXd& test_Y);

/// Grid-averaged integrated squared errors on G equally spaced points:
/// beta averaged over all p*K curve pairs (true zeros included), alpha
/// over the K intercepts.
std::pair<double, double> ise(const CoefficientSet& coef,
                              const SplineBasis& basis,
                              const GroundTruth& truth, int grid_points = 200);

struct SelectionMetrics {
  double tp = 0.0, fp = 0.0;
  double recall = 0.0, precision = 0.0, specificity = 0.0, f1 = 0.0;
};

/// Set-arithmetic support recovery. Empty-selection conventions: both
/// sets empty -> precision 1, recall 1; selected empty with nonempty
/// truth -> precision 0, recall 0, f1 0.
SelectionMetrics selection_metrics(const std::vector<int>& active,
                                   const std::vector<int>& truth_S, int p);

/// (1/K) sum_k | #detected changepoints in a_k - true count |.
double cp_count_error(const FitResult& fit, int true_count_per_outcome = 2);

/// Full report for one replication.
MetricsReport evaluate(const FitResult& fit, const SplineBasis& basis,
                       const GroundTruth& truth,
                       const DesignMatrices& test_design,
                       const Eigen::MatrixXd& test_Y);

/// Per-metric arithmetic means across replications.
MetricsReport aggregate(const std::vector<MetricsReport>& reports);

}  // namespace ajl
