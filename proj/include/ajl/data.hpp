#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace ajl {

/// One subject's trajectory. X has one row per visit; baseline covariates
/// are stored broadcast (identical rows), so time-varying and baseline
/// inputs flow through the same code path.
struct SubjectRecord {
  std::string id;
  Eigen::VectorXd times;  // strictly increasing, length T_i
  Eigen::MatrixXd X;      // T_i x p covariate values
  Eigen::MatrixXd Y;      // T_i x K outcomes
};

struct LongitudinalDataset {
  std::vector<SubjectRecord> subjects;
  int p = 0;
  int K = 0;
  double t_lo = 0.0;
  double t_hi = 1.0;

  int num_subjects() const { return static_cast<int>(subjects.size()); }
  Eigen::Index total_rows() const;

  /// Checks the per-subject shape and time invariants; throws on violation.
  void validate() const;

  /// Subset by subject position, preserving input order.
  LongitudinalDataset subset(const std::vector<int>& subject_idx) const;
};

/// The estimand: intercept coefficients A (M x K) and slope blocks
/// B[j] (each M x K), columns indexed by outcome.
struct CoefficientSet {
  Eigen::MatrixXd A;
  std::vector<Eigen::MatrixXd> B;

  static CoefficientSet zero(int M, int K, int p);

  int M() const { return static_cast<int>(A.rows()); }
  int K() const { return static_cast<int>(A.cols()); }
  int p() const { return static_cast<int>(B.size()); }

  bool all_finite() const;
};

}  // namespace ajl
