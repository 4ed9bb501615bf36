#pragma once

#include <Eigen/Core>
#include <vector>

namespace ajl {

/// Clamped B-spline basis on a closed interval. Immutable after
/// construction; evaluation is safe from many threads concurrently.
class SplineBasis {
 public:
  /// Builds a clamped uniform-knot basis with exactly `num_basis` functions.
  /// Requires num_basis >= degree + 1; equality gives the single-span
  /// Bernstein basis (no interior knots).
  SplineBasis(int num_basis, int degree, double t_lo, double t_hi);

  int num_basis() const { return num_basis_; }
  int degree() const { return degree_; }
  double t_lo() const { return t_lo_; }
  double t_hi() const { return t_hi_; }
  const std::vector<double>& knots() const { return knots_; }

  /// Row bandwidth of any evaluation: at most degree+1 consecutive
  /// basis functions are nonzero at any t.
  int bandwidth() const { return degree_ + 1; }

  bool contains(double t) const { return t >= t_lo_ && t <= t_hi_; }

  /// De Boor evaluation of all M basis functions at t. Entries are
  /// non-negative, sum to 1, and at most degree+1 are nonzero.
  /// Throws DomainError for t outside [t_lo, t_hi]; t == t_hi maps into
  /// the last span (right-continuity convention).
  Eigen::VectorXd eval(double t) const;

  /// Compact evaluation: writes the degree+1 possibly-nonzero values into
  /// `values` and returns the index of the first of them.
  int eval_local(double t, double* values) const;

  /// N x M matrix with row r = eval(times[r]). `span_start`, when given,
  /// receives per-row first-nonzero column indices.
  Eigen::MatrixXd matrix(const Eigen::VectorXd& times,
                         std::vector<int>* span_start = nullptr) const;

  /// Interior knot associated with the coefficient edge m -> m+1
  /// (m in [0, M-2]); used to report changepoint times.
  double edge_time(int m) const;

 private:
  int find_span(double t) const;

  int num_basis_;
  int degree_;
  double t_lo_, t_hi_;
  std::vector<double> knots_;  // clamped: degree+1 repeats at each end
};

}  // namespace ajl
