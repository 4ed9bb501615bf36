#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "ajl/basis.hpp"
#include "ajl/data.hpp"

namespace ajl {

/// Stacked regression problem Y ~ Z A + sum_j X_j B_j.
///
/// The slope block X_j is row r of Z scaled by the covariate value
/// x_j(row r); blocks are kept implicit (Z plus the N x p covariate
/// matrix) and materialized on demand. Rows of Z have at most
/// degree+1 nonzeros starting at span_start[r], which every product
/// below exploits. Immutable after assembly.
class DesignMatrices {
 public:
  DesignMatrices(const LongitudinalDataset& data, const SplineBasis& basis);

  Eigen::Index rows() const { return Z_.rows(); }
  int M() const { return static_cast<int>(Z_.cols()); }
  int p() const { return static_cast<int>(Xcov_.cols()); }
  int K() const { return K_; }
  int bandwidth() const { return bandwidth_; }
  const SplineBasis& basis() const { return basis_; }

  const Eigen::MatrixXd& Z() const { return Z_; }
  const Eigen::MatrixXd& covariates() const { return Xcov_; }
  const Eigen::MatrixXd& Y() const { return Y_; }
  const std::vector<int>& span_start() const { return span_; }

  /// (subject position, visit position) of a stacked row.
  std::pair<int, int> row_index(Eigen::Index r) const { return rowIndex_[r]; }

  /// Materializes the N x M block X_j (test/diagnostic use).
  Eigen::MatrixXd block(int j) const;

  // Banded-aware kernels. All exploit the row span structure.

  /// Z^T V for an N x c matrix V.
  Eigen::MatrixXd Zt_times(const Eigen::MatrixXd& V) const;
  /// X_j^T V.
  Eigen::MatrixXd Xjt_times(int j, const Eigen::MatrixXd& V) const;
  /// V += X_j C (C is M x c).
  void add_Xj_times(int j, const Eigen::MatrixXd& C, Eigen::MatrixXd& V) const;
  /// V += Z C.
  void add_Z_times(const Eigen::MatrixXd& C, Eigen::MatrixXd& V) const;

  /// Gram matrices Z^T Z and X_j^T X_j (M x M, bandwidth degree).
  Eigen::MatrixXd gram_Z() const;
  Eigen::MatrixXd gram_block(int j) const;

  /// Fitted values Z A + sum_j X_j B_j.
  Eigen::MatrixXd predict(const CoefficientSet& coef) const;

 private:
  SplineBasis basis_;
  Eigen::MatrixXd Z_;     // N x M
  Eigen::MatrixXd Xcov_;  // N x p, covariate value per stacked row
  Eigen::MatrixXd Y_;     // N x K
  std::vector<int> span_;
  std::vector<std::pair<int, int>> rowIndex_;
  int K_;
  int bandwidth_;
};

/// Curve samples f(u_g) = phi(u_g)^T c on a grid.
Eigen::VectorXd reconstruct(const Eigen::VectorXd& coef_column,
                            const SplineBasis& basis,
                            const Eigen::VectorXd& grid);

}  // namespace ajl
