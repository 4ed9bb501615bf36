#pragma once

#include <Eigen/Core>
#include <limits>
#include <vector>

namespace ajl {

/// Proximal map of tau * ||.||_F : scales V by max(0, 1 - tau/||V||_F).
Eigen::MatrixXd block_soft_threshold(const Eigen::MatrixXd& V, double tau);

/// Banded Cholesky factorization A = L L^T for a symmetric positive
/// definite matrix with the given half-bandwidth. Storage and solves are
/// O(M * bw); used by the fused subproblem's quadratic step.
class BandedCholesky {
 public:
  /// Factors the dense symmetric A, reading only entries |i-j| <= bw.
  /// Throws NumericalError if a pivot is not strictly positive.
  void factor(const Eigen::MatrixXd& A, int bw);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  Eigen::MatrixXd band_;  // band_(i, d) = L(i+d, i), d in [0, bw]
  int n_ = 0;
  int bw_ = 0;
};

struct SubsolverResult {
  bool converged = true;
  int iterations = 0;
};

/// min_B (1/2N) ||R - X B||_F^2 + lambda ||B||_F, in Gram form:
/// G = X^T X, C = X^T R. Solved by FISTA with step 1/L, L = lmax(G)/N.
/// Exact zero is returned whenever the zero-subgradient test passes.
Eigen::MatrixXd solve_group_gram(const Eigen::MatrixXd& G,
                                 const Eigen::MatrixXd& C, double N,
                                 double lambda, double tol, int max_iter,
                                 SubsolverResult* status = nullptr,
                                 const Eigen::MatrixXd* warm = nullptr,
                                 double step_L = 0.0);

/// Spec-facing wrapper around solve_group_gram.
struct GroupSubproblem {
  Eigen::MatrixXd R;   // N x K partial residual
  Eigen::MatrixXd Xj;  // N x M block design
  double lambda_eff = 0.0;
  double tol = 1e-6;
  int max_iter = 10000;
};
Eigen::MatrixXd solve_group(const GroupSubproblem& sub,
                            SubsolverResult* status = nullptr);

/// min_a (1/2N) ||e - Z a||^2 + sum_m w_m |a_{m+1} - a_m|, in Gram form:
/// G = Z^T Z, q = Z^T e. ADMM on the split z = D1 a; the a-update solves
/// (G/N + rho D1^T D1) a = q/N + rho D1^T (z - u) by banded Cholesky and
/// the z-update is an elementwise soft threshold. Weight +inf means hard
/// fusion of the edge. Differences are snapped to exact equality on the
/// detected fusion pattern before returning.
Eigen::VectorXd solve_fused_gram(const Eigen::MatrixXd& G,
                                 const Eigen::VectorXd& q, double N,
                                 const Eigen::VectorXd& weights, int bw,
                                 double rho, double tol_primal,
                                 double tol_dual, int max_iter,
                                 SubsolverResult* status = nullptr,
                                 const Eigen::VectorXd* warm = nullptr);

struct FusedSubproblem {
  Eigen::VectorXd e;  // N-vector partial residual
  Eigen::MatrixXd Z;  // N x M intercept design
  Eigen::VectorXd lambda_weights;  // M-1 effective weights, may be +inf
  double rho = 1.0;
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  int max_iter = 20000;
};
Eigen::VectorXd solve_fused(const FusedSubproblem& sub,
                            SubsolverResult* status = nullptr);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double power_iteration_lmax(const Eigen::MatrixXd& G, int iters = 60,
                            double tol = 1e-10);

constexpr double kHardFusion = std::numeric_limits<double>::infinity();

}  // namespace ajl
