#include "ajl/subsolvers.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "ajl/errors.hpp"

namespace ajl {

namespace {

// First-difference operator applied to a: (Da)_m = a_{m+1} - a_m.
Eigen::VectorXd diff(const Eigen::VectorXd& a) {
  const auto m = a.size() - 1;
  return a.tail(m) - a.head(m);
}

// D^T v for v of length M-1.
Eigen::VectorXd diff_adjoint(const Eigen::VectorXd& v, Eigen::Index M) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(M);
  for (Eigen::Index m = 0; m < v.size(); ++m) {
    out[m] -= v[m];
    out[m + 1] += v[m];
  }
  return out;
}

double soft(double x, double tau) {
  if (std::isinf(tau)) return 0.0;
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

// Quadratic part of the fused objective up to the constant ||e||^2/2N.
double fused_quad(const Eigen::MatrixXd& G, const Eigen::VectorXd& q, double N,
                  const Eigen::VectorXd& a) {
  return (0.5 * a.dot(G * a) - q.dot(a)) / N;
}

double fused_objective(const Eigen::MatrixXd& G, const Eigen::VectorXd& q,
                       double N, const Eigen::VectorXd& w,
                       const Eigen::VectorXd& a) {
  double obj = fused_quad(G, q, N, a);
  const Eigen::VectorXd d = diff(a);
  for (Eigen::Index m = 0; m < d.size(); ++m) {
    if (d[m] == 0.0) continue;
    if (std::isinf(w[m])) return std::numeric_limits<double>::infinity();
    obj += w[m] * std::abs(d[m]);
  }
  return obj;
}

double group_objective(const Eigen::MatrixXd& G, const Eigen::MatrixXd& C,
                       double N, double lambda, const Eigen::MatrixXd& B) {
  const double quad =
      0.5 * (B.transpose() * (G * B)).trace() - (C.transpose() * B).trace();
  return quad / N + lambda * B.norm();
}

}  // namespace

Eigen::MatrixXd block_soft_threshold(const Eigen::MatrixXd& V, double tau) {
  if (tau < 0.0) throw ConfigError("block_soft_threshold: tau must be >= 0");
  if (tau == 0.0) return V;
  const double norm = V.norm();
  if (norm <= tau) return Eigen::MatrixXd::Zero(V.rows(), V.cols());
  return (1.0 - tau / norm) * V;
}

void BandedCholesky::factor(const Eigen::MatrixXd& A, int bw) {
  n_ = static_cast<int>(A.rows());
  bw_ = std::min(bw, n_ - 1);
  band_ = Eigen::MatrixXd::Zero(n_, bw_ + 1);
  for (int i = 0; i < n_; ++i)
    for (int d = 0; d <= bw_ && i + d < n_; ++d) band_(i, d) = A(i + d, i);

  for (int j = 0; j < n_; ++j) {
    double pivot = band_(j, 0);
    if (!(pivot > 0.0))
      throw NumericalError("banded Cholesky: non-positive pivot");
    pivot = std::sqrt(pivot);
    band_(j, 0) = pivot;
    for (int d = 1; d <= bw_ && j + d < n_; ++d) band_(j, d) /= pivot;
    for (int k = 1; k <= bw_ && j + k < n_; ++k) {
      const double ljk = band_(j, k);
      if (ljk == 0.0) continue;
      for (int d = k; d <= bw_ && j + d < n_; ++d)
        band_(j + k, d - k) -= ljk * band_(j, d);
    }
  }
}

Eigen::VectorXd BandedCholesky::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = rhs;
  for (int j = 0; j < n_; ++j) {
    x[j] /= band_(j, 0);
    for (int d = 1; d <= bw_ && j + d < n_; ++d)
      x[j + d] -= band_(j, d) * x[j];
  }
  for (int j = n_ - 1; j >= 0; --j) {
    for (int d = 1; d <= bw_ && j + d < n_; ++d)
      x[j] -= band_(j, d) * x[j + d];
    x[j] /= band_(j, 0);
  }
  return x;
}

double power_iteration_lmax(const Eigen::MatrixXd& G, int iters, double tol) {
  const auto n = G.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
  double lmax = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd w = G * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = w.dot(G * w);
    if (std::abs(next - lmax) <= tol * std::max(1.0, std::abs(next))) {
      lmax = next;
      break;
    }
    lmax = next;
    v = w;
  }
  return lmax;
}

Eigen::MatrixXd solve_group_gram(const Eigen::MatrixXd& G,
                                 const Eigen::MatrixXd& C, double N,
                                 double lambda, double tol, int max_iter,
                                 SubsolverResult* status,
                                 const Eigen::MatrixXd* warm, double step_L) {
  if (lambda < 0.0 || N <= 0.0) throw ConfigError("solve_group: bad inputs");
  const auto M = G.rows();
  const auto K = C.cols();
  if (status) *status = {};

  // Zero-subgradient test at B = 0: downstream selection relies on the
  // exact zero block here, not on shrinkage noise.
  if (C.norm() / N <= lambda) return Eigen::MatrixXd::Zero(M, K);

  const double L =
      (step_L > 0.0 ? step_L : std::max(power_iteration_lmax(G) / N, 1e-300));

  if (lambda == 0.0) {
    // Unpenalized block: direct regularized normal equations.
    Eigen::MatrixXd Greg = G / N;
    Greg.diagonal().array() += 1e-12 * std::max(1.0, L);
    return Greg.ldlt().solve(C / N);
  }

  Eigen::MatrixXd B =
      warm ? *warm : Eigen::MatrixXd::Zero(M, K);
  Eigen::MatrixXd V = B;
  double t = 1.0;
  int it = 0;
  bool converged = false;
  for (; it < max_iter; ++it) {
    const Eigen::MatrixXd W = V - (G * V - C) / (N * L);
    const Eigen::MatrixXd Bn = block_soft_threshold(W, lambda / L);

    const double bnorm = Bn.norm();
    const Eigen::MatrixXd grad = (G * Bn - C) / N;
    double kkt;
    if (bnorm > 0.0) {
      kkt = (grad + lambda / bnorm * Bn).norm();
    } else {
      kkt = std::max(0.0, grad.norm() - lambda);
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    V = Bn + ((t - 1.0) / tn) * (Bn - B);
    B = Bn;
    t = tn;
    if (kkt <= tol) {
      converged = true;
      ++it;
      break;
    }
  }
  if (status) {
    status->converged = converged;
    status->iterations = it;
  }
  // BCD requires the block update to never increase the objective.
  if (warm && group_objective(G, C, N, lambda, B) >
                  group_objective(G, C, N, lambda, *warm)) {
    return *warm;
  }
  return B;
}

Eigen::MatrixXd solve_group(const GroupSubproblem& sub,
                            SubsolverResult* status) {
  const double N = static_cast<double>(sub.R.rows());
  return solve_group_gram(sub.Xj.transpose() * sub.Xj,
                          sub.Xj.transpose() * sub.R, N, sub.lambda_eff,
                          sub.tol, sub.max_iter, status);
}

Eigen::VectorXd solve_fused_gram(const Eigen::MatrixXd& G,
                                 const Eigen::VectorXd& q, double N,
                                 const Eigen::VectorXd& weights, int bw,
                                 double rho, double tol_primal,
                                 double tol_dual, int max_iter,
                                 SubsolverResult* status,
                                 const Eigen::VectorXd* warm) {
  const auto M = G.rows();
  if (weights.size() != M - 1)
    throw StructuralError("fused weights must have length M-1");
  for (Eigen::Index m = 0; m < weights.size(); ++m)
    if (weights[m] < 0.0) throw ConfigError("fused weights must be >= 0");
  if (rho <= 0.0) throw ConfigError("fused rho must be > 0");
  if (status) *status = {};

  const int band = std::max(bw, 1);
  Eigen::MatrixXd DtD = Eigen::MatrixXd::Zero(M, M);
  for (Eigen::Index m = 0; m + 1 < M; ++m) {
    DtD(m, m) += 1.0;
    DtD(m + 1, m + 1) += 1.0;
    DtD(m, m + 1) -= 1.0;
    DtD(m + 1, m) -= 1.0;
  }

  BandedCholesky chol;
  auto refactor = [&](double r) { chol.factor(G / N + r * DtD, band); };
  refactor(rho);

  Eigen::VectorXd a = warm ? *warm : Eigen::VectorXd::Zero(M);
  Eigen::VectorXd z = diff(a);
  for (Eigen::Index m = 0; m < z.size(); ++m)
    if (std::isinf(weights[m])) z[m] = 0.0;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(M - 1);
  const Eigen::VectorXd qn = q / N;

  bool converged = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    a = chol.solve(qn + rho * diff_adjoint(z - u, M));
    const Eigen::VectorXd d = diff(a);
    const Eigen::VectorXd z_old = z;
    for (Eigen::Index m = 0; m < z.size(); ++m)
      z[m] = soft(d[m] + u[m], weights[m] / rho);
    u += d - z;

    const double r_pri = (d - z).norm();
    const double r_dual = rho * diff_adjoint(z - z_old, M).norm();
    const double eps_pri =
        tol_primal * std::max({1.0, d.norm(), z.norm()});
    const double eps_dual =
        tol_dual * std::max(1.0, rho * diff_adjoint(u, M).norm());
    if (r_pri <= eps_pri && r_dual <= eps_dual) {
      converged = true;
      ++it;
      break;
    }
    // Residual balancing keeps rho out of the tuning surface.
    if ((it + 1) % 10 == 0) {
      if (r_pri > 10.0 * r_dual) {
        rho *= 2.0;
        u /= 2.0;
        refactor(rho);
      } else if (r_dual > 10.0 * r_pri) {
        rho /= 2.0;
        u *= 2.0;
        refactor(rho);
      }
    }
  }
  if (status) {
    status->converged = converged;
    status->iterations = it;
  }

  // Snap to the detected fusion pattern. Candidate 1 re-solves the
  // restricted stationarity system exactly; candidate 2 averages each run
  // of the ADMM iterate. Keep whichever has the lower objective, never
  // worse than the warm start.
  std::vector<int> run_of(M);
  int runs = 0;
  for (Eigen::Index m = 0; m < M; ++m) {
    if (m > 0 && z[m - 1] != 0.0) ++runs;
    run_of[m] = runs;
  }
  ++runs;

  Eigen::VectorXd best = a;
  double best_obj = fused_objective(G, q, N, weights, a);

  {  // run means of the ADMM iterate
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(runs);
    Eigen::VectorXd cnts = Eigen::VectorXd::Zero(runs);
    for (Eigen::Index m = 0; m < M; ++m) {
      sums[run_of[m]] += a[m];
      cnts[run_of[m]] += 1.0;
    }
    Eigen::VectorXd snapped(M);
    for (Eigen::Index m = 0; m < M; ++m)
      snapped[m] = sums[run_of[m]] / cnts[run_of[m]];
    const double obj = fused_objective(G, q, N, weights, snapped);
    if (obj <= best_obj) {
      best = snapped;
      best_obj = obj;
    }
  }

  {  // exact restricted solve given pattern and jump signs
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(M, runs);
    for (Eigen::Index m = 0; m < M; ++m) S(m, run_of[m]) = 1.0;
    Eigen::VectorXd ws = Eigen::VectorXd::Zero(M - 1);
    for (Eigen::Index m = 0; m + 1 < M; ++m)
      if (z[m] != 0.0) ws[m] = weights[m] * (z[m] > 0.0 ? 1.0 : -1.0);
    Eigen::MatrixXd H = S.transpose() * G * S / N;
    H.diagonal().array() += 1e-12;
    const Eigen::VectorXd rhs =
        S.transpose() * (q / N - diff_adjoint(ws, M));
    const Eigen::VectorXd c = H.ldlt().solve(rhs);
    const Eigen::VectorXd polished = S * c;
    const double obj = fused_objective(G, q, N, weights, polished);
    if (obj <= best_obj + 1e-12 * (1.0 + std::abs(best_obj))) {
      best = polished;
      best_obj = obj;
    }
  }

  if (warm) {
    const double warm_obj = fused_objective(G, q, N, weights, *warm);
    if (warm_obj < best_obj) best = *warm;
  }
  return best;
}

Eigen::VectorXd solve_fused(const FusedSubproblem& sub,
                            SubsolverResult* status) {
  const double N = static_cast<double>(sub.e.size());
  return solve_fused_gram(sub.Z.transpose() * sub.Z,
                          sub.Z.transpose() * sub.e, N, sub.lambda_weights,
                          static_cast<int>(sub.Z.cols()) - 1, sub.rho,
                          sub.tol_primal, sub.tol_dual, sub.max_iter, status);
}

}  // namespace ajl
