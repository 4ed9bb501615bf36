#include "ajl/solver.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "ajl/errors.hpp"

namespace ajl {

namespace {

Eigen::VectorXd col_diff(const Eigen::VectorXd& a) {
  const auto m = a.size() - 1;
  return a.tail(m) - a.head(m);
}

double weighted_tv(const Eigen::VectorXd& a, const Eigen::VectorXd& w) {
  double acc = 0.0;
  for (Eigen::Index m = 0; m + 1 < a.size(); ++m) {
    const double d = a[m + 1] - a[m];
    if (d != 0.0) acc += w[m] * std::abs(d);
  }
  return acc;
}

double penalty_value(const FitConfig& cfg, const PenaltyWeights& w,
                     const CoefficientSet& coef) {
  double acc = 0.0;
  if (cfg.lambda_g > 0.0)
    for (int j = 0; j < coef.p(); ++j)
      acc += cfg.lambda_g * w.w_g[j] * coef.B[j].norm();
  if (cfg.lambda_f_alpha > 0.0)
    for (int k = 0; k < coef.K(); ++k)
      acc += cfg.lambda_f_alpha *
             weighted_tv(coef.A.col(k), w.w_f_alpha.row(k).transpose());
  if (cfg.lambda_f_beta > 0.0)
    for (int j = 0; j < coef.p(); ++j)
      for (int k = 0; k < coef.K(); ++k)
        acc += cfg.lambda_f_beta *
               weighted_tv(coef.B[j].col(k),
                           w.w_f_beta[j].row(k).transpose());
  return acc;
}

std::vector<int> exact_changepoints(const Eigen::VectorXd& a) {
  std::vector<int> cps;
  for (Eigen::Index m = 0; m + 1 < a.size(); ++m)
    if (a[m + 1] != a[m]) cps.push_back(static_cast<int>(m));
  return cps;
}

// Joint group-Frobenius + per-column fused penalty on one block; only the
// non-canonical one-shot problem reaches this. ADMM with splits z1 = B,
// z2 = D b_k per column.
Eigen::MatrixXd solve_block_general(const Eigen::MatrixXd& G,
                                    const Eigen::MatrixXd& C, double N,
                                    double lambda_g,
                                    const Eigen::MatrixXd& fused_w, int bw,
                                    double tol, int max_iter,
                                    const Eigen::MatrixXd& warm) {
  const auto M = G.rows();
  const auto K = C.cols();
  Eigen::MatrixXd DtD = Eigen::MatrixXd::Zero(M, M);
  for (Eigen::Index m = 0; m + 1 < M; ++m) {
    DtD(m, m) += 1.0;
    DtD(m + 1, m + 1) += 1.0;
    DtD(m, m + 1) -= 1.0;
    DtD(m + 1, m) -= 1.0;
  }
  double rho = 1.0;
  BandedCholesky chol;
  auto refactor = [&]() {
    Eigen::MatrixXd Aq = G / N + rho * DtD;
    Aq.diagonal().array() += rho;
    chol.factor(Aq, std::max(bw, 1));
  };
  refactor();

  Eigen::MatrixXd B = warm;
  Eigen::MatrixXd z1 = B, u1 = Eigen::MatrixXd::Zero(M, K);
  Eigen::MatrixXd z2(M - 1, K), u2 = Eigen::MatrixXd::Zero(M - 1, K);
  for (Eigen::Index k = 0; k < K; ++k) z2.col(k) = col_diff(B.col(k));

  auto objective = [&](const Eigen::MatrixXd& X) {
    double obj = (0.5 * (X.transpose() * (G * X)).trace() -
                  (C.transpose() * X).trace()) /
                 N;
    obj += lambda_g * X.norm();
    for (Eigen::Index k = 0; k < K; ++k)
      obj += weighted_tv(X.col(k), fused_w.row(k).transpose());
    return obj;
  };

  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd rhs = C / N + rho * (z1 - u1);
    for (Eigen::Index k = 0; k < K; ++k) {
      Eigen::VectorXd dz = z2.col(k) - u2.col(k);
      for (Eigen::Index m = 0; m + 1 < M; ++m) {
        rhs(m, k) -= rho * dz[m];
        rhs(m + 1, k) += rho * dz[m];
      }
      B.col(k) = chol.solve(rhs.col(k));
    }
    const Eigen::MatrixXd z1_old = z1, z2_old = z2;
    z1 = block_soft_threshold(B + u1, lambda_g / rho);
    for (Eigen::Index k = 0; k < K; ++k) {
      const Eigen::VectorXd d = col_diff(B.col(k));
      for (Eigen::Index m = 0; m + 1 < M; ++m) {
        const double v = d[m] + u2(m, k);
        const double tau = fused_w(k, m) / rho;
        z2(m, k) = std::isinf(tau) ? 0.0
                   : (v > tau ? v - tau : (v < -tau ? v + tau : 0.0));
      }
      u2.col(k) += d - z2.col(k);
    }
    u1 += B - z1;
    const double r_pri =
        std::sqrt((B - z1).squaredNorm() +
                  [&] {
                    double acc = 0.0;
                    for (Eigen::Index k = 0; k < K; ++k)
                      acc += (col_diff(B.col(k)) - z2.col(k)).squaredNorm();
                    return acc;
                  }());
    const double r_dual =
        rho * std::sqrt((z1 - z1_old).squaredNorm() +
                        (z2 - z2_old).squaredNorm());
    if (r_pri <= tol * std::max(1.0, B.norm()) &&
        r_dual <= tol * std::max(1.0, rho)) {
      break;
    }
  }

  // Exact structure from the split variables, objective-guarded.
  Eigen::MatrixXd candidate = z1;
  if (z1.norm() > 0.0) {
    for (Eigen::Index k = 0; k < K; ++k) {
      Eigen::VectorXd col = B.col(k);
      // run means over the z2 fusion pattern
      Eigen::Index start = 0;
      for (Eigen::Index m = 0; m <= M - 1; ++m) {
        const bool close_run = (m == M - 1) || (z2(m, k) != 0.0);
        if (close_run) {
          const double mean = col.segment(start, m - start + 1).mean();
          for (Eigen::Index i = start; i <= m; ++i) col[i] = mean;
          start = m + 1;
        }
      }
      candidate.col(k) = col;
    }
  }
  if (objective(candidate) <= objective(B) + 1e-12) B = candidate;
  if (objective(warm) < objective(B)) B = warm;
  return B;
}

}  // namespace

PenaltyWeights PenaltyWeights::uniform(int M, int K, int p) {
  PenaltyWeights w;
  w.w_g = Eigen::VectorXd::Ones(p);
  w.w_f_alpha = Eigen::MatrixXd::Ones(K, M - 1);
  w.w_f_beta.assign(p, Eigen::MatrixXd::Ones(K, M - 1));
  return w;
}

void PenaltyWeights::validate(int M, int K, int p) const {
  if (w_g.size() != p || w_f_alpha.rows() != K || w_f_alpha.cols() != M - 1 ||
      static_cast<int>(w_f_beta.size()) != p)
    throw StructuralError("penalty weight dimensions do not match problem");
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  for (int j = 0; j < p; ++j)
    if (!positive(w_g[j])) throw NumericalError("non-positive group weight");
  if (!(w_f_alpha.array() > 0.0).all() || !w_f_alpha.allFinite())
    throw NumericalError("invalid fused alpha weight");
  for (const auto& wb : w_f_beta)
    if (!(wb.array() > 0.0).all() || !wb.allFinite())
      throw NumericalError("invalid fused beta weight");
}

void FitConfig::validate() const {
  if (lambda_g < 0.0 || lambda_f_alpha < 0.0 || lambda_f_beta < 0.0)
    throw ConfigError("penalty levels must be >= 0");
  if (outer_tol <= 0.0 || subsolver_tol <= 0.0)
    throw ConfigError("tolerances must be > 0");
  if (max_sweeps < 1) throw ConfigError("max_sweeps must be >= 1");
}

SolverWorkspace::SolverWorkspace(const DesignMatrices& design) {
  gram_Z_ = design.gram_Z();
  const int p = design.p();
  gram_.reserve(p);
  L_.reserve(p);
  const double N = static_cast<double>(design.rows());
  for (int j = 0; j < p; ++j) {
    gram_.push_back(design.gram_block(j));
    L_.push_back(std::max(power_iteration_lmax(gram_.back()) / N, 1e-300));
  }
}

FitResult fit_penalized(const DesignMatrices& design, const Eigen::MatrixXd& Y,
                        const FitConfig& config,
                        const SolverWorkspace* workspace) {
  config.validate();
  const int M = design.M();
  const int K = static_cast<int>(Y.cols());
  const int p = design.p();
  const double N = static_cast<double>(design.rows());
  if (Y.rows() != design.rows())
    throw StructuralError("Y row count does not match design");

  PenaltyWeights uniform_w;
  const PenaltyWeights* w = nullptr;
  if (config.weights) {
    config.weights->validate(M, K, p);
    w = &*config.weights;
  } else {
    uniform_w = PenaltyWeights::uniform(M, K, p);
    w = &uniform_w;
  }

  std::unique_ptr<SolverWorkspace> local_ws;
  if (!workspace) {
    local_ws = std::make_unique<SolverWorkspace>(design);
    workspace = local_ws.get();
  }
  const Eigen::MatrixXd& Gz = workspace->gram_Z();
  const int band = std::max(design.bandwidth() - 1, 1);

  std::vector<char> allowed(static_cast<size_t>(p), 1);
  if (!config.restrict_active.empty()) {
    allowed.assign(static_cast<size_t>(p), 0);
    for (int j : config.restrict_active) allowed.at(static_cast<size_t>(j)) = 1;
  }

  CoefficientSet coef =
      config.init ? *config.init : CoefficientSet::zero(M, K, p);
  if (coef.M() != M || coef.K() != K || coef.p() != p)
    throw StructuralError("warm start dimensions do not match problem");

  Eigen::MatrixXd resid = Y - design.predict(coef);

  auto objective = [&]() {
    return 0.5 * resid.squaredNorm() / N + penalty_value(config, *w, coef);
  };

  FitResult out;
  out.objective_trace.push_back(objective());

  // Unpenalized intercept ridge path: keeps lambda = 0 well-defined on
  // rank-deficient designs.
  Eigen::LDLT<Eigen::MatrixXd> plain_alpha;
  if (config.lambda_f_alpha == 0.0) {
    Eigen::MatrixXd Greg = Gz / N;
    Greg.diagonal().array() += 1e-10;
    plain_alpha.compute(Greg);
  }

  Eigen::MatrixXd delta(M, K);
  for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
    // B sweep against the partial residual R = Y - Z A - sum_{l != j} X_l B_l.
    for (int j = 0; j < p; ++j) {
      if (!allowed[static_cast<size_t>(j)]) continue;
      const Eigen::MatrixXd& Gj = workspace->gram_block(j);
      const bool was_zero = coef.B[j].size() == 0 || coef.B[j].norm() == 0.0;
      Eigen::MatrixXd C = design.Xjt_times(j, resid);
      if (!was_zero) C += Gj * coef.B[j];

      Eigen::MatrixXd Bn;
      const double lam = config.lambda_g * w->w_g[j];
      if (config.lambda_f_beta == 0.0) {
        Bn = solve_group_gram(Gj, C, N, lam, config.subsolver_tol,
                              config.subsolver_max_iter, nullptr, &coef.B[j],
                              workspace->block_lipschitz(j));
      } else if (lam == 0.0) {
        Bn.resize(M, K);
        for (int k = 0; k < K; ++k) {
          const Eigen::VectorXd fw =
              config.lambda_f_beta * w->w_f_beta[j].row(k).transpose();
          const Eigen::VectorXd warm_col = coef.B[j].col(k);
          Bn.col(k) = solve_fused_gram(Gj, C.col(k), N, fw, band, 1.0,
                                       config.subsolver_tol,
                                       config.subsolver_tol,
                                       config.subsolver_max_iter, nullptr,
                                       &warm_col);
        }
      } else {
        const Eigen::MatrixXd fw = config.lambda_f_beta * w->w_f_beta[j];
        Bn = solve_block_general(Gj, C, N, lam, fw, band, config.subsolver_tol,
                                 config.subsolver_max_iter, coef.B[j]);
      }

      delta = coef.B[j] - Bn;
      if (delta.norm() > 0.0) {
        design.add_Xj_times(j, delta, resid);
        coef.B[j] = Bn;
      }
    }

    // A sweep against E = Y - sum_j X_j B_j, one fused problem per outcome.
    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXd c =
          design.Zt_times(resid.col(k)) + Gz * coef.A.col(k);
      Eigen::VectorXd an;
      if (config.lambda_f_alpha == 0.0) {
        an = plain_alpha.solve(c / N);
      } else {
        const Eigen::VectorXd fw =
            config.lambda_f_alpha * w->w_f_alpha.row(k).transpose();
        const Eigen::VectorXd warm_col = coef.A.col(k);
        an = solve_fused_gram(Gz, c, N, fw, band, 1.0, config.subsolver_tol,
                              config.subsolver_tol, config.subsolver_max_iter,
                              nullptr, &warm_col);
      }
      Eigen::MatrixXd da = coef.A.col(k) - an;
      if (da.norm() > 0.0) {
        Eigen::MatrixXd rk = resid.col(k);
        design.add_Z_times(da, rk);
        resid.col(k) = rk;
        coef.A.col(k) = an;
      }
    }

    const double obj = objective();
    if (!std::isfinite(obj))
      throw NumericalError("objective became non-finite at sweep " +
                           std::to_string(sweep));
    const double prev = out.objective_trace.back();
    out.objective_trace.push_back(obj);
    out.sweeps = sweep + 1;
    if (prev - obj < config.outer_tol * std::max(1.0, std::abs(prev))) {
      out.converged = true;
      break;
    }
  }

  out.coef = std::move(coef);
  for (int j = 0; j < p; ++j)
    if (out.coef.B[j].norm() > 0.0) out.active_set.push_back(j);
  out.changepoints_alpha.resize(K);
  for (int k = 0; k < K; ++k)
    out.changepoints_alpha[k] = exact_changepoints(out.coef.A.col(k));
  out.changepoints_beta.assign(p, std::vector<std::vector<int>>(K));
  if (config.lambda_f_beta > 0.0) {
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < K; ++k)
        out.changepoints_beta[j][k] =
            exact_changepoints(out.coef.B[j].col(k));
  }
  return out;
}

PenaltyWeights compute_weights(const CoefficientSet& initial, double gamma_g,
                               double gamma_f, double gamma_s, double eps) {
  if (eps <= 0.0) throw ConfigError("weight stabilizer eps must be > 0");
  const int M = initial.M(), K = initial.K(), p = initial.p();
  PenaltyWeights w;
  w.gamma_g = gamma_g;
  w.gamma_f = gamma_f;
  w.gamma_s = gamma_s;
  w.eps = eps;
  w.w_g.resize(p);
  for (int j = 0; j < p; ++j)
    w.w_g[j] = 1.0 / (std::pow(initial.B[j].norm(), gamma_g) + eps);
  w.w_f_alpha.resize(K, M - 1);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m + 1 < M; ++m)
      w.w_f_alpha(k, m) =
          1.0 /
          (std::pow(std::abs(initial.A(m + 1, k) - initial.A(m, k)), gamma_f) +
           eps);
  w.w_f_beta.assign(p, Eigen::MatrixXd(K, M - 1));
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < K; ++k)
      for (int m = 0; m + 1 < M; ++m)
        w.w_f_beta[j](k, m) =
            1.0 / (std::pow(std::abs(initial.B[j](m + 1, k) -
                                     initial.B[j](m, k)),
                            gamma_s) +
                   eps);
  return w;
}

FitResult fit_ajl(const DesignMatrices& design, const Eigen::MatrixXd& Y,
                  double pilot_lambda_g, double pilot_lambda_f,
                  double final_lambda_g, double final_lambda_f,
                  const AjlOptions& options, const SolverWorkspace* workspace) {
  const double N = static_cast<double>(design.rows());
  const double eps = options.eps > 0.0 ? options.eps : 1.0 / N;

  FitConfig stage1;
  stage1.lambda_g = pilot_lambda_g;
  stage1.lambda_f_alpha = pilot_lambda_f;
  stage1.mode = FitMode::baseline;
  stage1.outer_tol = options.outer_tol;
  stage1.max_sweeps = options.max_sweeps;
  FitResult pilot = fit_penalized(design, Y, stage1, workspace);

  const PenaltyWeights weights = compute_weights(
      pilot.coef, options.gamma_g, options.gamma_f, options.gamma_s, eps);

  FitConfig stage3;
  stage3.lambda_g = final_lambda_g;
  stage3.lambda_f_alpha = final_lambda_f;
  stage3.lambda_f_beta = 0.0;  // screening phase: no slope segmentation
  stage3.weights = weights;
  stage3.mode = FitMode::adaptive_screen;
  stage3.outer_tol = options.outer_tol;
  stage3.max_sweeps = options.max_sweeps;
  stage3.init = &pilot.coef;
  FitResult out = fit_penalized(design, Y, stage3, workspace);
  out.pilot = std::move(pilot.coef);
  return out;
}

FitResult refine(const DesignMatrices& design, const Eigen::MatrixXd& Y,
                 const FitResult& screen_result, double lambda_f_alpha,
                 double lambda_f_beta, const PenaltyWeights& weights,
                 const AjlOptions& options, const SolverWorkspace* workspace) {
  if (screen_result.active_set.empty()) return screen_result;

  FitConfig cfg;
  cfg.lambda_g = 0.0;  // group penalty removed post selection
  cfg.lambda_f_alpha = lambda_f_alpha;
  cfg.lambda_f_beta = lambda_f_beta;
  cfg.weights = weights;
  cfg.mode = FitMode::refine;
  cfg.restrict_active = screen_result.active_set;
  cfg.outer_tol = options.outer_tol;
  cfg.max_sweeps = options.max_sweeps;
  cfg.init = &screen_result.coef;
  FitResult out = fit_penalized(design, Y, cfg, workspace);
  if (cfg.lambda_f_beta == 0.0) {
    // changepoint sets for the restricted unpenalized re-fit
    for (int j : out.active_set)
      for (int k = 0; k < out.coef.K(); ++k)
        out.changepoints_beta[j][k] =
            exact_changepoints(out.coef.B[j].col(k));
  }
  return out;
}

FitResult fit_slasso(const DesignMatrices& design, const Eigen::MatrixXd& Y,
                     const std::vector<double>& lambda_per_outcome,
                     double tol, int max_sweeps) {
  const int M = design.M();
  const int K = static_cast<int>(Y.cols());
  const int p = design.p();
  const double N = static_cast<double>(design.rows());
  const int bw = design.bandwidth();

  std::vector<double> lambdas(lambda_per_outcome);
  if (lambdas.size() == 1) lambdas.assign(static_cast<size_t>(K), lambdas[0]);
  if (static_cast<int>(lambdas.size()) != K)
    throw ConfigError("S-Lasso needs one lambda (or one per outcome)");

  // Column structure of the basis: rows touching basis index m.
  std::vector<std::vector<std::pair<int, double>>> cols(
      static_cast<size_t>(M));
  const auto& Z = design.Z();
  const auto& span = design.span_start();
  for (Eigen::Index r = 0; r < design.rows(); ++r)
    for (int q = 0; q < bw; ++q)
      cols[static_cast<size_t>(span[static_cast<size_t>(r)] + q)]
          .emplace_back(static_cast<int>(r),
                        Z(r, span[static_cast<size_t>(r)] + q));

  const auto& X = design.covariates();
  // Squared column norms of the expanded features x_j * phi_m, over N.
  Eigen::MatrixXd cnorm(p, M);
  for (int j = 0; j < p; ++j)
    for (int m = 0; m < M; ++m) {
      double acc = 0.0;
      for (const auto& [r, v] : cols[static_cast<size_t>(m)])
        acc += X(r, j) * X(r, j) * v * v;
      cnorm(j, m) = acc / N;
    }

  Eigen::MatrixXd Greg = design.gram_Z() / N;
  Greg.diagonal().array() += 1e-10;
  Eigen::LDLT<Eigen::MatrixXd> alpha_solver(Greg);

  FitResult out;
  out.coef = CoefficientSet::zero(M, K, p);
  out.converged = true;

  for (int k = 0; k < K; ++k) {
    const double lambda = lambdas[static_cast<size_t>(k)];
    Eigen::VectorXd resid = Y.col(k);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(M);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, M);

    double prev_obj = 0.5 * resid.squaredNorm() / N;
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      // exact intercept block
      Eigen::VectorXd q = design.Zt_times(resid).col(0) + design.gram_Z() * a;
      Eigen::VectorXd an = alpha_solver.solve(q / N);
      Eigen::MatrixXd da = a - an;
      if (da.norm() > 0.0) {
        Eigen::MatrixXd rmat = resid;
        design.add_Z_times(da, rmat);
        resid = rmat;
        a = an;
      }
      // l1 coordinate sweep over all p*M expanded features
      for (int j = 0; j < p; ++j) {
        for (int m = 0; m < M; ++m) {
          const double c2 = cnorm(j, m);
          if (c2 == 0.0) continue;
          double g = 0.0;
          for (const auto& [r, v] : cols[static_cast<size_t>(m)])
            g += X(r, j) * v * resid[r];
          g /= N;
          const double old = b(j, m);
          const double raw = old * c2 + g;
          double nb = 0.0;
          if (raw > lambda)
            nb = (raw - lambda) / c2;
          else if (raw < -lambda)
            nb = (raw + lambda) / c2;
          if (nb != old) {
            const double d = nb - old;
            for (const auto& [r, v] : cols[static_cast<size_t>(m)])
              resid[r] -= d * X(r, j) * v;
            b(j, m) = nb;
          }
        }
      }
      const double obj =
          0.5 * resid.squaredNorm() / N + lambda * b.cwiseAbs().sum();
      if (prev_obj - obj < tol * std::max(1.0, std::abs(prev_obj))) {
        converged = true;
        prev_obj = obj;
        break;
      }
      prev_obj = obj;
    }
    out.converged = out.converged && converged;
    out.coef.A.col(k) = a;
    for (int j = 0; j < p; ++j) out.coef.B[j].col(k) = b.row(j).transpose();
  }

  for (int j = 0; j < p; ++j)
    if (out.coef.B[j].norm() > 0.0) out.active_set.push_back(j);
  out.changepoints_alpha.resize(K);
  for (int k = 0; k < K; ++k)
    out.changepoints_alpha[k] = exact_changepoints(out.coef.A.col(k));
  out.changepoints_beta.assign(p, std::vector<std::vector<int>>(K));
  out.objective_trace.push_back(0.0);
  out.sweeps = 0;
  return out;
}

namespace {

FitResult fit_oracle(const DesignMatrices& design, const Eigen::MatrixXd& Y,
                     const OracleTruth& truth) {
  const int M = design.M();
  const int K = static_cast<int>(Y.cols());
  const int p = design.p();
  const Eigen::Index N = design.rows();
  const auto& basis = design.basis();

  // Map true changepoint times to the nearest coefficient edges; the
  // intercept is constrained piecewise constant across the implied runs.
  std::vector<int> edges;
  for (double t : truth.changepoint_times) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int m = 0; m < M - 1; ++m) {
      const double d = std::abs(basis.edge_time(m) - t);
      if (d < best_d) {
        best_d = d;
        best = m;
      }
    }
    edges.push_back(best);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::vector<int> run_of(static_cast<size_t>(M));
  int runs = 0;
  for (int m = 0; m < M; ++m) {
    if (m > 0 &&
        std::find(edges.begin(), edges.end(), m - 1) != edges.end())
      ++runs;
    run_of[static_cast<size_t>(m)] = runs;
  }
  ++runs;

  const int s = static_cast<int>(truth.active_set.size());
  const int ncols = runs + s * M;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(N, ncols);
  const auto& Z = design.Z();
  const auto& span = design.span_start();
  const auto& X = design.covariates();
  for (Eigen::Index r = 0; r < N; ++r) {
    const int sp = span[static_cast<size_t>(r)];
    for (int q = 0; q < design.bandwidth(); ++q)
      W(r, run_of[static_cast<size_t>(sp + q)]) += Z(r, sp + q);
    for (int a = 0; a < s; ++a) {
      const double x = X(r, truth.active_set[static_cast<size_t>(a)]);
      if (x == 0.0) continue;
      for (int q = 0; q < design.bandwidth(); ++q)
        W(r, runs + a * M + sp + q) = x * Z(r, sp + q);
    }
  }
  Eigen::MatrixXd H = W.transpose() * W;
  H.diagonal().array() += 1e-10 * static_cast<double>(N);
  Eigen::MatrixXd sol = H.ldlt().solve(W.transpose() * Y);

  FitResult out;
  out.coef = CoefficientSet::zero(M, K, p);
  for (int m = 0; m < M; ++m)
    out.coef.A.row(m) = sol.row(run_of[static_cast<size_t>(m)]);
  for (int a = 0; a < s; ++a)
    out.coef.B[static_cast<size_t>(truth.active_set[static_cast<size_t>(a)])] =
        sol.middleRows(runs + a * M, M);
  out.active_set = truth.active_set;
  std::sort(out.active_set.begin(), out.active_set.end());
  out.changepoints_alpha.resize(K);
  for (int k = 0; k < K; ++k)
    out.changepoints_alpha[k] = exact_changepoints(out.coef.A.col(k));
  out.changepoints_beta.assign(p, std::vector<std::vector<int>>(K));
  out.converged = true;
  out.objective_trace.push_back(0.0);
  return out;
}

}  // namespace

FitResult fit_competitor(Competitor method, const DesignMatrices& design,
                         const Eigen::MatrixXd& Y,
                         const CompetitorConfig& config,
                         const OracleTruth* truth,
                         const SolverWorkspace* workspace) {
  switch (method) {
    case Competitor::JLL: {
      FitConfig cfg;
      cfg.lambda_g = config.lambda_g;
      cfg.lambda_f_alpha = config.lambda_f_alpha;
      cfg.mode = FitMode::baseline;
      cfg.outer_tol = config.ajl.outer_tol;
      cfg.max_sweeps = config.ajl.max_sweeps;
      return fit_penalized(design, Y, cfg, workspace);
    }
    case Competitor::SAJL: {
      const int K = static_cast<int>(Y.cols());
      FitResult out;
      out.coef = CoefficientSet::zero(design.M(), K, design.p());
      out.changepoints_alpha.resize(K);
      out.changepoints_beta.assign(design.p(),
                                   std::vector<std::vector<int>>(K));
      out.converged = true;
      std::vector<char> active(static_cast<size_t>(design.p()), 0);
      for (int k = 0; k < K; ++k) {
        FitResult rk = fit_ajl(design, Y.col(k), config.pilot_lambda_g,
                               config.pilot_lambda_f, config.lambda_g,
                               config.lambda_f_alpha, config.ajl, workspace);
        out.coef.A.col(k) = rk.coef.A.col(0);
        for (int j = 0; j < design.p(); ++j)
          out.coef.B[j].col(k) = rk.coef.B[j].col(0);
        for (int j : rk.active_set) active[static_cast<size_t>(j)] = 1;
        out.changepoints_alpha[k] = rk.changepoints_alpha[0];
        out.converged = out.converged && rk.converged;
      }
      for (int j = 0; j < design.p(); ++j)
        if (active[static_cast<size_t>(j)]) out.active_set.push_back(j);
      out.objective_trace.push_back(0.0);
      return out;
    }
    case Competitor::SLasso:
      return fit_slasso(design, Y, config.slasso_lambda);
    case Competitor::Oracle:
      if (!truth)
        throw ConfigError("Oracle competitor requires ground truth");
      return fit_oracle(design, Y, *truth);
  }
  throw ConfigError("unknown competitor");
}

KktReport kkt_diagnostics(const FitResult& result,
                          const DesignMatrices& design,
                          const Eigen::MatrixXd& Y, const FitConfig& config) {
  const double N = static_cast<double>(design.rows());
  const int K = static_cast<int>(Y.cols());
  PenaltyWeights uniform_w;
  const PenaltyWeights* w;
  if (config.weights) {
    w = &*config.weights;
  } else {
    uniform_w = PenaltyWeights::uniform(design.M(), K, design.p());
    w = &uniform_w;
  }

  const Eigen::MatrixXd resid = Y - design.predict(result.coef);
  KktReport rep;

  std::vector<char> allowed(static_cast<size_t>(design.p()), 1);
  if (!config.restrict_active.empty()) {
    allowed.assign(static_cast<size_t>(design.p()), 0);
    for (int j : config.restrict_active)
      allowed.at(static_cast<size_t>(j)) = 1;
  }

  for (int j = 0; j < design.p(); ++j) {
    if (!allowed[static_cast<size_t>(j)]) continue;
    const Eigen::MatrixXd grad = -design.Xjt_times(j, resid) / N;
    const double lam = config.lambda_g * w->w_g[j];
    const double bnorm = result.coef.B[j].norm();
    if (bnorm == 0.0) {
      rep.max_inactive_violation = std::max(
          rep.max_inactive_violation, std::max(0.0, grad.norm() - lam));
    } else if (config.lambda_f_beta == 0.0) {
      rep.max_stationarity =
          std::max(rep.max_stationarity,
                   (grad + lam / bnorm * result.coef.B[j]).norm());
    }
  }

  // Fused intercept duals via cumulative stationarity sums.
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd g =
        -design.Zt_times(resid.col(k)).col(0) / N;
    double eta = 0.0;
    for (int m = 0; m < design.M() - 1; ++m) {
      eta += g[m];
      const double lam = config.lambda_f_alpha * w->w_f_alpha(k, m);
      const double d = result.coef.A(m + 1, k) - result.coef.A(m, k);
      double v;
      if (d != 0.0)
        v = std::abs(eta - lam * (d > 0.0 ? 1.0 : -1.0));
      else
        v = std::max(0.0, std::abs(eta) - lam);
      rep.max_fused_violation = std::max(rep.max_fused_violation, v);
    }
  }

  rep.max_violation =
      std::max({rep.max_inactive_violation, rep.max_stationarity,
                rep.max_fused_violation});
  return rep;
}

double penalized_objective(const DesignMatrices& design,
                           const Eigen::MatrixXd& Y, const FitConfig& config,
                           const CoefficientSet& coef) {
  const double N = static_cast<double>(design.rows());
  PenaltyWeights uniform_w;
  const PenaltyWeights* w;
  if (config.weights) {
    w = &*config.weights;
  } else {
    uniform_w =
        PenaltyWeights::uniform(coef.M(), coef.K(), coef.p());
    w = &uniform_w;
  }
  const Eigen::MatrixXd resid = Y - design.predict(coef);
  return 0.5 * resid.squaredNorm() / N + penalty_value(config, *w, coef);
}

}  // namespace ajl
