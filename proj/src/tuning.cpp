#include "ajl/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ajl/errors.hpp"
#include "ajl/inference.hpp"
#include "ajl/metrics.hpp"
#include "ajl/simgen.hpp"

namespace ajl {

TuningGrid TuningGrid::log_spaced(double lambda_g_max, double lambda_f_max,
                                  int n_g, int n_f, double min_ratio) {
  if (lambda_g_max <= 0.0 || lambda_f_max <= 0.0 || min_ratio <= 0.0 ||
      min_ratio >= 1.0 || n_g < 1 || n_f < 1)
    throw ConfigError("invalid tuning grid parameters");
  TuningGrid grid;
  auto fill = [&](Eigen::VectorXd& v, double vmax, int n) {
    v.resize(n);
    if (n == 1) {
      v[0] = vmax;
      return;
    }
    const double step = std::log(min_ratio) / (n - 1);
    for (int i = 0; i < n; ++i) v[i] = vmax * std::exp(step * i);
  };
  fill(grid.lambda_g_values, lambda_g_max, n_g);
  fill(grid.lambda_f_values, lambda_f_max, n_f);
  return grid;
}

TuningGrid TuningGrid::coarse() const {
  TuningGrid out;
  auto thin = [](const Eigen::VectorXd& v) {
    Eigen::VectorXd o((v.size() + 1) / 2);
    for (Eigen::Index i = 0; i < o.size(); ++i) o[i] = v[2 * i];
    return o;
  };
  out.lambda_g_values = thin(lambda_g_values);
  out.lambda_f_values = thin(lambda_f_values);
  return out;
}

void TuningGrid::validate() const {
  auto check = [](const Eigen::VectorXd& v) {
    if (v.size() == 0) throw ConfigError("empty tuning grid axis");
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0)) throw ConfigError("grid values must be positive");
      if (i > 0 && v[i] >= v[i - 1])
        throw ConfigError("grid values must be sorted descending");
    }
  };
  check(lambda_g_values);
  check(lambda_f_values);
}

double lambda_max_group(const DesignMatrices& design,
                        const Eigen::MatrixXd& Y) {
  const double N = static_cast<double>(design.rows());
  double best = 0.0;
  for (int j = 0; j < design.p(); ++j)
    best = std::max(best, design.Xjt_times(j, Y).norm() / N);
  return best;
}

double lambda_max_fused(const DesignMatrices& design,
                        const Eigen::MatrixXd& Y) {
  const double N = static_cast<double>(design.rows());
  const Eigen::MatrixXd G = design.gram_Z();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(design.M());
  const double denom = ones.dot(G * ones);
  const Eigen::MatrixXd ZtY = design.Zt_times(Y);
  double best = 0.0;
  for (int k = 0; k < static_cast<int>(Y.cols()); ++k) {
    const double c = ones.dot(ZtY.col(k)) / std::max(denom, 1e-300);
    const Eigen::VectorXd grad = (G * (c * ones) - ZtY.col(k)) / N;
    double eta = 0.0;
    for (int m = 0; m + 1 < design.M(); ++m) {
      eta += grad[m];
      best = std::max(best, std::abs(eta));
    }
  }
  return best;
}

std::vector<FoldSplit> subject_kfold(int n_subjects, int folds,
                                     uint64_t seed) {
  if (folds < 2) throw ConfigError("need at least 2 folds");
  if (n_subjects < folds) throw ConfigError("fewer subjects than folds");
  std::vector<int> order(static_cast<size_t>(n_subjects));
  for (int i = 0; i < n_subjects; ++i) order[static_cast<size_t>(i)] = i;
  Rng rng = Rng::stream(seed, 0, /*tag=*/101);
  for (int i = n_subjects - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() %
                                   static_cast<uint64_t>(i + 1));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  std::vector<FoldSplit> splits(static_cast<size_t>(folds));
  for (int i = 0; i < n_subjects; ++i)
    splits[static_cast<size_t>(i % folds)].valid_ids.push_back(
        order[static_cast<size_t>(i)]);
  for (auto& split : splits) {
    std::sort(split.valid_ids.begin(), split.valid_ids.end());
    std::vector<char> in_valid(static_cast<size_t>(n_subjects), 0);
    for (int id : split.valid_ids) in_valid[static_cast<size_t>(id)] = 1;
    for (int i = 0; i < n_subjects; ++i)
      if (!in_valid[static_cast<size_t>(i)]) split.train_ids.push_back(i);
  }
  return splits;
}

CvResult cross_validate(const LongitudinalDataset& data,
                        const SplineBasis& basis, const TuningGrid& grid,
                        CvPipeline pipeline, int folds, uint64_t seed,
                        double pilot_lambda_g, double pilot_lambda_f,
                        const AjlOptions& options) {
  grid.validate();
  const auto splits = subject_kfold(data.num_subjects(), folds, seed);
  const int n_g = static_cast<int>(grid.lambda_g_values.size());
  const int n_f = static_cast<int>(grid.lambda_f_values.size());
  const double inf = std::numeric_limits<double>::infinity();

  Eigen::MatrixXd surface = Eigen::MatrixXd::Zero(n_g, n_f);
  Eigen::MatrixXd failures = Eigen::MatrixXd::Zero(n_g, n_f);

  for (const auto& split : splits) {
    const LongitudinalDataset train = data.subset(split.train_ids);
    const LongitudinalDataset valid = data.subset(split.valid_ids);
    const DesignMatrices train_design(train, basis);
    const DesignMatrices valid_design(valid, basis);
    const SolverWorkspace ws(train_design);
    const double cells =
        static_cast<double>(valid_design.rows() * valid.K);

    PenaltyWeights weights;
    CoefficientSet warm;
    bool have_warm = false;
    if (pipeline == CvPipeline::ajl) {
      FitConfig pilot_cfg;
      pilot_cfg.lambda_g = pilot_lambda_g;
      pilot_cfg.lambda_f_alpha = pilot_lambda_f;
      pilot_cfg.outer_tol = options.outer_tol;
      pilot_cfg.max_sweeps = options.max_sweeps;
      const FitResult pilot =
          fit_penalized(train_design, train_design.Y(), pilot_cfg, &ws);
      const double eps = options.eps > 0.0
                             ? options.eps
                             : 1.0 / static_cast<double>(train_design.rows());
      weights = compute_weights(pilot.coef, options.gamma_g, options.gamma_f,
                                options.gamma_s, eps);
      warm = pilot.coef;
      have_warm = true;
    }

    for (int i = 0; i < n_g; ++i) {
      for (int jf = 0; jf < n_f; ++jf) {
        FitConfig cfg;
        cfg.lambda_g = grid.lambda_g_values[i];
        cfg.lambda_f_alpha = grid.lambda_f_values[jf];
        cfg.outer_tol = options.outer_tol;
        cfg.max_sweeps = options.max_sweeps;
        if (pipeline == CvPipeline::ajl) {
          cfg.weights = weights;
          cfg.mode = FitMode::adaptive_screen;
        }
        if (have_warm) cfg.init = &warm;
        try {
          const FitResult fit =
              fit_penalized(train_design, train_design.Y(), cfg, &ws);
          const double pe =
              (valid_design.predict(fit.coef) - valid_design.Y())
                  .squaredNorm() /
              cells;
          surface(i, jf) += pe;
          warm = fit.coef;
          have_warm = true;
        } catch (const std::exception&) {
          failures(i, jf) = 1.0;
        }
      }
    }
  }

  CvResult out;
  out.grid = grid;
  out.surface = surface / static_cast<double>(folds);
  for (int i = 0; i < n_g; ++i)
    for (int jf = 0; jf < n_f; ++jf)
      if (failures(i, jf) > 0.0) out.surface(i, jf) = inf;

  double best = inf;
  int bi = 0, bj = 0;
  bool found = false;
  // descending order, strict improvement: ties keep the larger penalties
  for (int i = 0; i < n_g; ++i)
    for (int jf = 0; jf < n_f; ++jf)
      if (out.surface(i, jf) < best) {
        best = out.surface(i, jf);
        bi = i;
        bj = jf;
        found = true;
      }
  if (!found) throw NumericalError("every cross-validation fit failed");
  out.best_lambda_g = grid.lambda_g_values[bi];
  out.best_lambda_f = grid.lambda_f_values[bj];
  return out;
}

TunedPenalties tune_ajl(const LongitudinalDataset& data,
                        const SplineBasis& basis, int folds, uint64_t seed,
                        int n_g, int n_f, const AjlOptions& options) {
  const DesignMatrices full(data, basis);
  const double lg_max = lambda_max_group(full, full.Y());
  const double lf_max = lambda_max_fused(full, full.Y());
  const TuningGrid fine = TuningGrid::log_spaced(
      std::max(lg_max, 1e-8), std::max(lf_max, 1e-8), n_g, n_f);

  TunedPenalties out;
  out.pilot_cv = cross_validate(data, basis, fine.coarse(),
                                CvPipeline::baseline, folds, seed, 0.0, 0.0,
                                options);
  out.pilot_lambda_g = out.pilot_cv.best_lambda_g;
  out.pilot_lambda_f = out.pilot_cv.best_lambda_f;
  out.final_cv =
      cross_validate(data, basis, fine, CvPipeline::ajl, folds, seed,
                     out.pilot_lambda_g, out.pilot_lambda_f, options);
  out.lambda_g = out.final_cv.best_lambda_g;
  out.lambda_f = out.final_cv.best_lambda_f;
  return out;
}

double hbic(const FitResult& result, const DesignMatrices& design,
            const Eigen::MatrixXd& Y) {
  const double cells = static_cast<double>(Y.rows() * Y.cols());
  const double rss = (Y - design.predict(result.coef)).squaredNorm();
  const double df = static_cast<double>(model_df(result));
  const double pmk = static_cast<double>(design.p()) * design.M() *
                     static_cast<double>(Y.cols());
  return std::log(std::max(rss, 1e-300) / cells) +
         df * std::log(cells) * std::log(std::log(std::max(pmk, 3.0))) /
             cells;
}

}  // namespace ajl
