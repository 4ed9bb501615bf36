#include "ajl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "ajl/errors.hpp"
#include "ajl/inference.hpp"

namespace ajl {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int count_increases(const std::vector<double>& trace) {
  int bad = 0;
  for (size_t i = 1; i < trace.size(); ++i)
    if (trace[i] > trace[i - 1] + 1e-12) ++bad;
  return bad;
}

bool contains_all(const std::vector<int>& superset,
                  const std::vector<int>& subset) {
  for (int j : subset)
    if (std::find(superset.begin(), superset.end(), j) == superset.end())
      return false;
  return true;
}

Eigen::VectorXd dense_grid(int G) {
  Eigen::VectorXd grid(G);
  for (int g = 0; g < G; ++g) grid[g] = g / static_cast<double>(G - 1);
  return grid;
}

}  // namespace

void StudyConfig::validate() const {
  scenario.validate();
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (cv_folds < 2) throw ConfigError("cv_folds must be >= 2");
  if (grid_g < 1 || grid_f < 1 || slasso_grid < 1)
    throw ConfigError("grid sizes must be >= 1");
  for (const auto& m : methods)
    if (m != "AJL" && m != "JLL" && m != "S-AJL" && m != "S-Lasso" &&
        m != "Oracle")
      throw ConfigError("unknown method: " + m);
  for (int M : coverage_M)
    if (M < basis_degree + 1) throw ConfigError("coverage M too small");
}

std::vector<double> tune_slasso(const LongitudinalDataset& data,
                                const SplineBasis& basis, int folds,
                                uint64_t seed, int n_lambda) {
  const DesignMatrices full(data, basis);
  const int K = data.K;
  const double N = static_cast<double>(full.rows());
  Eigen::VectorXd lam_max = Eigen::VectorXd::Zero(K);
  const Eigen::MatrixXd Y = full.Y();
  for (int j = 0; j < full.p(); ++j) {
    const Eigen::MatrixXd corr = full.Xjt_times(j, Y).cwiseAbs() / N;
    for (int k = 0; k < K; ++k)
      lam_max[k] = std::max(lam_max[k], corr.col(k).maxCoeff());
  }
  Eigen::VectorXd ratios(n_lambda);
  for (int l = 0; l < n_lambda; ++l)
    ratios[l] = n_lambda == 1
                    ? 1.0
                    : std::exp(std::log(1e-3) * l / (n_lambda - 1));

  Eigen::MatrixXd err = Eigen::MatrixXd::Zero(K, n_lambda);
  const auto splits = subject_kfold(data.num_subjects(), folds, seed);
  for (const auto& split : splits) {
    const LongitudinalDataset train = data.subset(split.train_ids);
    const LongitudinalDataset valid = data.subset(split.valid_ids);
    const DesignMatrices train_design(train, basis);
    const DesignMatrices valid_design(valid, basis);
    for (int l = 0; l < n_lambda; ++l) {
      std::vector<double> lambdas(static_cast<size_t>(K));
      for (int k = 0; k < K; ++k)
        lambdas[static_cast<size_t>(k)] = lam_max[k] * ratios[l];
      const FitResult fit = fit_slasso(train_design, train_design.Y(), lambdas);
      const Eigen::MatrixXd resid =
          valid_design.predict(fit.coef) - valid_design.Y();
      for (int k = 0; k < K; ++k)
        err(k, l) += resid.col(k).squaredNorm() /
                     static_cast<double>(valid_design.rows());
    }
  }
  std::vector<double> chosen(static_cast<size_t>(K));
  for (int k = 0; k < K; ++k) {
    int best = 0;
    for (int l = 1; l < n_lambda; ++l)
      if (err(k, l) < err(k, best)) best = l;  // ties keep larger lambda
    chosen[static_cast<size_t>(k)] = lam_max[k] * ratios[best];
  }
  return chosen;
}

ReplicationRecord run_replication(const StudyConfig& config, int rep) {
  const auto t_start = std::chrono::steady_clock::now();
  ReplicationRecord rec;
  rec.rep = rep;

  ScenarioConfig scen = config.scenario;
  scen.seed = config.scenario.seed + static_cast<uint64_t>(rep);
  const SimulatedData sim = generate(scen);
  const uint64_t cv_seed = scen.seed;

  if (!config.coverage_M.empty()) {
    const Eigen::VectorXd grid = dense_grid(200);
    for (int M : config.coverage_M) {
      const SplineBasis basis(M, config.basis_degree, 0.0, 1.0);
      const DesignMatrices design(sim.train, basis);
      const SolverWorkspace ws(design);
      const TunedPenalties tuned =
          tune_ajl(sim.train, basis, config.cv_folds, cv_seed, config.grid_g,
                   config.grid_f);
      const FitResult screen =
          fit_ajl(design, design.Y(), tuned.pilot_lambda_g,
                  tuned.pilot_lambda_f, tuned.lambda_g, tuned.lambda_f, {},
                  &ws);
      const PenaltyWeights weights = compute_weights(
          *screen.pilot, 1.5, 1.5, 1.5,
          1.0 / static_cast<double>(design.rows()));
      const FitResult refined = refine(design, design.Y(), screen,
                                       tuned.lambda_f, tuned.lambda_f,
                                       weights, {}, &ws);
      double cov = 0.0;
      for (int k = 0; k < scen.K; ++k) {
        const BandEstimate band =
            pointwise_band(refined, design, design.Y(), BandTarget::alpha, 0,
                           k, grid);
        Eigen::VectorXd truth_curve(grid.size());
        for (Eigen::Index g = 0; g < grid.size(); ++g)
          truth_curve[g] = sim.truth.alpha(k, grid[g]);
        cov += empirical_coverage(band, truth_curve);
      }
      rec.coverage[M] = cov / scen.K;
    }
    rec.total_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t_start)
                            .count();
    return rec;
  }

  const SplineBasis basis(scen.M, config.basis_degree, 0.0, 1.0);
  const DesignMatrices design(sim.train, basis);
  const DesignMatrices test_design(sim.test, basis);
  const SolverWorkspace ws(design);

  const bool needs_joint_tuning =
      std::find(config.methods.begin(), config.methods.end(), "AJL") !=
          config.methods.end() ||
      std::find(config.methods.begin(), config.methods.end(), "JLL") !=
          config.methods.end() ||
      std::find(config.methods.begin(), config.methods.end(), "S-AJL") !=
          config.methods.end();
  TunedPenalties tuned;
  if (needs_joint_tuning)
    tuned = tune_ajl(sim.train, basis, config.cv_folds, cv_seed,
                     config.grid_g, config.grid_f);

  for (const auto& method : config.methods) {
    if (method == "AJL") {
      const FitResult screen =
          fit_ajl(design, design.Y(), tuned.pilot_lambda_g,
                  tuned.pilot_lambda_f, tuned.lambda_g, tuned.lambda_f, {},
                  &ws);
      rec.monotone_violations += count_increases(screen.objective_trace);
      rec.screen_superset =
          contains_all(screen.active_set, sim.truth.active_set);

      const PenaltyWeights weights = compute_weights(
          *screen.pilot, 1.5, 1.5, 1.5,
          1.0 / static_cast<double>(design.rows()));
      std::vector<double> noise_w, signal_w;
      for (int j = 0; j < scen.p; ++j)
        (j < scen.s ? signal_w : noise_w).push_back(weights.w_g[j]);
      rec.weight_ratio = median(noise_w) / median(signal_w);

      const FitResult refined = refine(design, design.Y(), screen,
                                       tuned.lambda_f, tuned.lambda_f,
                                       weights, {}, &ws);
      rec.monotone_violations += count_increases(refined.objective_trace);
      rec.metrics[method] = evaluate(refined, basis, sim.truth, test_design,
                                     test_design.Y());
    } else if (method == "JLL") {
      FitConfig cfg;
      cfg.lambda_g = tuned.pilot_lambda_g;
      cfg.lambda_f_alpha = tuned.pilot_lambda_f;
      const FitResult fit = fit_penalized(design, design.Y(), cfg, &ws);
      rec.monotone_violations += count_increases(fit.objective_trace);
      rec.metrics[method] =
          evaluate(fit, basis, sim.truth, test_design, test_design.Y());
    } else if (method == "S-AJL") {
      CompetitorConfig cc;
      cc.lambda_g = tuned.lambda_g;
      cc.lambda_f_alpha = tuned.lambda_f;
      cc.pilot_lambda_g = tuned.pilot_lambda_g;
      cc.pilot_lambda_f = tuned.pilot_lambda_f;
      const FitResult fit =
          fit_competitor(Competitor::SAJL, design, design.Y(), cc, nullptr,
                         &ws);
      rec.metrics[method] =
          evaluate(fit, basis, sim.truth, test_design, test_design.Y());
    } else if (method == "S-Lasso") {
      const std::vector<double> lambdas =
          tune_slasso(sim.train, basis, config.cv_folds, cv_seed,
                      config.slasso_grid);
      const FitResult fit = fit_slasso(design, design.Y(), lambdas);
      rec.metrics[method] =
          evaluate(fit, basis, sim.truth, test_design, test_design.Y());
    } else if (method == "Oracle") {
      OracleTruth truth;
      truth.active_set = sim.truth.active_set;
      truth.changepoint_times = sim.truth.changepoint_times;
      const FitResult fit = fit_competitor(
          Competitor::Oracle, design, design.Y(), CompetitorConfig{}, &truth);
      rec.metrics[method] =
          evaluate(fit, basis, sim.truth, test_design, test_design.Y());
    }
  }
  rec.total_seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t_start)
                          .count();
  return rec;
}

StudyResult run_study(const StudyConfig& config) {
  config.validate();
  StudyResult out;
  out.config = config;
  const int R = config.replications;
  out.records.resize(static_cast<size_t>(R));
  const int workers = std::max(1, std::min(config.workers, R));

  auto worker_fn = [&](int w) {
    for (int rep = w; rep < R; rep += workers) {
      try {
        out.records[static_cast<size_t>(rep)] = run_replication(config, rep);
      } catch (const std::exception& e) {
        ReplicationRecord rec;
        rec.rep = rep;
        rec.failed = true;
        rec.error = e.what();
        out.records[static_cast<size_t>(rep)] = rec;
      }
    }
  };
  if (workers == 1) {
    worker_fn(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker_fn, w);
    for (auto& t : threads) t.join();
  }
  return out;
}

std::map<std::string, MetricsReport> summarize(const StudyResult& result) {
  std::map<std::string, MetricsReport> out;
  for (const auto& method : result.config.methods) {
    std::vector<MetricsReport> reports;
    for (const auto& rec : result.records)
      if (!rec.failed && rec.metrics.count(method))
        reports.push_back(rec.metrics.at(method));
    if (!reports.empty()) out[method] = aggregate(reports);
  }
  return out;
}

namespace {

void metrics_row(std::ostringstream& os, const MetricsReport& m) {
  os << m.pe << "," << m.ise_beta << "," << m.ise_alpha << "," << m.tp << ","
     << m.fp << "," << m.recall << "," << m.precision << "," << m.specificity
     << "," << m.f1 << "," << m.cp_err;
}

}  // namespace

std::string summary_csv(const StudyResult& result) {
  std::ostringstream os;
  os.precision(10);
  os << "scenario,method,PE,ISE_beta,ISE_alpha,TP,FP,Recall,Precision,Spec,"
        "F1,CP_Err\n";
  const auto summary = summarize(result);
  for (const auto& method : result.config.methods) {
    const auto it = summary.find(method);
    if (it == summary.end()) continue;
    os << result.config.scenario.name << "," << method << ",";
    metrics_row(os, it->second);
    os << "\n";
  }
  return os.str();
}

std::string raw_csv(const StudyResult& result) {
  std::ostringstream os;
  os.precision(10);
  os << "scenario,method,rep,PE,ISE_beta,ISE_alpha,TP,FP,Recall,Precision,"
        "Spec,F1,CP_Err\n";
  for (const auto& rec : result.records) {
    if (rec.failed) continue;
    for (const auto& method : result.config.methods) {
      const auto it = rec.metrics.find(method);
      if (it == rec.metrics.end()) continue;
      os << result.config.scenario.name << "," << method << "," << rec.rep
         << ",";
      metrics_row(os, it->second);
      os << "\n";
    }
  }
  return os.str();
}

std::string coverage_csv(const StudyResult& result) {
  std::ostringstream os;
  os.precision(10);
  os << "scenario,M,coverage_mean\n";
  for (int M : result.config.coverage_M) {
    double acc = 0.0;
    int n = 0;
    for (const auto& rec : result.records)
      if (!rec.failed && rec.coverage.count(M)) {
        acc += rec.coverage.at(M);
        ++n;
      }
    if (n > 0)
      os << result.config.scenario.name << "," << M << "," << acc / n
         << "\n";
  }
  return os.str();
}

std::string manifest_json(const StudyResult& result, bool include_timing) {
  const StudyConfig& c = result.config;
  std::ostringstream os;
  os.precision(17);
  os << "{\"version\":\"ajl-0.1.0\",\"scenario\":\"" << c.scenario.name
     << "\",\"base_seed\":" << c.scenario.seed
     << ",\"replications\":" << c.replications << ",\"workers\":" << c.workers
     << ",\"n\":" << c.scenario.n << ",\"p\":" << c.scenario.p
     << ",\"T\":" << c.scenario.T << ",\"K\":" << c.scenario.K
     << ",\"M\":" << c.scenario.M << ",\"s\":" << c.scenario.s
     << ",\"rho_x\":" << c.scenario.rho_x << ",\"rho_t\":" << c.scenario.rho_t
     << ",\"rho_eps\":" << c.scenario.rho_eps
     << ",\"cv_folds\":" << c.cv_folds << ",\"grid_g\":" << c.grid_g
     << ",\"grid_f\":" << c.grid_f << ",\"methods\":[";
  for (size_t i = 0; i < c.methods.size(); ++i)
    os << (i ? "," : "") << "\"" << c.methods[i] << "\"";
  os << "],\"failures\":[";
  bool first = true;
  for (const auto& rec : result.records)
    if (rec.failed) {
      os << (first ? "" : ",") << "{\"rep\":" << rec.rep << ",\"error\":\""
         << rec.error << "\"}";
      first = false;
    }
  os << "]";
  if (include_timing) {
    double total = 0.0;
    for (const auto& rec : result.records) total += rec.total_seconds;
    os << ",\"total_fit_seconds\":" << total;
  }
  os << "}";
  return os.str();
}

}  // namespace ajl
