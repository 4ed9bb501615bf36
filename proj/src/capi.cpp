#include "ajl/ajl.h"

#include <cstring>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ajl/errors.hpp"
#include "ajl/inference.hpp"
#include "ajl/io.hpp"
#include "ajl/metrics.hpp"
#include "ajl/pipeline.hpp"
#include "ajl/simgen.hpp"
#include "ajl/solver.hpp"
#include "ajl/tuning.hpp"

using nlohmann::json;

struct ajl_dataset {
  ajl::LongitudinalDataset data;
};

struct ajl_fit {
  ajl::LongitudinalDataset data;
  ajl::SplineBasis basis;
  ajl::FitResult result;
};

namespace {

thread_local std::string g_last_error;

int record_error(const std::exception& e) {
  g_last_error = e.what();
  if (dynamic_cast<const ajl::ConfigError*>(&e)) return AJL_ERR_CONFIG;
  if (dynamic_cast<const ajl::DataError*>(&e) ||
      dynamic_cast<const ajl::DomainError*>(&e) ||
      dynamic_cast<const ajl::StructuralError*>(&e))
    return AJL_ERR_DATA;
  if (dynamic_cast<const ajl::NumericalError*>(&e) ||
      dynamic_cast<const ajl::InferenceError*>(&e))
    return AJL_ERR_NUMERIC;
  if (dynamic_cast<const json::exception*>(&e)) return AJL_ERR_CONFIG;
  return AJL_ERR_INTERNAL;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_config(const char* text) {
  if (!text || !*text) return json::object();
  return json::parse(text);
}

ajl::ScenarioConfig scenario_from_json(const json& j) {
  ajl::ScenarioConfig cfg =
      j.contains("preset")
          ? ajl::ScenarioConfig::preset(j.at("preset").get<std::string>())
          : ajl::ScenarioConfig{};
  if (j.contains("scenario"))
    cfg = ajl::ScenarioConfig::preset(j.at("scenario").get<std::string>());
  cfg.n = j.value("n", cfg.n);
  cfg.p = j.value("p", cfg.p);
  cfg.T = j.value("T", cfg.T);
  cfg.K = j.value("K", cfg.K);
  cfg.M = j.value("M", cfg.M);
  cfg.s = j.value("s", cfg.s);
  cfg.rho_x = j.value("rho_x", cfg.rho_x);
  cfg.rho_t = j.value("rho_t", cfg.rho_t);
  cfg.rho_eps = j.value("rho_eps", cfg.rho_eps);
  cfg.sigma = j.value("sigma", cfg.sigma);
  cfg.contam_pi = j.value("pi", cfg.contam_pi);
  cfg.contam_kappa = j.value("kappa", cfg.contam_kappa);
  cfg.n_test = j.value("n_test", cfg.n_test);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("errors")) {
    const std::string kind = j.at("errors").get<std::string>();
    if (kind == "gaussian")
      cfg.error_kind = ajl::ErrorKind::gaussian;
    else if (kind == "t3")
      cfg.error_kind = ajl::ErrorKind::student_t3;
    else
      throw ajl::ConfigError("unknown error kind: " + kind);
  }
  cfg.validate();
  return cfg;
}

}  // namespace

extern "C" {

const char* ajl_last_error_message(void) { return g_last_error.c_str(); }

void ajl_string_free(char* s) { delete[] s; }

ajl_dataset* ajl_dataset_parse_csv(const char* csv_text, int normalize_time,
                                   int* error) {
  try {
    if (!csv_text) throw ajl::DataError("null CSV input");
    auto* out = new ajl_dataset{
        ajl::dataset_from_csv_string(csv_text, normalize_time != 0)};
    if (error) *error = AJL_OK;
    return out;
  } catch (const std::exception& e) {
    if (error) *error = record_error(e);
    return nullptr;
  }
}

int ajl_dataset_write_csv(const ajl_dataset* data, char** out_csv) {
  try {
    if (!data || !out_csv) throw ajl::ConfigError("null argument");
    *out_csv = dup_string(ajl::dataset_to_csv(data->data));
    return AJL_OK;
  } catch (const std::exception& e) {
    return record_error(e);
  }
}

int ajl_dataset_dims(const ajl_dataset* data, int* n_subjects, int* p,
                     int* K) {
  if (!data) {
    g_last_error = "null dataset";
    return AJL_ERR_CONFIG;
  }
  if (n_subjects) *n_subjects = data->data.num_subjects();
  if (p) *p = data->data.p;
  if (K) *K = data->data.K;
  return AJL_OK;
}

void ajl_dataset_free(ajl_dataset* data) { delete data; }

ajl_dataset* ajl_simulate(const char* scenario_json, int which,
                          char** out_truth_json, int* error) {
  try {
    const json j = parse_config(scenario_json);
    const ajl::ScenarioConfig cfg = scenario_from_json(j);
    ajl::SimulatedData sim = ajl::generate(cfg);
    if (out_truth_json)
      *out_truth_json = dup_string(ajl::truth_to_json(sim.truth, cfg));
    auto* out = new ajl_dataset{which == 1 ? std::move(sim.test)
                                           : std::move(sim.train)};
    if (error) *error = AJL_OK;
    return out;
  } catch (const std::exception& e) {
    if (error) *error = record_error(e);
    return nullptr;
  }
}

ajl_fit* ajl_fit_run(const ajl_dataset* data, const char* fit_json,
                     int* error) {
  try {
    if (!data) throw ajl::ConfigError("null dataset");
    const json j = parse_config(fit_json);
    const int M = j.value("M", 15);
    const int degree = j.value("degree", 3);
    const std::string pipeline = j.value("pipeline", std::string("ajl"));
    const ajl::LongitudinalDataset& ds = data->data;
    ajl::SplineBasis basis(M, degree, ds.t_lo, ds.t_hi);
    ajl::DesignMatrices design(ds, basis);
    ajl::SolverWorkspace ws(design);

    ajl::FitResult result;
    if (pipeline == "penalized") {
      ajl::FitConfig cfg;
      cfg.lambda_g = j.value("lambda_g", 0.0);
      cfg.lambda_f_alpha = j.value("lambda_f", 0.0);
      cfg.lambda_f_beta = j.value("lambda_f_beta", 0.0);
      result = ajl::fit_penalized(design, design.Y(), cfg, &ws);
    } else if (pipeline == "ajl") {
      double pilot_g = j.value("pilot_lambda_g", 0.0);
      double pilot_f = j.value("pilot_lambda_f", 0.0);
      double lam_g = j.value("lambda_g", 0.0);
      double lam_f = j.value("lambda_f", 0.0);
      const bool cv = j.value("cv", !(j.contains("lambda_g")));
      if (cv) {
        const ajl::TunedPenalties tuned = ajl::tune_ajl(
            ds, basis, j.value("folds", 5), j.value("seed", 1),
            j.value("grid_g", 12), j.value("grid_f", 12));
        pilot_g = tuned.pilot_lambda_g;
        pilot_f = tuned.pilot_lambda_f;
        lam_g = tuned.lambda_g;
        lam_f = tuned.lambda_f;
      }
      result = ajl::fit_ajl(design, design.Y(), pilot_g, pilot_f, lam_g,
                            lam_f, {}, &ws);
      if (j.value("refine", true)) {
        const ajl::PenaltyWeights weights = ajl::compute_weights(
            *result.pilot, 1.5, 1.5, 1.5,
            1.0 / static_cast<double>(design.rows()));
        const double lam_fb = j.value("lambda_f_beta", lam_f);
        result = ajl::refine(design, design.Y(), result, lam_f, lam_fb,
                             weights, {}, &ws);
      }
    } else {
      throw ajl::ConfigError("unknown pipeline: " + pipeline);
    }
    auto* out = new ajl_fit{ds, basis, std::move(result)};
    if (error) *error = AJL_OK;
    return out;
  } catch (const std::exception& e) {
    if (error) *error = record_error(e);
    return nullptr;
  }
}

void ajl_fit_free(ajl_fit* fit) { delete fit; }

ajl_fit* ajl_fit_load(const ajl_dataset* data, const char* coefficients_json,
                      int* error) {
  try {
    if (!data || !coefficients_json)
      throw ajl::ConfigError("null argument");
    ajl::LoadedFit loaded = ajl::fit_from_json(coefficients_json);
    if (loaded.result.coef.K() != data->data.K ||
        loaded.result.coef.p() != data->data.p)
      throw ajl::StructuralError(
          "coefficients do not match the dataset dimensions");
    auto* out = new ajl_fit{data->data, loaded.basis,
                            std::move(loaded.result)};
    if (error) *error = AJL_OK;
    return out;
  } catch (const std::exception& e) {
    if (error) *error = record_error(e);
    return nullptr;
  }
}

int ajl_fit_to_json(const ajl_fit* fit, char** out_json) {
  try {
    if (!fit || !out_json) throw ajl::ConfigError("null argument");
    *out_json = dup_string(ajl::fit_to_json(fit->result, fit->basis));
    return AJL_OK;
  } catch (const std::exception& e) {
    return record_error(e);
  }
}

int ajl_fit_curves_csv(const ajl_fit* fit, int grid_points, char** out_csv) {
  try {
    if (!fit || !out_csv) throw ajl::ConfigError("null argument");
    if (grid_points < 2) throw ajl::ConfigError("need at least 2 grid points");
    const ajl::SplineBasis& basis = fit->basis;
    Eigen::VectorXd grid(grid_points);
    for (int g = 0; g < grid_points; ++g)
      grid[g] = basis.t_lo() + (basis.t_hi() - basis.t_lo()) * g /
                                   static_cast<double>(grid_points - 1);
    std::ostringstream os;
    os.precision(10);
    const int K = fit->result.coef.K();
    os << "t";
    for (int k = 1; k <= K; ++k) os << ",alpha_" << k;
    for (int j : fit->result.active_set)
      for (int k = 1; k <= K; ++k) os << ",beta_" << (j + 1) << "_" << k;
    os << "\n";
    std::vector<Eigen::VectorXd> curves;
    for (int k = 0; k < K; ++k)
      curves.push_back(
          ajl::reconstruct(fit->result.coef.A.col(k), basis, grid));
    for (int j : fit->result.active_set)
      for (int k = 0; k < K; ++k)
        curves.push_back(
            ajl::reconstruct(fit->result.coef.B[j].col(k), basis, grid));
    for (int g = 0; g < grid_points; ++g) {
      os << grid[g];
      for (const auto& c : curves) os << "," << c[g];
      os << "\n";
    }
    *out_csv = dup_string(os.str());
    return AJL_OK;
  } catch (const std::exception& e) {
    return record_error(e);
  }
}

int ajl_fit_prediction_error(const ajl_fit* fit, const ajl_dataset* data,
                             double* out_pe) {
  try {
    if (!fit || !data || !out_pe) throw ajl::ConfigError("null argument");
    ajl::DesignMatrices design(data->data, fit->basis);
    *out_pe =
        ajl::prediction_error(fit->result.coef, design, design.Y());
    return AJL_OK;
  } catch (const std::exception& e) {
    return record_error(e);
  }
}

int ajl_cv_run(const ajl_dataset* data, const char* cv_json,
               char** out_json) {
  try {
    if (!data || !out_json) throw ajl::ConfigError("null argument");
    const json j = parse_config(cv_json);
    const ajl::LongitudinalDataset& ds = data->data;
    ajl::SplineBasis basis(j.value("M", 15), j.value("degree", 3), ds.t_lo,
                           ds.t_hi);
    const std::string pipeline = j.value("pipeline", std::string("ajl"));
    json out;
    ajl::CvResult cv;
    if (pipeline == "ajl") {
      const ajl::TunedPenalties tuned = ajl::tune_ajl(
          ds, basis, j.value("folds", 5), j.value("seed", 1),
          j.value("grid_g", 12), j.value("grid_f", 12));
      out["pilot_lambda_g"] = tuned.pilot_lambda_g;
      out["pilot_lambda_f"] = tuned.pilot_lambda_f;
      out["lambda_g"] = tuned.lambda_g;
      out["lambda_f"] = tuned.lambda_f;
      cv = tuned.final_cv;
    } else if (pipeline == "baseline") {
      ajl::DesignMatrices design(ds, basis);
      const ajl::TuningGrid grid = ajl::TuningGrid::log_spaced(
          std::max(ajl::lambda_max_group(design, design.Y()), 1e-8),
          std::max(ajl::lambda_max_fused(design, design.Y()), 1e-8),
          j.value("grid_g", 12), j.value("grid_f", 12));
      cv = ajl::cross_validate(ds, basis, grid, ajl::CvPipeline::baseline,
                               j.value("folds", 5), j.value("seed", 1));
      out["lambda_g"] = cv.best_lambda_g;
      out["lambda_f"] = cv.best_lambda_f;
    } else {
      throw ajl::ConfigError("unknown CV pipeline: " + pipeline);
    }
    json surface = json::array();
    for (Eigen::Index i = 0; i < cv.grid.lambda_g_values.size(); ++i)
      for (Eigen::Index f = 0; f < cv.grid.lambda_f_values.size(); ++f) {
        json point;
        point["lambda_g"] = cv.grid.lambda_g_values[i];
        point["lambda_f"] = cv.grid.lambda_f_values[f];
        const double err = cv.surface(i, f);
        if (std::isfinite(err))
          point["cv_error"] = err;
        else
          point["cv_error"] = nullptr;
        surface.push_back(std::move(point));
      }
    out["surface"] = std::move(surface);
    *out_json = dup_string(out.dump());
    return AJL_OK;
  } catch (const std::exception& e) {
    return record_error(e);
  }
}

int ajl_bands_csv(const ajl_fit* fit, const char* band_json,
                  char** out_csv) {
  try {
    if (!fit || !out_csv) throw ajl::ConfigError("null argument");
    const json j = parse_config(band_json);
    const std::string target = j.value("target", std::string("alpha"));
    const int covariate = j.value("covariate", 1) - 1;  // 1-based outside
    const int outcome = j.value("outcome", 1) - 1;
    const double level = j.value("level", 0.95);
    const int G = j.value("grid", 200);
    if (G < 2) throw ajl::ConfigError("grid must have at least 2 points");

    const ajl::SplineBasis& basis = fit->basis;
    Eigen::VectorXd grid(G);
    for (int g = 0; g < G; ++g)
      grid[g] = basis.t_lo() + (basis.t_hi() - basis.t_lo()) * g /
                                   static_cast<double>(G - 1);
    ajl::DesignMatrices design(fit->data, basis);
    const ajl::BandTarget tgt = target == "alpha" ? ajl::BandTarget::alpha
                              : target == "beta"
                                  ? ajl::BandTarget::beta
                                  : throw ajl::ConfigError(
                                        "target must be alpha or beta");
    const ajl::BandEstimate band =
        ajl::pointwise_band(fit->result, design, design.Y(), tgt, covariate,
                            outcome, grid, level);
    std::ostringstream os;
    os.precision(10);
    os << "t,center,lower,upper,flagged\n";
    for (int g = 0; g < G; ++g)
      os << band.grid[g] << "," << band.center[g] << ","
         << band.center[g] - band.halfwidth[g] << ","
         << band.center[g] + band.halfwidth[g] << ","
         << (band.flagged[static_cast<size_t>(g)] ? 1 : 0) << "\n";
    *out_csv = dup_string(os.str());
    return AJL_OK;
  } catch (const std::exception& e) {
    return record_error(e);
  }
}

int ajl_reproduce(const char* study_json, char** out_bundle_json) {
  try {
    if (!out_bundle_json) throw ajl::ConfigError("null output");
    const json j = parse_config(study_json);
    ajl::StudyConfig cfg;
    cfg.scenario = scenario_from_json(j);
    cfg.replications = j.value("R", 20);
    cfg.workers = j.value("workers", 1);
    cfg.cv_folds = j.value("folds", 5);
    cfg.grid_g = j.value("grid_g", 12);
    cfg.grid_f = j.value("grid_f", 12);
    cfg.slasso_grid = j.value("slasso_grid", 8);
    if (j.contains("methods"))
      cfg.methods = j.at("methods").get<std::vector<std::string>>();
    if (j.contains("coverage_M"))
      cfg.coverage_M = j.at("coverage_M").get<std::vector<int>>();

    const ajl::StudyResult result = ajl::run_study(cfg);
    int failed = 0;
    for (const auto& rec : result.records)
      if (rec.failed) ++failed;
    json out;
    out["summary_csv"] = ajl::summary_csv(result);
    out["raw_csv"] = ajl::raw_csv(result);
    if (!cfg.coverage_M.empty())
      out["coverage_csv"] = ajl::coverage_csv(result);
    out["manifest_json"] = ajl::manifest_json(result);
    out["failed_replications"] = failed;
    *out_bundle_json = dup_string(out.dump());
    if (failed * 5 > cfg.replications) {  // > 20% failed
      g_last_error = "more than 20% of replications failed";
      return AJL_ERR_NUMERIC;
    }
    return AJL_OK;
  } catch (const std::exception& e) {
    return record_error(e);
  }
}

}  // extern "C"
