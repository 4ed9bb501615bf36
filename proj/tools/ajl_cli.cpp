// Command-line front end. All numerical work goes through the C API in
// ajl.h; this file only does argument parsing, file I/O, and light
// JSON/CSV re-shaping.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ajl/ajl.h"

using nlohmann::json;

namespace {

int exit_code_for(int err) {
  switch (err) {
    case AJL_OK:
      return 0;
    case AJL_ERR_CONFIG:
      return 1;
    case AJL_ERR_DATA:
      return 2;
    default:
      return 3;
  }
}

int fail(int err) {
  std::cerr << "error: " << ajl_last_error_message() << "\n";
  return exit_code_for(err);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

struct ScenarioFlags {
  std::string preset = "S1";
  uint64_t seed = 1;
  int n = -1, p = -1, T = -1, K = -1, s = -1, n_test = -1, M = -1;
  double rho_x = -1, rho_t = -1, rho_eps = -1, pi = -1, kappa = -1;
  std::string errors;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--scenario", preset, "Scenario preset S1..S9");
    cmd->add_option("--seed", seed, "Base RNG seed");
    cmd->add_option("--n", n, "Training subjects");
    cmd->add_option("--p", p, "Number of covariates");
    cmd->add_option("--T", T, "Visits per subject");
    cmd->add_option("--K", K, "Number of outcomes");
    cmd->add_option("--s", s, "Active covariates (even)");
    cmd->add_option("--M", M, "Basis functions for fitting");
    cmd->add_option("--n-test", n_test, "Test subjects");
    cmd->add_option("--rho-x", rho_x, "Covariate AR correlation");
    cmd->add_option("--rho-t", rho_t, "Temporal error correlation");
    cmd->add_option("--rho-eps", rho_eps, "Cross-outcome error correlation");
    cmd->add_option("--pi", pi, "Contamination probability");
    cmd->add_option("--kappa", kappa, "Contamination magnitude");
    cmd->add_option("--errors", errors, "Error kind: gaussian or t3");
  }

  json to_json() const {
    json j;
    j["preset"] = preset;
    j["seed"] = seed;
    if (n >= 0) j["n"] = n;
    if (p >= 0) j["p"] = p;
    if (T >= 0) j["T"] = T;
    if (K >= 0) j["K"] = K;
    if (s >= 0) j["s"] = s;
    if (M >= 0) j["M"] = M;
    if (n_test >= 0) j["n_test"] = n_test;
    if (rho_x >= 0) j["rho_x"] = rho_x;
    if (rho_t >= 0) j["rho_t"] = rho_t;
    if (rho_eps >= 0) j["rho_eps"] = rho_eps;
    if (pi >= 0) j["pi"] = pi;
    if (kappa >= 0) j["kappa"] = kappa;
    if (!errors.empty()) j["errors"] = errors;
    return j;
  }
};

struct FitFlags {
  int M = 15, degree = 3, folds = 5, grid_g = 12, grid_f = 12;
  uint64_t seed = 1;
  std::string pipeline = "ajl";
  double lambda_g = -1, lambda_f = -1, pilot_lambda_g = -1,
         pilot_lambda_f = -1, lambda_f_beta = -1;
  bool no_cv = false, no_refine = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--M", M, "Number of basis functions");
    cmd->add_option("--degree", degree, "Spline degree");
    cmd->add_option("--pipeline", pipeline, "ajl or penalized");
    cmd->add_option("--folds", folds, "CV folds");
    cmd->add_option("--grid-g", grid_g, "Group-penalty grid size");
    cmd->add_option("--grid-f", grid_f, "Fusion-penalty grid size");
    cmd->add_option("--seed", seed, "CV fold seed");
    cmd->add_option("--lambda-g", lambda_g, "Group penalty level");
    cmd->add_option("--lambda-f", lambda_f, "Intercept fusion penalty");
    cmd->add_option("--pilot-lambda-g", pilot_lambda_g, "Pilot group level");
    cmd->add_option("--pilot-lambda-f", pilot_lambda_f, "Pilot fusion level");
    cmd->add_option("--lambda-f-beta", lambda_f_beta,
                    "Slope fusion penalty (refinement)");
    cmd->add_flag("--no-cv", no_cv, "Use explicit penalties, skip CV");
    cmd->add_flag("--no-refine", no_refine, "Skip post-selection refinement");
  }

  json to_json() const {
    json j;
    j["M"] = M;
    j["degree"] = degree;
    j["pipeline"] = pipeline;
    j["folds"] = folds;
    j["grid_g"] = grid_g;
    j["grid_f"] = grid_f;
    j["seed"] = seed;
    if (no_cv) j["cv"] = false;
    if (no_refine) j["refine"] = false;
    if (lambda_g >= 0) j["lambda_g"] = lambda_g;
    if (lambda_f >= 0) j["lambda_f"] = lambda_f;
    if (pilot_lambda_g >= 0) j["pilot_lambda_g"] = pilot_lambda_g;
    if (pilot_lambda_f >= 0) j["pilot_lambda_f"] = pilot_lambda_f;
    if (lambda_f_beta >= 0) j["lambda_f_beta"] = lambda_f_beta;
    return j;
  }
};

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { ajl_string_free(s); }
  std::string str() const { return s ? std::string(s) : std::string(); }
};

struct OwnedDataset {
  ajl_dataset* d = nullptr;
  ~OwnedDataset() { ajl_dataset_free(d); }
};

struct OwnedFit {
  ajl_fit* f = nullptr;
  ~OwnedFit() { ajl_fit_free(f); }
};

/// Minimal boxplot SVG from per-method value lists (convenience output).
std::string boxplot_svg(const std::map<std::string, std::vector<double>>& data,
                        const std::string& title) {
  const int width = 640, height = 400, pad = 60;
  double vmin = 1e300, vmax = -1e300;
  for (const auto& [name, vals] : data)
    for (double v : vals) {
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  if (!(vmax > vmin)) vmax = vmin + 1.0;
  auto ycoord = [&](double v) {
    return height - pad -
           (v - vmin) / (vmax - vmin) * (height - 2 * pad);
  };
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
     << "' height='" << height << "'>\n<text x='" << width / 2
     << "' y='20' text-anchor='middle'>" << title << "</text>\n";
  const int n = static_cast<int>(data.size());
  int i = 0;
  for (const auto& [name, vals_in] : data) {
    std::vector<double> vals = vals_in;
    std::sort(vals.begin(), vals.end());
    if (vals.empty()) continue;
    auto q = [&](double f) {
      const double idx = f * (vals.size() - 1);
      const size_t lo = static_cast<size_t>(idx);
      const size_t hi = std::min(lo + 1, vals.size() - 1);
      return vals[lo] + (idx - lo) * (vals[hi] - vals[lo]);
    };
    const double cx = pad + (i + 0.5) * (width - 2 * pad) / n;
    const double bw = 0.3 * (width - 2 * pad) / n;
    os << "<line x1='" << cx << "' y1='" << ycoord(vals.front()) << "' x2='"
       << cx << "' y2='" << ycoord(vals.back())
       << "' stroke='black'/>\n<rect x='" << cx - bw / 2 << "' y='"
       << ycoord(q(0.75)) << "' width='" << bw << "' height='"
       << ycoord(q(0.25)) - ycoord(q(0.75))
       << "' fill='none' stroke='black'/>\n<line x1='" << cx - bw / 2
       << "' y1='" << ycoord(q(0.5)) << "' x2='" << cx + bw / 2 << "' y2='"
       << ycoord(q(0.5)) << "' stroke='black'/>\n<text x='" << cx << "' y='"
       << height - pad / 2 << "' text-anchor='middle' font-size='12'>" << name
       << "</text>\n";
    ++i;
  }
  os << "<text x='15' y='" << ycoord(vmax)
     << "' font-size='10'>" << vmax << "</text>\n<text x='15' y='"
     << ycoord(vmin) << "' font-size='10'>" << vmin << "</text>\n</svg>\n";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint functional variable selection and changepoint "
               "detection for multivariate longitudinal models"};
  app.require_subcommand(1);

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  ScenarioFlags sim_flags;
  sim_flags.add_to(sim);
  std::string sim_out = "data.csv", sim_truth_out, sim_test_out;
  sim->add_option("--out", sim_out, "Training CSV path")->required();
  sim->add_option("--test-out", sim_test_out, "Test CSV path");
  sim->add_option("--truth-out", sim_truth_out, "Truth JSON path");

  // ---- fit ----
  auto* fit = app.add_subcommand("fit", "Fit the model to a CSV dataset");
  FitFlags fit_flags;
  std::string fit_in, fit_coef_out = "coefficients.json", fit_curves_out;
  bool fit_norm_time = false;
  int fit_curve_grid = 200;
  fit->add_option("--input", fit_in, "Long-format CSV")->required();
  fit->add_flag("--normalize-time", fit_norm_time,
                "Map observed time range onto [0,1]");
  fit_flags.add_to(fit);
  fit->add_option("--out-coefficients", fit_coef_out, "Coefficients JSON");
  fit->add_option("--out-curves", fit_curves_out, "Fitted-curve CSV");
  fit->add_option("--curve-grid", fit_curve_grid, "Curve grid points");

  // ---- cv ----
  auto* cv = app.add_subcommand("cv", "Cross-validate penalty levels");
  std::string cv_in, cv_out = "cv_surface.csv";
  bool cv_norm_time = false;
  FitFlags cv_flags;
  cv->add_option("--input", cv_in, "Long-format CSV")->required();
  cv->add_flag("--normalize-time", cv_norm_time,
               "Map observed time range onto [0,1]");
  cv_flags.add_to(cv);
  cv->add_option("--out", cv_out, "CV surface CSV");

  // ---- bands ----
  auto* bands = app.add_subcommand(
      "bands", "Pointwise confidence bands for a fitted model");
  std::string bands_in, bands_coef, bands_out = "bands.csv",
              bands_target = "alpha";
  bool bands_norm_time = false;
  int bands_cov = 1, bands_outcome = 1, bands_grid = 200;
  double bands_level = 0.95;
  FitFlags bands_fit_flags;
  bands->add_option("--input", bands_in, "Long-format CSV")->required();
  bands->add_flag("--normalize-time", bands_norm_time,
                  "Map observed time range onto [0,1]");
  bands->add_option("--coefficients", bands_coef,
                    "Coefficients JSON from a previous fit (else refit)");
  bands_fit_flags.add_to(bands);
  bands->add_option("--target", bands_target, "alpha or beta");
  bands->add_option("--covariate", bands_cov, "Covariate index (1-based)");
  bands->add_option("--outcome", bands_outcome, "Outcome index (1-based)");
  bands->add_option("--level", bands_level, "Band level in (0,1)");
  bands->add_option("--grid", bands_grid, "Grid points");
  bands->add_option("--out", bands_out, "Band CSV path");

  // ---- evaluate ----
  auto* eval = app.add_subcommand(
      "evaluate", "Prediction error of saved coefficients on a dataset");
  std::string eval_in, eval_coef;
  bool eval_norm_time = false;
  eval->add_option("--input", eval_in, "Long-format CSV")->required();
  eval->add_option("--coefficients", eval_coef, "Coefficients JSON")
      ->required();
  eval->add_flag("--normalize-time", eval_norm_time,
                 "Map observed time range onto [0,1]");

  // ---- reproduce ----
  auto* rep = app.add_subcommand(
      "reproduce", "Run a scenario study (replications x methods)");
  ScenarioFlags rep_flags;
  rep_flags.add_to(rep);
  int rep_R = 20, rep_workers = 0, rep_folds = 5, rep_grid_g = 12,
      rep_grid_f = 12, rep_slasso_grid = 8;
  std::vector<std::string> rep_methods;
  std::vector<int> rep_coverage_M;
  std::string rep_out_dir = ".";
  bool rep_svg = false;
  rep->add_option("--R", rep_R, "Replications");
  rep->add_option("--workers", rep_workers,
                  "Worker threads (0 = hardware concurrency)");
  rep->add_option("--folds", rep_folds, "CV folds");
  rep->add_option("--grid-g", rep_grid_g, "Group-penalty grid size");
  rep->add_option("--grid-f", rep_grid_f, "Fusion-penalty grid size");
  rep->add_option("--slasso-grid", rep_slasso_grid,
                  "Per-outcome l1 path length");
  rep->add_option("--methods", rep_methods,
                  "Methods: AJL JLL S-AJL S-Lasso Oracle");
  rep->add_option("--coverage-M", rep_coverage_M,
                  "Basis sizes for the band-coverage sweep");
  rep->add_option("--out-dir", rep_out_dir, "Output directory");
  rep->add_flag("--svg", rep_svg, "Also emit a PE boxplot SVG");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      int err = 0;
      OwnedString truth;
      const std::string cfg = sim_flags.to_json().dump();
      OwnedDataset train{ajl_simulate(cfg.c_str(), 0,
                                      sim_truth_out.empty() ? nullptr
                                                            : &truth.s,
                                      &err)};
      if (!train.d) return fail(err);
      OwnedString csv;
      if ((err = ajl_dataset_write_csv(train.d, &csv.s)) != AJL_OK)
        return fail(err);
      write_file(sim_out, csv.str());
      if (!sim_test_out.empty()) {
        OwnedDataset test{ajl_simulate(cfg.c_str(), 1, nullptr, &err)};
        if (!test.d) return fail(err);
        OwnedString test_csv;
        if ((err = ajl_dataset_write_csv(test.d, &test_csv.s)) != AJL_OK)
          return fail(err);
        write_file(sim_test_out, test_csv.str());
      }
      if (!sim_truth_out.empty()) write_file(sim_truth_out, truth.str());
      return 0;
    }

    if (*fit) {
      int err = 0;
      const std::string csv = read_file(fit_in);
      OwnedDataset data{
          ajl_dataset_parse_csv(csv.c_str(), fit_norm_time ? 1 : 0, &err)};
      if (!data.d) return fail(err);
      const std::string cfg = fit_flags.to_json().dump();
      OwnedFit fitted{ajl_fit_run(data.d, cfg.c_str(), &err)};
      if (!fitted.f) return fail(err);
      OwnedString coef;
      if ((err = ajl_fit_to_json(fitted.f, &coef.s)) != AJL_OK)
        return fail(err);
      write_file(fit_coef_out, coef.str());
      if (!fit_curves_out.empty()) {
        OwnedString curves;
        if ((err = ajl_fit_curves_csv(fitted.f, fit_curve_grid,
                                      &curves.s)) != AJL_OK)
          return fail(err);
        write_file(fit_curves_out, curves.str());
      }
      return 0;
    }

    if (*cv) {
      int err = 0;
      const std::string csv = read_file(cv_in);
      OwnedDataset data{
          ajl_dataset_parse_csv(csv.c_str(), cv_norm_time ? 1 : 0, &err)};
      if (!data.d) return fail(err);
      json cfg = cv_flags.to_json();
      if (cv_flags.pipeline != "ajl") cfg["pipeline"] = cv_flags.pipeline;
      OwnedString out;
      const std::string cfg_text = cfg.dump();
      if ((err = ajl_cv_run(data.d, cfg_text.c_str(), &out.s)) != AJL_OK)
        return fail(err);
      const json result = json::parse(out.str());
      std::ostringstream surface;
      surface.precision(10);
      surface << "lambda_g,lambda_f,cv_error\n";
      for (const auto& pt : result.at("surface"))
        surface << pt.at("lambda_g").get<double>() << ","
                << pt.at("lambda_f").get<double>() << ","
                << (pt.at("cv_error").is_null()
                        ? std::string("inf")
                        : std::to_string(pt.at("cv_error").get<double>()))
                << "\n";
      write_file(cv_out, surface.str());
      json chosen = result;
      chosen.erase("surface");
      std::cout << chosen.dump() << "\n";
      return 0;
    }

    if (*bands) {
      int err = 0;
      const std::string csv = read_file(bands_in);
      OwnedDataset data{
          ajl_dataset_parse_csv(csv.c_str(), bands_norm_time ? 1 : 0, &err)};
      if (!data.d) return fail(err);
      OwnedFit fitted;
      if (!bands_coef.empty()) {
        const std::string coef = read_file(bands_coef);
        fitted.f = ajl_fit_load(data.d, coef.c_str(), &err);
      } else {
        const std::string cfg = bands_fit_flags.to_json().dump();
        fitted.f = ajl_fit_run(data.d, cfg.c_str(), &err);
      }
      if (!fitted.f) return fail(err);
      json bcfg;
      bcfg["target"] = bands_target;
      bcfg["covariate"] = bands_cov;
      bcfg["outcome"] = bands_outcome;
      bcfg["level"] = bands_level;
      bcfg["grid"] = bands_grid;
      OwnedString out;
      const std::string bcfg_text = bcfg.dump();
      if ((err = ajl_bands_csv(fitted.f, bcfg_text.c_str(), &out.s)) !=
          AJL_OK)
        return fail(err);
      write_file(bands_out, out.str());
      return 0;
    }

    if (*eval) {
      int err = 0;
      const std::string csv = read_file(eval_in);
      OwnedDataset data{
          ajl_dataset_parse_csv(csv.c_str(), eval_norm_time ? 1 : 0, &err)};
      if (!data.d) return fail(err);
      const std::string coef = read_file(eval_coef);
      OwnedFit fitted{ajl_fit_load(data.d, coef.c_str(), &err)};
      if (!fitted.f) return fail(err);
      double pe = 0.0;
      if ((err = ajl_fit_prediction_error(fitted.f, data.d, &pe)) != AJL_OK)
        return fail(err);
      std::cout.precision(10);
      std::cout << "{\"pe\":" << pe << "}\n";
      return 0;
    }

    if (*rep) {
      json cfg = rep_flags.to_json();
      cfg["scenario"] = rep_flags.preset;
      cfg["R"] = rep_R;
      cfg["workers"] = rep_workers > 0
                           ? rep_workers
                           : static_cast<int>(std::max(
                                 1u, std::thread::hardware_concurrency()));
      cfg["folds"] = rep_folds;
      cfg["grid_g"] = rep_grid_g;
      cfg["grid_f"] = rep_grid_f;
      cfg["slasso_grid"] = rep_slasso_grid;
      if (!rep_methods.empty()) cfg["methods"] = rep_methods;
      if (!rep_coverage_M.empty()) cfg["coverage_M"] = rep_coverage_M;
      OwnedString bundle;
      const std::string cfg_text = cfg.dump();
      const int err = ajl_reproduce(cfg_text.c_str(), &bundle.s);
      if (!bundle.s) return fail(err);
      const json out = json::parse(bundle.str());
      std::filesystem::create_directories(rep_out_dir);
      const std::string dir = rep_out_dir + "/";
      write_file(dir + "summary.csv", out.at("summary_csv").get<std::string>());
      write_file(dir + "raw.csv", out.at("raw_csv").get<std::string>());
      if (out.contains("coverage_csv"))
        write_file(dir + "coverage.csv",
                   out.at("coverage_csv").get<std::string>());
      write_file(dir + "manifest.json",
                 out.at("manifest_json").get<std::string>());
      if (rep_svg) {
        std::map<std::string, std::vector<double>> pe_by_method;
        std::istringstream raw(out.at("raw_csv").get<std::string>());
        std::string line;
        std::getline(raw, line);  // header
        while (std::getline(raw, line)) {
          std::istringstream ls(line);
          std::string scenario, method, repno, pe;
          std::getline(ls, scenario, ',');
          std::getline(ls, method, ',');
          std::getline(ls, repno, ',');
          std::getline(ls, pe, ',');
          if (!pe.empty()) pe_by_method[method].push_back(std::stod(pe));
        }
        write_file(dir + "pe_boxplot.svg",
                   boxplot_svg(pe_by_method,
                               "Prediction error by method (" +
                                   rep_flags.preset + ")"));
      }
      if (err != AJL_OK) return fail(err);
      std::cout << "wrote " << dir << "summary.csv\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
