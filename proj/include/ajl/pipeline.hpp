#pragma once

#include <map>
#include <string>
#include <vector>

#include "ajl/metrics.hpp"
#include "ajl/simgen.hpp"
#include "ajl/tuning.hpp"

namespace ajl {

/// One scenario-study run: R replications x methods.
struct StudyConfig {
  ScenarioConfig scenario;
  int replications = 20;
  int workers = 1;
  int basis_degree = 3;
  int cv_folds = 5;
  int grid_g = 12;
  int grid_f = 12;
  int slasso_grid = 8;
  std::vector<std::string> methods{"AJL", "JLL", "S-AJL", "S-Lasso",
                                   "Oracle"};
  /// Basis sizes for the coverage sweep; empty = plain metric study.
  std::vector<int> coverage_M;

  void validate() const;
};

struct ReplicationRecord {
  int rep = 0;
  bool failed = false;
  std::string error;
  // method -> metrics for the plain study
  std::map<std::string, MetricsReport> metrics;
  // basis size -> mean band coverage over outcomes (coverage sweep)
  std::map<int, double> coverage;
  // diagnostics retained for the acceptance checks
  double weight_ratio = 0.0;  // median noise weight / median signal weight
  bool screen_superset = false;  // true S contained in the screened set
  int monotone_violations = 0;   // objective increases beyond 1e-12
  double total_seconds = 0.0;
};

struct StudyResult {
  StudyConfig config;
  std::vector<ReplicationRecord> records;  // ordered by rep index
};

/// Runs one replication end to end. Deterministic given
/// (config, rep index): the dataset seed is derived from
/// scenario.seed + rep.
ReplicationRecord run_replication(const StudyConfig& config, int rep);

/// Runs all replications, sharded over `workers` threads; the result
/// order and content are independent of the worker count.
StudyResult run_study(const StudyConfig& config);

/// Per-method mean metrics across non-failed replications.
std::map<std::string, MetricsReport> summarize(const StudyResult& result);

/// Tables-style CSV: one row per method with the fixed column layout
/// PE, ISE_beta, ISE_alpha, TP, FP, Recall, Precision, Spec, F1, CP_Err.
std::string summary_csv(const StudyResult& result);
/// Same columns plus rep, one row per (method, replication).
std::string raw_csv(const StudyResult& result);
/// Coverage sweep CSV: scenario, M, coverage_mean.
std::string coverage_csv(const StudyResult& result);
/// Machine-readable run manifest (config echo, seeds, failures, timing).
std::string manifest_json(const StudyResult& result,
                          bool include_timing = true);

/// Per-outcome l1 competitor tuning: a small log-spaced lambda path per
/// outcome selected by subject-fold CV.
std::vector<double> tune_slasso(const LongitudinalDataset& data,
                                const SplineBasis& basis, int folds,
                                uint64_t seed, int n_lambda);

}  // namespace ajl
