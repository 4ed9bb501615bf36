#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "ajl/data.hpp"

namespace ajl {

/// Deterministic counter-style RNG (splitmix64 core) with explicit
/// stream derivation, so per-subject generation is reproducible and
/// independent of worker scheduling or platform library details.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}
  /// Child stream for (seed, index, tag); streams are independent for
  /// distinct inputs.
  static Rng stream(uint64_t seed, uint64_t index, uint64_t tag);

  uint64_t next_u64();
  double uniform();            // [0, 1)
  double uniform(double a, double b);
  double normal();             // standard normal (Box-Muller, cached pair)
  double chi_squared(int df);  // sum of df squared normals

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

enum class ErrorKind { gaussian, student_t3 };

struct ScenarioConfig {
  int n = 100;
  int p = 100;
  int T = 30;
  int K = 5;
  int M = 15;  // suggested basis size for fitting, not a generation knob
  int s = 10;
  double rho_x = 0.5;
  double rho_t = 0.3;
  double rho_eps = 0.5;
  double sigma = 1.0;
  ErrorKind error_kind = ErrorKind::gaussian;
  double contam_pi = 0.0;
  double contam_kappa = 10.0;
  int n_test = 1000;
  uint64_t seed = 1;
  std::string name = "custom";

  /// Presets S1..S9 matching the scenario study design.
  static ScenarioConfig preset(const std::string& name);
  void validate() const;
};

/// Planted truth: active set {0..s-1}; smooth half {0..s/2-1} with
/// a_jk sin(2 pi t), step half {s/2..s-1} with a_jk 1(t > 1/2);
/// piecewise-constant intercepts with jumps at t = 1/3 and 2/3.
struct GroundTruth {
  std::vector<int> active_set;
  std::vector<int> smooth_set;
  std::vector<int> step_set;
  Eigen::MatrixXd amplitudes;        // s x K, |a| in [1, 2]
  Eigen::MatrixXd intercept_levels;  // K x 3, values in [1, 3]
  std::vector<double> changepoint_times{1.0 / 3.0, 2.0 / 3.0};
  int p = 0;

  double alpha(int k, double t) const;
  double beta(int j, int k, double t) const;  // 0 off the active set
  /// Mean surface row for covariates x at time t: alpha_k(t) + x' beta_k(t).
  Eigen::RowVectorXd mean_row(const Eigen::RowVectorXd& x, double t) const;
};

struct SimulatedData {
  LongitudinalDataset train;
  LongitudinalDataset test;
  GroundTruth truth;
};

/// Full generation: truth draw, balanced time grid (l-1)/(T-1),
/// AR(1)-correlated baseline covariates, matrix-normal (or scaled-t3)
/// errors, optional cellwise contamination. Bit-reproducible from seed.
SimulatedData generate(const ScenarioConfig& config);

/// One subject's T x K error matrix E = L_T G L_K' (row covariance
/// rho_t-AR(1), column covariance sigma^2 rho_eps-AR(1)); the t3 variant
/// divides by sqrt(chi2_3 / 3) per subject and rescales to variance 1.
Eigen::MatrixXd sample_errors(const ScenarioConfig& config, Rng& rng);

/// In-place cellwise contamination: with probability pi add +/- kappa*sigma.
void contaminate(Eigen::MatrixXd& Y, double pi, double kappa, double sigma,
                 Rng& rng);

/// Truth serialization for the reproduction manifests.
std::string truth_to_json(const GroundTruth& truth,
                          const ScenarioConfig& config);

}  // namespace ajl
