#include "ajl/simgen.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include "ajl/errors.hpp"

namespace ajl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// AR(1) covariance Cholesky factor L with L L' = [rho^|i-j|] * scale^2.
Eigen::MatrixXd ar1_cholesky(int n, double rho, double scale) {
  Eigen::MatrixXd S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      S(i, j) = scale * scale * std::pow(rho, std::abs(i - j));
  return Eigen::LLT<Eigen::MatrixXd>(S).matrixL();
}

}  // namespace

Rng Rng::stream(uint64_t seed, uint64_t index, uint64_t tag) {
  // Mix the three words through the same finalizer to decorrelate streams.
  uint64_t s = seed;
  (void)splitmix64(s);
  s ^= 0x632be59bd9b4e019ULL * (index + 1);
  (void)splitmix64(s);
  s ^= 0x9e6c63d0a9c3f8f7ULL * (tag + 1);
  return Rng(splitmix64(s));
}

uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) { return a + (b - a) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  has_spare_ = true;
  return r * std::cos(kTwoPi * u2);
}

double Rng::chi_squared(int df) {
  double acc = 0.0;
  for (int i = 0; i < df; ++i) {
    const double z = normal();
    acc += z * z;
  }
  return acc;
}

ScenarioConfig ScenarioConfig::preset(const std::string& name) {
  ScenarioConfig c;
  c.name = name;
  if (name == "S1" || name == "S9") {
    // baseline; S9 reuses it for the basis-size coverage sweep
  } else if (name == "S2") {
    c.n = 50;
  } else if (name == "S3") {
    c.n = 200;
  } else if (name == "S4") {
    c.p = 300;
  } else if (name == "S5") {
    c.rho_x = 0.8;
  } else if (name == "S6") {
    c.rho_t = 0.6;
    c.rho_eps = 0.8;
  } else if (name == "S7") {
    c.error_kind = ErrorKind::student_t3;
  } else if (name == "S8") {
    c.contam_pi = 0.05;
    c.contam_kappa = 10.0;
  } else {
    throw ConfigError("unknown scenario preset: " + name);
  }
  return c;
}

void ScenarioConfig::validate() const {
  if (n < 1 || p < 1 || T < 2 || K < 1 || n_test < 0)
    throw ConfigError("scenario dimensions must be positive");
  if (s < 0 || s > p || s % 2 != 0)
    throw ConfigError("active-set size s must be even and <= p");
  if (rho_x < 0 || rho_x >= 1 || rho_t < 0 || rho_t >= 1 || rho_eps < 0 ||
      rho_eps >= 1)
    throw ConfigError("correlation parameters must lie in [0, 1)");
  if (sigma < 0 || contam_pi < 0 || contam_pi > 1 || contam_kappa < 0)
    throw ConfigError("invalid noise/contamination parameters");
}

double GroundTruth::alpha(int k, double t) const {
  if (t > changepoint_times[1]) return intercept_levels(k, 2);
  if (t > changepoint_times[0]) return intercept_levels(k, 1);
  return intercept_levels(k, 0);
}

double GroundTruth::beta(int j, int k, double t) const {
  const int s = static_cast<int>(active_set.size());
  if (j >= s) return 0.0;
  if (j < s / 2) return amplitudes(j, k) * std::sin(kTwoPi * t);
  return t > 0.5 ? amplitudes(j, k) : 0.0;
}

Eigen::RowVectorXd GroundTruth::mean_row(const Eigen::RowVectorXd& x,
                                         double t) const {
  const int K = static_cast<int>(intercept_levels.rows());
  Eigen::RowVectorXd out(K);
  for (int k = 0; k < K; ++k) {
    double v = alpha(k, t);
    for (int j : active_set) v += x[j] * beta(j, k, t);
    out[k] = v;
  }
  return out;
}

Eigen::MatrixXd sample_errors(const ScenarioConfig& config, Rng& rng) {
  const Eigen::MatrixXd Lt = ar1_cholesky(config.T, config.rho_t, 1.0);
  const Eigen::MatrixXd Lk =
      ar1_cholesky(config.K, config.rho_eps, config.sigma);
  Eigen::MatrixXd G(config.T, config.K);
  for (int l = 0; l < config.T; ++l)
    for (int k = 0; k < config.K; ++k) G(l, k) = rng.normal();
  Eigen::MatrixXd E = Lt * G * Lk.transpose();
  if (config.error_kind == ErrorKind::student_t3) {
    const double nu = 3.0;
    const double mix = std::sqrt(rng.chi_squared(3) / nu);
    E *= std::sqrt((nu - 2.0) / nu) / mix;
  }
  return E;
}

void contaminate(Eigen::MatrixXd& Y, double pi, double kappa, double sigma,
                 Rng& rng) {
  if (pi <= 0.0 || kappa == 0.0) {
    // still consume nothing: identity by contract
    return;
  }
  for (Eigen::Index l = 0; l < Y.rows(); ++l)
    for (Eigen::Index k = 0; k < Y.cols(); ++k)
      if (rng.uniform() < pi) {
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        Y(l, k) += sign * kappa * sigma;
      }
}

namespace {

enum StreamTag : uint64_t {
  kTruthStream = 1,
  kTrainStream = 2,
  kTestStream = 3
};

SubjectRecord make_subject(const ScenarioConfig& cfg, const GroundTruth& truth,
                           const Eigen::MatrixXd& Lt, const Eigen::MatrixXd& Lk,
                           Rng rng, const std::string& id) {
  SubjectRecord s;
  s.id = id;
  s.times.resize(cfg.T);
  for (int l = 0; l < cfg.T; ++l)
    s.times[l] = static_cast<double>(l) / (cfg.T - 1);

  // AR(1) baseline covariates, broadcast across visits.
  Eigen::RowVectorXd x(cfg.p);
  x[0] = rng.normal();
  const double carry = std::sqrt(1.0 - cfg.rho_x * cfg.rho_x);
  for (int j = 1; j < cfg.p; ++j)
    x[j] = cfg.rho_x * x[j - 1] + carry * rng.normal();
  s.X = x.replicate(cfg.T, 1);

  // matrix-normal errors (factors precomputed by the caller)
  Eigen::MatrixXd G(cfg.T, cfg.K);
  for (int l = 0; l < cfg.T; ++l)
    for (int k = 0; k < cfg.K; ++k) G(l, k) = rng.normal();
  Eigen::MatrixXd E = Lt * G * Lk.transpose();
  if (cfg.error_kind == ErrorKind::student_t3) {
    const double nu = 3.0;
    const double mix = std::sqrt(rng.chi_squared(3) / nu);
    E *= std::sqrt((nu - 2.0) / nu) / mix;
  }

  s.Y.resize(cfg.T, cfg.K);
  for (int l = 0; l < cfg.T; ++l)
    s.Y.row(l) = truth.mean_row(x, s.times[l]) + E.row(l);
  contaminate(s.Y, cfg.contam_pi, cfg.contam_kappa, cfg.sigma, rng);
  return s;
}

}  // namespace

SimulatedData generate(const ScenarioConfig& config) {
  config.validate();
  SimulatedData out;

  // truth draw from its own stream
  Rng trng = Rng::stream(config.seed, 0, kTruthStream);
  GroundTruth& truth = out.truth;
  truth.p = config.p;
  for (int j = 0; j < config.s; ++j) {
    truth.active_set.push_back(j);
    (j < config.s / 2 ? truth.smooth_set : truth.step_set).push_back(j);
  }
  truth.amplitudes.resize(config.s, config.K);
  for (int j = 0; j < config.s; ++j)
    for (int k = 0; k < config.K; ++k) {
      const double mag = trng.uniform(1.0, 2.0);
      truth.amplitudes(j, k) = trng.uniform() < 0.5 ? -mag : mag;
    }
  truth.intercept_levels.resize(config.K, 3);
  for (int k = 0; k < config.K; ++k)
    for (int r = 0; r < 3; ++r)
      truth.intercept_levels(k, r) = trng.uniform(1.0, 3.0);

  const Eigen::MatrixXd Lt = ar1_cholesky(config.T, config.rho_t, 1.0);
  const Eigen::MatrixXd Lk =
      ar1_cholesky(config.K, config.rho_eps, config.sigma);

  auto fill = [&](LongitudinalDataset& data, int count, StreamTag tag,
                  const char* prefix) {
    data.p = config.p;
    data.K = config.K;
    data.subjects.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i)
      data.subjects.push_back(make_subject(
          config, truth, Lt, Lk,
          Rng::stream(config.seed, static_cast<uint64_t>(i), tag),
          prefix + std::to_string(i)));
  };
  fill(out.train, config.n, kTrainStream, "train");
  fill(out.test, config.n_test, kTestStream, "test");
  return out;
}

std::string truth_to_json(const GroundTruth& truth,
                          const ScenarioConfig& config) {
  std::ostringstream os;
  os.precision(17);
  auto int_list = [&](const std::vector<int>& v) {
    os << "[";
    for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << "]";
  };
  os << "{\"scenario\":\"" << config.name << "\",\"seed\":" << config.seed
     << ",\"n\":" << config.n << ",\"p\":" << config.p << ",\"T\":" << config.T
     << ",\"K\":" << config.K << ",\"s\":" << config.s << ",\"active_set\":";
  int_list(truth.active_set);
  os << ",\"smooth_set\":";
  int_list(truth.smooth_set);
  os << ",\"step_set\":";
  int_list(truth.step_set);
  os << ",\"changepoint_times\":[" << truth.changepoint_times[0] << ","
     << truth.changepoint_times[1] << "],\"amplitudes\":[";
  for (Eigen::Index j = 0; j < truth.amplitudes.rows(); ++j) {
    os << (j ? ",[" : "[");
    for (Eigen::Index k = 0; k < truth.amplitudes.cols(); ++k)
      os << (k ? "," : "") << truth.amplitudes(j, k);
    os << "]";
  }
  os << "],\"intercept_levels\":[";
  for (Eigen::Index k = 0; k < truth.intercept_levels.rows(); ++k) {
    os << (k ? ",[" : "[");
    for (int r = 0; r < 3; ++r)
      os << (r ? "," : "") << truth.intercept_levels(k, r);
    os << "]";
  }
  os << "]}";
  return os.str();
}

}  // namespace ajl
