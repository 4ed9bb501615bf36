#include "ajl/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ajl/errors.hpp"

namespace ajl {

double prediction_error(const CoefficientSet& coef,
                        const DesignMatrices& test_design,
                        const Eigen::MatrixXd& test_Y) {
  if (test_Y.rows() == 0) throw DataError("empty test set");
  const Eigen::MatrixXd pred = test_design.predict(coef);
  return (pred - test_Y).squaredNorm() /
         static_cast<double>(test_Y.rows() * test_Y.cols());
}

std::pair<double, double> ise(const CoefficientSet& coef,
                              const SplineBasis& basis,
                              const GroundTruth& truth, int grid_points) {
  const int G = grid_points;
  Eigen::VectorXd grid(G);
  for (int g = 0; g < G; ++g)
    grid[g] = basis.t_lo() +
              (basis.t_hi() - basis.t_lo()) * g / static_cast<double>(G - 1);
  const Eigen::MatrixXd Phi = basis.matrix(grid);

  const int p = coef.p(), K = coef.K();
  double acc_beta = 0.0;
  for (int j = 0; j < p; ++j) {
    const Eigen::MatrixXd curves = Phi * coef.B[j];  // G x K
    for (int k = 0; k < K; ++k) {
      double sq = 0.0;
      for (int g = 0; g < G; ++g) {
        const double d = curves(g, k) - truth.beta(j, k, grid[g]);
        sq += d * d;
      }
      acc_beta += sq / G;
    }
  }
  const Eigen::MatrixXd alpha_curves = Phi * coef.A;
  double acc_alpha = 0.0;
  for (int k = 0; k < K; ++k) {
    double sq = 0.0;
    for (int g = 0; g < G; ++g) {
      const double d = alpha_curves(g, k) - truth.alpha(k, grid[g]);
      sq += d * d;
    }
    acc_alpha += sq / G;
  }
  return {acc_beta / (p * K), acc_alpha / K};
}

SelectionMetrics selection_metrics(const std::vector<int>& active,
                                   const std::vector<int>& truth_S, int p) {
  std::vector<char> in_truth(static_cast<size_t>(p), 0);
  for (int j : truth_S) in_truth.at(static_cast<size_t>(j)) = 1;
  SelectionMetrics m;
  for (int j : active)
    (in_truth.at(static_cast<size_t>(j)) ? m.tp : m.fp) += 1.0;
  const double s = static_cast<double>(truth_S.size());
  const double tn = static_cast<double>(p) - s - m.fp;
  m.recall = s > 0 ? m.tp / s : 1.0;
  if (active.empty())
    m.precision = truth_S.empty() ? 1.0 : 0.0;
  else
    m.precision = m.tp / static_cast<double>(active.size());
  m.specificity = (tn + m.fp) > 0 ? tn / (tn + m.fp) : 1.0;
  m.f1 = (m.precision + m.recall) > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

double cp_count_error(const FitResult& fit, int true_count_per_outcome) {
  const int K = static_cast<int>(fit.changepoints_alpha.size());
  double acc = 0.0;
  for (int k = 0; k < K; ++k)
    acc += std::abs(static_cast<double>(fit.changepoints_alpha[k].size()) -
                    true_count_per_outcome);
  return acc / K;
}

MetricsReport evaluate(const FitResult& fit, const SplineBasis& basis,
                       const GroundTruth& truth,
                       const DesignMatrices& test_design,
                       const Eigen::MatrixXd& test_Y) {
  MetricsReport r;
  r.pe = prediction_error(fit.coef, test_design, test_Y);
  std::tie(r.ise_beta, r.ise_alpha) = ise(fit.coef, basis, truth);
  const SelectionMetrics sel =
      selection_metrics(fit.active_set, truth.active_set, truth.p);
  r.tp = sel.tp;
  r.fp = sel.fp;
  r.recall = sel.recall;
  r.precision = sel.precision;
  r.specificity = sel.specificity;
  r.f1 = sel.f1;
  r.cp_err = cp_count_error(fit);
  return r;
}

MetricsReport aggregate(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw DataError("no reports to aggregate");
  MetricsReport m;
  double cov_acc = 0.0;
  int cov_n = 0;
  for (const auto& r : reports) {
    m.pe += r.pe;
    m.ise_beta += r.ise_beta;
    m.ise_alpha += r.ise_alpha;
    m.tp += r.tp;
    m.fp += r.fp;
    m.recall += r.recall;
    m.precision += r.precision;
    m.specificity += r.specificity;
    m.f1 += r.f1;
    m.cp_err += r.cp_err;
    if (r.coverage) {
      cov_acc += *r.coverage;
      ++cov_n;
    }
  }
  const double R = static_cast<double>(reports.size());
  m.pe /= R;
  m.ise_beta /= R;
  m.ise_alpha /= R;
  m.tp /= R;
  m.fp /= R;
  m.recall /= R;
  m.precision /= R;
  m.specificity /= R;
  m.f1 /= R;
  m.cp_err /= R;
  if (cov_n > 0) m.coverage = cov_acc / cov_n;
  return m;
}

}  // namespace ajl
