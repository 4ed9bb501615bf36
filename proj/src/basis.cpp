#include "ajl/basis.hpp"

#include <algorithm>
#include <cmath>

#include "ajl/errors.hpp"

namespace ajl {

SplineBasis::SplineBasis(int num_basis, int degree, double t_lo, double t_hi)
    : num_basis_(num_basis), degree_(degree), t_lo_(t_lo), t_hi_(t_hi) {
  if (degree < 0) throw ConfigError("spline degree must be >= 0");
  if (num_basis < degree + 1)
    throw ConfigError("basis underdetermined: need M >= degree+1, got M=" +
                      std::to_string(num_basis) +
                      ", degree=" + std::to_string(degree));
  if (!(t_lo < t_hi)) throw ConfigError("empty basis domain");

  // Clamped uniform knot vector: degree+1 repeats at each boundary and
  // M - degree - 1 equally spaced interior knots.
  const int n_interior = num_basis - degree - 1;
  knots_.reserve(num_basis + degree + 1);
  for (int i = 0; i <= degree; ++i) knots_.push_back(t_lo);
  for (int i = 1; i <= n_interior; ++i)
    knots_.push_back(t_lo + (t_hi - t_lo) * i / (n_interior + 1));
  for (int i = 0; i <= degree; ++i) knots_.push_back(t_hi);
}

int SplineBasis::find_span(double t) const {
  // Span index i with knots_[i] <= t < knots_[i+1]; t == t_hi maps into
  // the last nondegenerate span.
  if (t >= t_hi_) return num_basis_ - 1;
  auto it = std::upper_bound(knots_.begin() + degree_,
                             knots_.end() - degree_ - 1, t);
  return static_cast<int>(it - knots_.begin()) - 1;
}

int SplineBasis::eval_local(double t, double* values) const {
  if (!contains(t))
    throw DomainError("basis evaluation at t=" + std::to_string(t) +
                      " outside domain [" + std::to_string(t_lo_) + ", " +
                      std::to_string(t_hi_) + "]");
  const int span = find_span(t);

  // Cox-de Boor recursion over the degree+1 active functions.
  values[0] = 1.0;
  double left[32], right[32];
  for (int j = 1; j <= degree_; ++j) {
    left[j] = t - knots_[span + 1 - j];
    right[j] = knots_[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = values[r] / denom;
      values[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    values[j] = saved;
  }
  return span - degree_;
}

Eigen::VectorXd SplineBasis::eval(double t) const {
  double local[32];
  const int first = eval_local(t, local);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_basis_);
  for (int j = 0; j <= degree_; ++j) out[first + j] = local[j];
  return out;
}

Eigen::MatrixXd SplineBasis::matrix(const Eigen::VectorXd& times,
                                    std::vector<int>* span_start) const {
  const auto n = times.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, num_basis_);
  if (span_start) span_start->assign(static_cast<size_t>(n), 0);
  double local[32];
  for (Eigen::Index r = 0; r < n; ++r) {
    int first;
    try {
      first = eval_local(times[r], local);
    } catch (const DomainError& e) {
      throw DomainError(std::string(e.what()) + " (row " + std::to_string(r) +
                        ")");
    }
    for (int j = 0; j <= degree_; ++j) out(r, first + j) = local[j];
    if (span_start) (*span_start)[static_cast<size_t>(r)] = first;
  }
  return out;
}

double SplineBasis::edge_time(int m) const {
  if (m < 0 || m >= num_basis_ - 1)
    throw StructuralError("edge index out of range");
  return knots_[static_cast<size_t>(m + degree_)];
}

}  // namespace ajl
