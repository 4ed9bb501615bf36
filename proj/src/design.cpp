#include "ajl/design.hpp"

#include "ajl/errors.hpp"

namespace ajl {

DesignMatrices::DesignMatrices(const LongitudinalDataset& data,
                               const SplineBasis& basis)
    : basis_(basis), K_(data.K), bandwidth_(basis.bandwidth()) {
  data.validate();
  if (data.t_lo < basis.t_lo() || data.t_hi > basis.t_hi())
    throw DomainError("dataset domain exceeds basis domain");

  const Eigen::Index N = data.total_rows();
  const int M = basis.num_basis();
  Z_ = Eigen::MatrixXd::Zero(N, M);
  Xcov_.resize(N, data.p);
  Y_.resize(N, data.K);
  span_.assign(static_cast<size_t>(N), 0);
  rowIndex_.resize(static_cast<size_t>(N));

  // Deterministic row order: subjects in input order, visits in time order.
  Eigen::Index r = 0;
  double local[32];
  for (int i = 0; i < data.num_subjects(); ++i) {
    const auto& s = data.subjects[i];
    for (Eigen::Index l = 0; l < s.times.size(); ++l, ++r) {
      int first;
      try {
        first = basis.eval_local(s.times[l], local);
      } catch (const DomainError&) {
        throw DomainError("subject " + s.id + " visit " + std::to_string(l) +
                          ": time outside basis domain");
      }
      for (int q = 0; q < bandwidth_; ++q) Z_(r, first + q) = local[q];
      span_[static_cast<size_t>(r)] = first;
      Xcov_.row(r) = s.X.row(l);
      Y_.row(r) = s.Y.row(l);
      rowIndex_[static_cast<size_t>(r)] = {i, static_cast<int>(l)};
    }
  }
}

Eigen::MatrixXd DesignMatrices::block(int j) const {
  Eigen::MatrixXd out = Z_;
  out.array().colwise() *= Xcov_.col(j).array();
  return out;
}

Eigen::MatrixXd DesignMatrices::Zt_times(const Eigen::MatrixXd& V) const {
  const int c = static_cast<int>(V.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(M(), c);
  for (Eigen::Index r = 0; r < rows(); ++r) {
    const int s = span_[static_cast<size_t>(r)];
    for (int q = 0; q < bandwidth_; ++q) {
      const double z = Z_(r, s + q);
      for (int k = 0; k < c; ++k) out(s + q, k) += z * V(r, k);
    }
  }
  return out;
}

Eigen::MatrixXd DesignMatrices::Xjt_times(int j,
                                          const Eigen::MatrixXd& V) const {
  const int c = static_cast<int>(V.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(M(), c);
  for (Eigen::Index r = 0; r < rows(); ++r) {
    const double x = Xcov_(r, j);
    if (x == 0.0) continue;
    const int s = span_[static_cast<size_t>(r)];
    for (int q = 0; q < bandwidth_; ++q) {
      const double zx = Z_(r, s + q) * x;
      for (int k = 0; k < c; ++k) out(s + q, k) += zx * V(r, k);
    }
  }
  return out;
}

void DesignMatrices::add_Xj_times(int j, const Eigen::MatrixXd& C,
                                  Eigen::MatrixXd& V) const {
  const int c = static_cast<int>(C.cols());
  for (Eigen::Index r = 0; r < rows(); ++r) {
    const double x = Xcov_(r, j);
    if (x == 0.0) continue;
    const int s = span_[static_cast<size_t>(r)];
    for (int k = 0; k < c; ++k) {
      double acc = 0.0;
      for (int q = 0; q < bandwidth_; ++q) acc += Z_(r, s + q) * C(s + q, k);
      V(r, k) += x * acc;
    }
  }
}

void DesignMatrices::add_Z_times(const Eigen::MatrixXd& C,
                                 Eigen::MatrixXd& V) const {
  const int c = static_cast<int>(C.cols());
  for (Eigen::Index r = 0; r < rows(); ++r) {
    const int s = span_[static_cast<size_t>(r)];
    for (int k = 0; k < c; ++k) {
      double acc = 0.0;
      for (int q = 0; q < bandwidth_; ++q) acc += Z_(r, s + q) * C(s + q, k);
      V(r, k) += acc;
    }
  }
}

Eigen::MatrixXd DesignMatrices::gram_Z() const {
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(M(), M());
  for (Eigen::Index r = 0; r < rows(); ++r) {
    const int s = span_[static_cast<size_t>(r)];
    for (int a = 0; a < bandwidth_; ++a)
      for (int b = 0; b < bandwidth_; ++b)
        G(s + a, s + b) += Z_(r, s + a) * Z_(r, s + b);
  }
  return G;
}

Eigen::MatrixXd DesignMatrices::gram_block(int j) const {
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(M(), M());
  for (Eigen::Index r = 0; r < rows(); ++r) {
    const double x2 = Xcov_(r, j) * Xcov_(r, j);
    if (x2 == 0.0) continue;
    const int s = span_[static_cast<size_t>(r)];
    for (int a = 0; a < bandwidth_; ++a)
      for (int b = 0; b < bandwidth_; ++b)
        G(s + a, s + b) += x2 * Z_(r, s + a) * Z_(r, s + b);
  }
  return G;
}

Eigen::MatrixXd DesignMatrices::predict(const CoefficientSet& coef) const {
  // The outcome count comes from the coefficients, not the stored Y, so
  // single-outcome submodels can predict against a shared design.
  if (coef.M() != M() || coef.p() != p())
    throw StructuralError("coefficient dimensions do not match design");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows(), coef.K());
  add_Z_times(coef.A, out);
  for (int j = 0; j < p(); ++j) add_Xj_times(j, coef.B[j], out);
  return out;
}

Eigen::VectorXd reconstruct(const Eigen::VectorXd& coef_column,
                            const SplineBasis& basis,
                            const Eigen::VectorXd& grid) {
  if (coef_column.size() != basis.num_basis())
    throw StructuralError("coefficient length does not match basis");
  Eigen::VectorXd out(grid.size());
  double local[32];
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    const int first = basis.eval_local(grid[g], local);
    double acc = 0.0;
    for (int q = 0; q < basis.bandwidth(); ++q)
      acc += local[q] * coef_column[first + q];
    out[g] = acc;
  }
  return out;
}

}  // namespace ajl
