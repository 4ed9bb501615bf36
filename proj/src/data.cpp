#include "ajl/data.hpp"

#include "ajl/errors.hpp"

namespace ajl {

Eigen::Index LongitudinalDataset::total_rows() const {
  Eigen::Index n = 0;
  for (const auto& s : subjects) n += s.times.size();
  return n;
}

void LongitudinalDataset::validate() const {
  if (p < 0 || K <= 0) throw StructuralError("dataset needs K >= 1 outcomes");
  if (!(t_lo < t_hi)) throw StructuralError("dataset time domain empty");
  for (const auto& s : subjects) {
    const auto T = s.times.size();
    if (s.Y.rows() != T || s.Y.cols() != K)
      throw StructuralError("subject " + s.id + ": Y shape mismatch");
    if (s.X.rows() != T || s.X.cols() != p)
      throw StructuralError("subject " + s.id + ": X shape mismatch");
    for (Eigen::Index l = 0; l < T; ++l) {
      if (s.times[l] < t_lo || s.times[l] > t_hi)
        throw DomainError("subject " + s.id + " visit " + std::to_string(l) +
                          ": time outside declared domain");
      if (l > 0 && !(s.times[l] > s.times[l - 1]))
        throw StructuralError("subject " + s.id +
                              ": visit times not strictly increasing");
    }
  }
}

LongitudinalDataset LongitudinalDataset::subset(
    const std::vector<int>& subject_idx) const {
  LongitudinalDataset out;
  out.p = p;
  out.K = K;
  out.t_lo = t_lo;
  out.t_hi = t_hi;
  out.subjects.reserve(subject_idx.size());
  for (int i : subject_idx) out.subjects.push_back(subjects.at(i));
  return out;
}

CoefficientSet CoefficientSet::zero(int M, int K, int p) {
  CoefficientSet c;
  c.A = Eigen::MatrixXd::Zero(M, K);
  c.B.assign(p, Eigen::MatrixXd::Zero(M, K));
  return c;
}

bool CoefficientSet::all_finite() const {
  if (!A.allFinite()) return false;
  for (const auto& b : B)
    if (!b.allFinite()) return false;
  return true;
}

}  // namespace ajl
