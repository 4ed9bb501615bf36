#pragma once

#include <istream>
#include <string>

#include "ajl/basis.hpp"
#include "ajl/data.hpp"
#include "ajl/solver.hpp"

namespace ajl {

/// Long-format CSV with header `subject,time,y1..yK,x1..xp`, one row per
/// (subject, visit). Subjects keep first-appearance order, visits keep
/// file order (must be strictly increasing in time per subject).
std::string dataset_to_csv(const LongitudinalDataset& data);

/// Parse errors carry 1-based line numbers. `normalize_time` affinely
/// maps the observed time range onto [0, 1].
LongitudinalDataset dataset_from_csv(std::istream& in,
                                     bool normalize_time = false);
LongitudinalDataset dataset_from_csv_string(const std::string& text,
                                            bool normalize_time = false);

/// Self-describing coefficient serialization: basis (M, degree, domain,
/// knots), A, B blocks, active set, changepoint indices and mapped times.
std::string fit_to_json(const FitResult& result, const SplineBasis& basis);

struct LoadedFit {
  FitResult result;
  SplineBasis basis;
};
LoadedFit fit_from_json(const std::string& text);

}  // namespace ajl
