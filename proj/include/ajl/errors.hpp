#pragma once

#include <stdexcept>
#include <string>

namespace ajl {

// Bad user-supplied configuration (grid sizes, penalty signs, ...).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Evaluation outside the basis domain, out-of-range times in a dataset.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& msg) : std::domain_error(msg) {}
};

// Dimension mismatches between objects that should agree.
class StructuralError : public std::logic_error {
 public:
  explicit StructuralError(const std::string& msg) : std::logic_error(msg) {}
};

// Malformed input files.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite objectives, singular systems, saturated inference models.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Ill-posed post-selection inference requests (saturated model, band for
// an unselected covariate).
class InferenceError : public std::runtime_error {
 public:
  explicit InferenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ajl
