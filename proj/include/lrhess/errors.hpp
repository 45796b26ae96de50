#pragma once

#include <stdexcept>
#include <string>

namespace lrhess {

// Violated operation precondition (bad dimension, out-of-range parameter).
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

// Requested object would exceed a configured size cap.
class SizeLimitError : public std::length_error {
 public:
  explicit SizeLimitError(const std::string& what) : std::length_error(what) {}
};

// Iterative kernel did not reach its tolerance within the iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// A black-box function returned a non-finite value during a measurement.
class InvalidMeasurementError : public std::runtime_error {
 public:
  explicit InvalidMeasurementError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw PreconditionError(message);
}

}  // namespace lrhess
