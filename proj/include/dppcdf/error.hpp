#ifndef DPPCDF_ERROR_HPP
#define DPPCDF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dppcdf {

enum class ErrorCategory {
  input,         // malformed argument, index out of range, dimension mismatch
  conditioning,  // matrix too close to singular for the requested conversion
  capability,    // operation not available for this kind of input
  invalid_kernel,// kernel does not define a probability measure
  evaluation,    // a transform evaluation failed at a quadrature node
  io             // unreadable or malformed file
};

inline const char *to_string(ErrorCategory c) {
  switch (c) {
  case ErrorCategory::input: return "input";
  case ErrorCategory::conditioning: return "conditioning";
  case ErrorCategory::capability: return "capability";
  case ErrorCategory::invalid_kernel: return "invalid-kernel";
  case ErrorCategory::evaluation: return "evaluation";
  case ErrorCategory::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, const std::string &what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

private:
  ErrorCategory category_;
};

struct InputError : Error {
  explicit InputError(const std::string &what) : Error(ErrorCategory::input, what) {}
};

struct CapabilityError : Error {
  explicit CapabilityError(const std::string &what) : Error(ErrorCategory::capability, what) {}
};

struct InvalidKernelError : Error {
  explicit InvalidKernelError(const std::string &what)
      : Error(ErrorCategory::invalid_kernel, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string &what) : Error(ErrorCategory::io, what) {}
};

class ConditioningError : public Error {
public:
  ConditioningError(const std::string &what, double condition_number)
      : Error(ErrorCategory::conditioning,
              what + " (estimated condition number " + std::to_string(condition_number) + ")"),
        condition_number_(condition_number) {}

  double condition_number() const noexcept { return condition_number_; }

private:
  double condition_number_;
};

/// Raised by the transform sampler; carries the index of the node that failed.
class EvaluationError : public Error {
public:
  EvaluationError(const std::string &what, std::size_t node)
      : Error(ErrorCategory::evaluation,
              "transform evaluation failed at node " + std::to_string(node) + ": " + what),
        node_(node) {}

  std::size_t node() const noexcept { return node_; }

private:
  std::size_t node_;
};

} // namespace dppcdf

#endif // DPPCDF_ERROR_HPP
