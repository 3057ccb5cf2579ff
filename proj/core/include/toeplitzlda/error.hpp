#pragma once

#include <stdexcept>
#include <string>

namespace toeplitzlda {

/// Coarse classification of failures. The CLI maps each kind onto an exit code.
enum class ErrorKind {
  kDimension,  // shapes or indices do not agree
  kDomain,     // argument outside its admissible range
  kNumerical,  // factorization breakdown, non-finite result
  kFormat,     // malformed or inconsistent dataset / model file
  kIo,         // filesystem access
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the block Levinson recursion when a leading principal block
/// minor is not positive definite.
class SolveBreakdown : public Error {
 public:
  SolveBreakdown(std::size_t step, const std::string& what)
      : Error(ErrorKind::kNumerical, what), step_(step) {}

  /// Zero-based recursion step (number of leading blocks minus one).
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace toeplitzlda
