#ifndef SWVM_ERRORS_H_
#define SWVM_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace swvm {

// Raised when a caller breaks a documented precondition (length mismatch,
// empty bundle, misaligned inputs).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exhaustive enumeration refused because the instance is too large.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ChecksumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown by the learners when --check-conditions is on and a weighting
// breaks condition 1 or 2.
class ConditionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace swvm

#endif  // SWVM_ERRORS_H_
