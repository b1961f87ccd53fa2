#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace robin {

// Bad argument values (non-finite scores, length mismatches, out-of-range arms).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An accessor was called on a state that cannot answer it (e.g. variance of an
// arm that was never pulled).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ROBIN-HOOD cannot finish its warm-up inside the budget.
class InfeasibleBudgetError : public ConfigError {
 public:
  InfeasibleBudgetError(const std::string& what, std::uint64_t minimum_budget)
      : ConfigError(what), minimum_budget_(minimum_budget) {}
  std::uint64_t minimum_budget() const noexcept { return minimum_budget_; }

 private:
  std::uint64_t minimum_budget_;
};

// Correlation of a constant vector, or similar.
class UndefinedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Remote judge failed after all retries.
class QueryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Remote judge answered, but with something we cannot accept.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed dataset or results files.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace robin
