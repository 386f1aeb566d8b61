#pragma once

#include <stdexcept>
#include <string>

namespace sccm {

// Error taxonomy mirrors the CLI exit codes: usage -> 1, data -> 2, numeric -> 3.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside its mathematical domain (e.g. copula input not in [0,1]).
struct DomainError : NumericError {
  explicit DomainError(const std::string& what) : NumericError(what) {}
};

// Exact inference was asked to build a table larger than the budget allows.
struct CapacityError : NumericError {
  explicit CapacityError(const std::string& what) : NumericError(what) {}
};

}  // namespace sccm
