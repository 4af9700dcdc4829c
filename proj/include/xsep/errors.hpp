#pragma once

#include <stdexcept>
#include <string>

namespace xsep {

// Bad arguments or shapes supplied by the caller. CLI exit code 2.
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed or truncated input files. CLI exit code 3.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical breakdown (singular systems, infeasible constraints). CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace xsep
