#ifndef PFREC_ERRORS_HPP
#define PFREC_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pfrec {

// Malformed input data; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::uint64_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                                : what),
        line_(line) {}
  std::uint64_t line() const { return line_; }

 private:
  std::uint64_t line_;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyDatasetError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation would exceed a configured budget (e.g. PPC cell budget).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A non-finite variational parameter was produced; names the iteration and
// the offending parameter coordinate.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::uint32_t iteration, std::string parameter)
      : std::runtime_error("non-finite value in " + parameter +
                           " at iteration " + std::to_string(iteration)),
        iteration_(iteration),
        parameter_(std::move(parameter)) {}
  std::uint32_t iteration() const { return iteration_; }
  const std::string& parameter() const { return parameter_; }

 private:
  std::uint32_t iteration_;
  std::string parameter_;
};

}  // namespace pfrec

#endif
