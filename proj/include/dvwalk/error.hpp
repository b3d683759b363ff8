#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dvwalk {

/// Malformed or out-of-contract input (bad shapes, non-finite values, bad indices).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A truncated expansion could not reach the requested accuracy.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_bound)
      : std::runtime_error(what), best_bound_(best_bound) {}

  double best_bound() const noexcept { return best_bound_; }

 private:
  double best_bound_;
};

/// Syntax or evaluation failure in a potential expression; `offset()` is a byte offset.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Requested continuum reference does not exist for the given potential.
class ReferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dvwalk
