#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace levyest {

/// Base class for all errors raised by the library.
class error : public std::runtime_error {
public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Ill-formed user input: configs, expression sources, option ranges.
/// CLI maps this to exit code 1.
class validation_error : public error {
public:
  using error::error;
};

/// Expression syntax error with a byte offset into the source line.
class parse_error : public validation_error {
public:
  parse_error(const std::string& what, std::size_t position)
      : validation_error(what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

private:
  std::size_t position_;
};

/// Evaluation left the function's domain (log of non-positive, division by
/// zero, sqrt of a negative, non-integer power of a negative base).
class domain_error : public error {
public:
  using error::error;
};

/// A simulated state left the explosion guard.
class explosion_error : public error {
public:
  explosion_error(const std::string& what, std::size_t step)
      : error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const { return step_; }

private:
  std::size_t step_;
};

/// The Malliavin weight DX vanished (or fell below the configured floor):
/// the path carries no usable jump information and must be rejected.
class degenerate_path_error : public error {
public:
  using error::error;
};

/// An iterative solver failed: divergence, stall, or singular system.
class solver_error : public error {
public:
  using error::error;
};

}  // namespace levyest
