#pragma once

#include <stdexcept>
#include <string>

namespace teamlq {

/// Invalid problem data (bad dimensions, asymmetric Q, rank-deficient blocks).
/// The message names the offending field.
class SpecError : public std::runtime_error {
 public:
  explicit SpecError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric failure in an otherwise valid problem (singular system, ...).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File-format error; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, long line)
      : std::runtime_error(line >= 0 ? msg + " (line " + std::to_string(line) + ")"
                                     : msg),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// Fixed-point iteration hit the sweep limit while still moving.
class PbpNonConvergence : public std::runtime_error {
 public:
  PbpNonConvergence(double last_change, double tol)
      : std::runtime_error("pbp: no convergence, last sup-change " +
                           std::to_string(last_change) + " > 10*tol, tol " +
                           std::to_string(tol)),
        last_change_(last_change) {}
  double last_change() const { return last_change_; }

 private:
  double last_change_;
};

}  // namespace teamlq
