#pragma once

#include <stdexcept>
#include <string>

namespace kobound {

/// Violated precondition or malformed input value.
class InputError : public std::invalid_argument {
  public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numeric routine produced non-finite values or a factorization failed.
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed config or CSV content; carries a 1-based line number when known.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& what, long line = 0)
        : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    long line() const { return line_; }

  private:
    long line_;
};

/// Target error at or below the asymptotic floor; no sample size can reach it.
class InfeasibleTargetError : public std::runtime_error {
  public:
    explicit InfeasibleTargetError(const std::string& what) : std::runtime_error(what) {}
};

/// Ratio with a vanishing denominator (e.g. a zero slope in the divisor).
class UndefinedRatioError : public std::runtime_error {
  public:
    explicit UndefinedRatioError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kobound
