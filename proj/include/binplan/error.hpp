#pragma once

#include <stdexcept>
#include <string>

namespace binplan {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was not met (wrong kind, bad shapes, K > N, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A layer geometry produces non-positive output dimensions.
class InvalidGeometry : public Error {
 public:
  using Error::Error;
};

/// Malformed JSON input; carries a 1-based line/column.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// Well-formed input that violates a named invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::string invariant, std::string layer, const std::string& detail)
      : Error("invariant '" + invariant + "' violated" + (layer.empty() ? "" : " by layer '" + layer + "'") +
              ": " + detail),
        invariant_(std::move(invariant)),
        layer_(std::move(layer)) {}

  const std::string& invariant() const noexcept { return invariant_; }
  const std::string& layer() const noexcept { return layer_; }

 private:
  std::string invariant_;
  std::string layer_;
};

/// Exhaustive enumeration refused because the sign space is too large.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace binplan
