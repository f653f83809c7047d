#pragma once

#include <stdexcept>
#include <string>

namespace paracycle {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (shape mismatch, even s, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class InvalidGrid : public Error {
 public:
  using Error::Error;
};

class InvalidBoundary : public Error {
 public:
  using Error::Error;
};

/// Input outside the mathematical domain of the model (e.g. T0 <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// p^T A p <= 0 in CG, or a non-positive diagonal entry for point-Jacobi.
class IndefiniteOperator : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf appeared in a Krylov residual.
class SolverDivergence : public Error {
 public:
  using Error::Error;
};

class ZeroPivot : public Error {
 public:
  ZeroPivot(long row, const std::string& what) : Error(what), row_(row) {}
  long row() const { return row_; }

 private:
  long row_;
};

/// A stage of a time integrator produced non-finite values.
class BlowUp : public Error {
 public:
  BlowUp(int stage, const std::string& what) : Error(what), stage_(stage) {}
  int stage() const { return stage_; }

 private:
  int stage_;
};

/// Configuration file problem. `line` is 1-based, 0 when unknown.
class ConfigError : public Error {
 public:
  ConfigError(int line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace paracycle
