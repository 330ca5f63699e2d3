#pragma once

#include <stdexcept>
#include <string>

namespace oqe {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// An input violated a documented precondition or invariant.
class ContractViolation : public Error {
  public:
    explicit ContractViolation(const std::string& msg) : Error(msg) {}
};

/// Dimension bookkeeping mismatch (matrix shapes, tensor factors, step counts).
class ShapeError : public ContractViolation {
  public:
    explicit ShapeError(const std::string& msg) : ContractViolation(msg) {}
};

/// A parameter is outside the mathematical domain of an operation.
class DomainError : public ContractViolation {
  public:
    explicit DomainError(const std::string& msg) : ContractViolation(msg) {}
};

/// A dense-algebra routine failed to converge or lost rank.
class NumericalFailure : public Error {
  public:
    explicit NumericalFailure(const std::string& msg) : Error(msg) {}
};

/// Polar decomposition of a (numerically) rank-deficient matrix.
class DegeneratePolar : public NumericalFailure {
  public:
    explicit DegeneratePolar(const std::string& msg) : NumericalFailure(msg) {}
};

/// A dense representation would exceed the configured size cap.
class ResourceError : public Error {
  public:
    explicit ResourceError(const std::string& msg) : Error(msg) {}
};

/// The assumed environment bound is too small for the observed state;
/// carries the measured leakage weight.
class DBoundTooSmall : public Error {
  public:
    DBoundTooSmall(const std::string& msg, double leakage)
        : Error(msg), leakage_(leakage) {}
    double leakage() const { return leakage_; }

  private:
    double leakage_;
};

/// The optimizer produced a non-finite loss.
class OptimizationDiverged : public Error {
  public:
    explicit OptimizationDiverged(const std::string& msg) : Error(msg) {}
};

/// File read/write failure.
class IoError : public Error {
  public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace oqe
