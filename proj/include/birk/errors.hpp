#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace birk {

// Root of every error thrown by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or invalid input data. `pointer` is a JSON pointer when the data came from JSON.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::string pointer = {})
      : Error(pointer.empty() ? what : what + " (at " + pointer + ")"), pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, double condition_estimate)
      : Error(what + " (condition estimate " + std::to_string(condition_estimate) + ")"),
        condition_(condition_estimate) {}
  double condition_estimate() const noexcept { return condition_; }

 private:
  double condition_;
};

// z lies on one of the lines Re(z b_j) = 0.
class AdmissibilityError : public Error {
 public:
  AdmissibilityError(const std::string& what, int block) : Error(what), block_(block) {}
  int block() const noexcept { return block_; }

 private:
  int block_;
};

// The operation's hypotheses do not hold for this problem.
class ApplicabilityError : public Error {
 public:
  using Error::Error;
};

// Boundary conditions are not in separated (split) form.
class StructureError : public ApplicabilityError {
 public:
  using ApplicabilityError::ApplicabilityError;
};

class StiffnessError : public Error {
 public:
  StiffnessError(const std::string& what, std::complex<double> lambda) : Error(what), lambda_(lambda) {}
  std::complex<double> lambda() const noexcept { return lambda_; }

 private:
  std::complex<double> lambda_;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

class PairingError : public Error {
 public:
  using Error::Error;
};

}  // namespace birk
