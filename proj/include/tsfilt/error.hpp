#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tsfilt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model document or parameter set violates an invariant. Carries the
/// itemized findings so front ends can list all of them at once.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> findings);
  ValidationError(const std::string& finding);

  const std::vector<std::string>& findings() const { return findings_; }

 private:
  std::vector<std::string> findings_;
};

/// Input outside the domain an operation accepts (index range, membership
/// domain, malformed assignment).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The SDP solver could not produce a usable result.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Filter matrices could not be recovered from a solved assignment.
class ExtractionError : public Error {
 public:
  using Error::Error;
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsfilt
