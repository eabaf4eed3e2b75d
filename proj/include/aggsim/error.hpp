#pragma once

#include <stdexcept>
#include <string>

namespace aggsim {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by caller-supplied data.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A covariance block could not be inverted even after ridge repair.
class IllConditionedModel : public Error {
 public:
  using Error::Error;
};

/// Input data or configuration failed validation (maps to CLI exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A market problem could not be solved to optimality (maps to CLI exit code 3).
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, std::string problem_dump = {})
      : Error(what), dump_(std::move(problem_dump)) {}

  const std::string& problem_dump() const noexcept { return dump_; }

 private:
  std::string dump_;
};

/// File system or parse failure (maps to CLI exit code 4).
class IoError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace aggsim
