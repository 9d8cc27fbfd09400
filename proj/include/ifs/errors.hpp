#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ifs {

/// Rejected input: wrong shape, non-finite values, violated preconditions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

/// A numerical procedure could not produce a well-defined answer.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gram matrix too ill-conditioned to solve the normal equations.
class RankDeficientError : public NumericError {
 public:
  RankDeficientError(const std::string& what, double condition)
      : NumericError(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Corrected Gram matrix lost positive definiteness even after ridge jitter.
class DegenerateError : public NumericError {
 public:
  using NumericError::NumericError;
};

class UndefinedConditionalError : public NumericError {
 public:
  using NumericError::NumericError;
};

class CalibrationError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Failure inside one Monte Carlo replication.
class ReplicationError : public std::runtime_error {
 public:
  ReplicationError(std::size_t replication, const std::string& what)
      : std::runtime_error("replication " + std::to_string(replication) + ": " + what),
        replication_(replication) {}
  std::size_t replication() const noexcept { return replication_; }

 private:
  std::size_t replication_;
};

}  // namespace ifs
