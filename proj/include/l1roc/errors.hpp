#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace l1roc {

/// Bad sizes, malformed input, or an argument outside its documented range.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A parameter outside the problem's parameter box.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Persisted file could not be parsed or does not match what the reader expects.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver ran out of iterations. Carries the last iterate so
/// callers can decide whether it is still useful.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd last_iterate, double residual_norm,
                   int iterations, std::optional<long> time_index = std::nullopt)
      : std::runtime_error(what),
        last_iterate_(std::move(last_iterate)),
        residual_norm_(residual_norm),
        iterations_(iterations),
        time_index_(time_index) {}

  const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
  double residual_norm() const noexcept { return residual_norm_; }
  int iterations() const noexcept { return iterations_; }
  std::optional<long> time_index() const noexcept { return time_index_; }

 private:
  Eigen::VectorXd last_iterate_;
  double residual_norm_;
  int iterations_;
  std::optional<long> time_index_;
};

}  // namespace l1roc
