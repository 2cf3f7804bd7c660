#pragma once

#include <stdexcept>
#include <string>

namespace acnote {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inputs that would make a Gaussian problem singular (zero vol, zero row variance).
class DegenerateInputError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Configuration exceeds the scenario budget (term count grows as 2^k).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical method stopped before reaching its tolerance. Carries the
/// best estimate obtained so far.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_estimate, double err_est)
      : std::runtime_error(what), best_estimate_(best_estimate), err_est_(err_est) {}

  double best_estimate() const noexcept { return best_estimate_; }
  double err_est() const noexcept { return err_est_; }

 private:
  double best_estimate_;
  double err_est_;
};

}  // namespace acnote
