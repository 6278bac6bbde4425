#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace born_psa {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// K x N synaptic weight matrix; column n is the measurement direction w_n.
/// Unit column norms are reached only asymptotically by the learning rules,
/// so they are checked with columns_unit_norm() rather than enforced.
template <typename Scalar>
using WeightMatrix = Matrix<Scalar>;

using Index = Eigen::Index;

/// Input outside the domain of a formula (zero-norm vector, empty batch, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller violated a documented precondition (non-unit column, bad projector set, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative numerical routine did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A learning rule produced a non-finite or runaway weight matrix.
class LearnerDiverged : public std::runtime_error {
 public:
  explicit LearnerDiverged(std::int64_t iteration)
      : std::runtime_error("learner diverged at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}

  std::int64_t iteration() const noexcept { return iteration_; }

 private:
  std::int64_t iteration_;
};

}  // namespace born_psa
