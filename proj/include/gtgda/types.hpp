#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gtgda {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrixd = Matrix<double>;
using Vectord = Vector<double>;

using Index = Eigen::Index;

// Error hierarchy. Every failure raised by the library derives from Error so
// callers (the CLI in particular) can map them onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class UnsupportedTopology : public Error {
 public:
  using Error::Error;
};

class NumericFailure : public Error {
 public:
  NumericFailure(const std::string& what, std::size_t iterations)
      : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
        iterations_(iterations) {}

  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

class GenerationFailure : public Error {
 public:
  using Error::Error;
};

/// Raised when a problem or run configuration breaks one of the standing
/// assumptions (smoothness/strong concavity, quadratic form, coupling rank,
/// doubly-stochastic weights). `assumption()` is the 1-based index.
class AssumptionViolation : public Error {
 public:
  AssumptionViolation(int assumption, const std::string& what)
      : Error("assumption " + std::to_string(assumption) + " violated: " + what),
        assumption_(assumption) {}

  int assumption() const noexcept { return assumption_; }

 private:
  int assumption_;
};

class ReferenceFailure : public Error {
 public:
  using Error::Error;
};

class Divergence : public Error {
 public:
  explicit Divergence(std::size_t iteration)
      : Error("iterates diverged at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace gtgda
