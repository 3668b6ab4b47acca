#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace crystab {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Operands live on different bases or have mismatched dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Quasimomentum lies inside the exclusion ball around the dual lattice.
class ExcludedParameter : public Error {
 public:
  using Error::Error;
};

// A charge density with nonzero cell average was handed to the Poisson solve.
class NeutralityError : public Error {
 public:
  NeutralityError(const std::string& what, double mean) : Error(what), mean_(mean) {}
  double mean() const noexcept { return mean_; }

 private:
  double mean_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

// The energy operator is not positive definite; the spectral propagator does not apply.
class NotPositiveError : public Error {
 public:
  NotPositiveError(const std::string& what, double min_eigenvalue, Eigen::Vector3d theta)
      : Error(what), min_eigenvalue_(min_eigenvalue), theta_(theta) {}
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }
  const Eigen::Vector3d& theta() const noexcept { return theta_; }

 private:
  double min_eigenvalue_;
  Eigen::Vector3d theta_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace crystab
