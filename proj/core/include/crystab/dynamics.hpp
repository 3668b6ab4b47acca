#pragma once

#include <vector>

#include "crystab/bloch_operators.hpp"

namespace crystab {

struct PropagatorConditioning {
  double min_eig_B = 0.0;
  double max_eig_B = 0.0;
  /// ||Lambda^{-1}|| = 1 / sqrt(min eig B).
  double lambda_inv_norm = 0.0;
};

/// Spectral solution of dY/dt = J B Y through Lambda = B^{1/2} and the Hermitian K = i Lambda J Lambda.
class Propagator {
 public:
  /// Throws NotPositiveError when min eig B <= rel_tol * max eig B.
  static Propagator build(const BlochBlocks& blocks, double rel_tol = 1e-12);
  static Propagator build(const CMatrix& B, const Vec3& theta, double rel_tol = 1e-12);

  const Vec3& theta() const noexcept { return theta_; }
  const CMatrix& Lambda() const noexcept { return lambda_; }
  const CMatrix& Lambda_inv() const noexcept { return lambda_inv_; }
  const CMatrix& K() const noexcept { return k_; }
  const RVector& K_eigenvalues() const noexcept { return mu_; }
  const PropagatorConditioning& conditioning() const noexcept { return cond_; }
  Eigen::Index dimension() const noexcept { return lambda_.rows(); }

  /// Lambda^{-1} exp(-i K t) Lambda y0.
  CVector evolve(const CVector& y0, double t) const;
  StateVector evolve(const StateVector& y0, double t) const;
  std::vector<StateVector> evolve(const StateVector& y0, const std::vector<double>& times) const;

  /// ||Lambda y||.
  double energy_norm(const CVector& y) const;
  double energy_norm(const StateVector& y) const { return energy_norm(y.pack()); }

 private:
  Vec3 theta_ = Vec3::Zero();
  CMatrix lambda_;
  CMatrix lambda_inv_;
  CMatrix k_;
  RVector mu_;
  CMatrix out_;  // Lambda^{-1} V
  CMatrix in_;   // V^* Lambda
  PropagatorConditioning cond_;
};

/// Classical fourth-order Runge-Kutta for dy/dt = A y with fixed steps.
CVector rk4_integrate(const CMatrix& A, const CVector& y0, double t, int steps);

}  // namespace crystab
