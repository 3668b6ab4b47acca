#pragma once

#include <vector>

#include "crystab/bloch.hpp"
#include "crystab/dynamics.hpp"

namespace crystab {

struct SupercellOptions {
  unsigned threads = 1;
  /// The theta = 0 mode is propagated with the operator at zero_mode_shift * (1, 1, 1).
  double zero_mode_shift = 0.3;
  /// When a mode has no positive energy operator, integrate it with RK4 instead of aborting.
  bool ode_fallback = false;
  double rel_tol = 1e-12;
};

struct SupercellTrajectory {
  std::vector<double> times;
  std::vector<SupercellState> states;
  /// L^{-3} sum_k <Y~_k, B(theta_k) Y~_k>; the square of the discrete W-norm when every B is positive.
  std::vector<double> energy;
  std::vector<double> w_norm;
  double max_relative_drift = 0.0;
  bool zero_mode_regularized = false;
  std::vector<Vec3> ode_fallback_thetas;
};

/// Bloch-decomposes the initial data, propagates every mode and reconstructs at each time.
/// Throws NotPositiveError with the offending theta unless opts.ode_fallback is set.
SupercellTrajectory evolve_supercell(const BlochModel& model, const SupercellState& initial,
                                     const std::vector<double>& times, const SupercellOptions& opts = {});

/// Block-diagonal Bloch generator: reconstruct(A(theta_k) decompose(V)_k). theta = 0 is assembled
/// with the xi = 0 Coulomb mode removed.
SupercellState apply_supercell_generator(const BlochModel& model, const SupercellState& v, unsigned threads = 1);

/// Nonlinear electron-ion system on the periodic L^3 supercell, linearized around the ground state
/// by finite differences. Electron fields are split into two complex-linear components (psi_R, psi_I)
/// so that complex directions can be used.
class NonlinearSupercell {
 public:
  NonlinearSupercell(const BlochModel& model, int L);

  int L() const noexcept { return L_; }

  /// (F(X0 + h V) - F(X0)) / h expressed in per-cell coordinates.
  SupercellState difference_quotient(const SupercellState& v, double h) const;

  /// Largest entry of F(X0); zero up to the ground-state residual.
  double equilibrium_defect() const;

 private:
  struct Fine {
    CVector psi_r, psi_i;
    std::vector<CVec3> q, p;
  };

  Fine equilibrium() const;
  Fine embed(const SupercellState& v) const;
  SupercellState extract(const Fine& f) const;
  Fine vector_field(const Fine& x) const;
  CVector convolve(const CVector& a, const CVector& b) const;
  std::size_t fine_index(const IVec3& qint) const;

  const BlochModel& model_;
  int L_;
  int lo_, hi_, side_;
  std::vector<Vec3> freq_;       // 2 pi q per fine index
  std::vector<cplx> sigma_hat_;  // sigma~(2 pi q)
  std::vector<cplx> sigma_neg_;  // sigma~(-2 pi q)
};

struct OracleRow {
  double h = 0.0;
  double defect = 0.0;
  double relative_defect = 0.0;
};

struct OracleReport {
  std::vector<OracleRow> rows;
  /// defect(h_i) / defect(h_{i+1}).
  std::vector<double> ratios;
  double generator_norm = 0.0;
};

/// Compares finite-difference quotients of the nonlinear supercell system with the assembled generator
/// along direction v for each step in hs.
OracleReport linearization_oracle(const BlochModel& model, const SupercellState& v, const std::vector<double>& hs,
                                  unsigned threads = 1);

}  // namespace crystab
