#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crystab/bloch_operators.hpp"

namespace crystab {

/// <Y, B Y>.
double energy_form(const BlochBlocks& blocks, const StateVector& y);
double energy_form(const BlochBlocks& blocks, const CVector& flat);

/// 2<Psi1, H0 Psi1> + ||2 f Psi1 + g Q||^2 + 2<Psi2, H0 Psi2> + Q.T2 Q + P.P / M.
double decomposed_energy_form(const BlochBlocks& blocks, const StateVector& y);

enum class Verdict { positive, degenerate, negative };
const char* to_string(Verdict v);

struct CoercivityOptions {
  /// Relative tolerance of the verdict.
  double tol = 1e-10;
  /// Refine the (Psi1, Q) sector through its Schur complement when the dense value is below
  /// refine_below * ||B||_inf.
  double refine_below = 1e-6;
  int max_refinements = 50;
};

struct Coercivity {
  double kappa = 0.0;
  /// Sector minima: (Psi1, Q), Psi2 and P.
  double kappa_psi1_q = 0.0;
  double kappa_psi2 = 0.0;
  double kappa_p = 0.0;
  /// Scale used by the verdict: ||B||_inf, or ||T1||_inf + ||T2||_inf after refinement.
  double scale = 0.0;
  bool refined = false;
  Verdict verdict = Verdict::degenerate;
};

/// Smallest generalized eigenvalue of B v = kappa G_V v, with G_V = gram_V.
Coercivity coercivity(const BlochBlocks& blocks, const CoercivityOptions& opts = {});

/// Dense generalized eigenvalue over the full matrix, no sector split.
double coercivity_dense(const BlochBlocks& blocks);

/// Uniform L^3 grid of [0, 2 pi)^3 with points inside the exclusion balls removed.
/// cell_centred shifts the nodes to 2 pi (k + 1/2) / L.
std::vector<BlochParameter> uniform_theta_grid(int L, double exclusion_radius, bool cell_centred = true);

struct ScanPoint {
  Vec3 theta = Vec3::Zero();
  double dist = 0.0;
  double kappa = 0.0;
  double sigma_min_eig = 0.0;
  Verdict verdict = Verdict::degenerate;
  bool refined = false;
  std::string error;
};

struct StabilityScan {
  std::vector<ScanPoint> points;
  int cutoff = 0;
  double e = 0.0;
  std::size_t positive = 0, degenerate = 0, negative = 0, failed = 0;

  double positive_fraction() const;
  /// Index of the smallest kappa among the successful points, or -1.
  long argmin_kappa() const;
};

struct ScanOptions {
  unsigned threads = 1;
  int wiener_terms = 8;
  CoercivityOptions coercivity;
};

StabilityScan positivity_scan(const BlochModel& model, const std::vector<BlochParameter>& grid,
                              const ScanOptions& opts = {});

/// Per-theta minimum eigenvalue of Sigma(theta) only.
std::vector<ScanPoint> wiener_scan(const IonDensity& d, const std::vector<BlochParameter>& grid,
                                   const ScanOptions& opts = {});

/// e times the base shape rescaled to its own total charge and multiplied by the lattice mask.
/// Throws InvalidArgument when mu~(2 pi m0) vanishes.
IonDensity build_counterexample(const IonDensity& base, const IVec3& m0, double s, double e, double width = 0.5);

struct NegativeMode {
  Vec3 theta = Vec3::Zero();
  CVec3 q = CVec3::Zero();
  double value = 0.0;
  /// Y = (0, 0, Q, 0).
  StateVector witness;
};

/// Minimizes the smallest eigenvalue of T(theta) = T1(theta) + T2 over the grid and returns it when
/// below -tol * max(||T1||, ||T2||).
std::optional<NegativeMode> find_negative_mode(const BlochModel& model, const std::vector<BlochParameter>& grid,
                                               double tol = 1e-10, unsigned threads = 1);

/// sum_{m != 0} [xi xi^T / |xi|^2 |sigma~(xi)|^2]_{xi = 2 pi m} over the basis; equals
/// e^2 sum [... |mu~|^2] for sigma = e mu and is the leading term of -T2 for small e.
CMatrix3 t2_small_charge_limit(const IonDensity& sigma, const DualBasis& basis);

}  // namespace crystab
