#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crystab/density.hpp"
#include "crystab/lattice.hpp"

namespace crystab {

/// Periodic Poisson solve: Phi_m = e nu_m / |2 pi m|^2, Phi_0 = 0.
/// Throws NeutralityError when |nu_0| > tol.
FourierField solve_potential(const FourierField& nu, double e, double tol = 1e-10);

/// Coefficients of sigma_per on the basis, (sigma_per)_m = sigma~(2 pi m).
FourierField periodized_density(const IonDensity& d, const BasisPtr& basis);

/// rho = sigma_per - e |psi|^2, truncated to the basis of psi.
FourierField charge_density(const FourierField& psi, const IonDensity& d, double e);

/// U = 1/2 sum |2 pi m|^2 |psi_m|^2 + 1/2 sum_{m != 0} |rho_m|^2 / |2 pi m|^2.
double energy_per_cell(const FourierField& psi, const IonDensity& d, double e);

/// H psi with H = -1/2 Delta - e Phi, Phi the potential of rho(psi).
/// dU = 2 Re <H psi, dpsi> for every variation dpsi.
FourierField energy_gradient(const FourierField& psi, const IonDensity& d, double e);

/// Dense matrix of -1/2 Delta - e Phi on the basis of phi.
CMatrix static_hamiltonian(const FourierField& phi, double e);

/// sigma = e mu: the shape rescaled to total charge e Z.
IonDensity charged_density(const IonDensity& shape, double e, double Z);

struct GroundStateOptions {
  double tol = 1e-9;
  int max_iterations = 10000;
  /// Finish with self-consistent sweeps (lowest eigenvector of H at frozen Phi).
  bool scf_refinement = true;
  int max_scf_sweeps = 200;
};

struct GroundState {
  FourierField psi0;
  FourierField phi0;
  double omega0 = 0.0;
  double e = 0.0;
  double Z = 0.0;
  double residual = 0.0;
  double energy = 0.0;
  int iterations = 0;
  std::string density_spec;

  const BasisPtr& basis_ptr() const noexcept { return psi0.basis_ptr(); }
  const DualBasis& basis() const { return psi0.basis(); }

  /// Mean value psi0_0.
  cplx gamma() const;
  /// psi0 minus its mean.
  FourierField chi() const;
  /// sqrt(sum (1 + |2 pi m|^2)^2 |chi_m|^2).
  double chi_H2_norm() const;
  /// nu0 = mu - |psi0|^2, so that rho0 = e nu0.
  FourierField nu0(const IonDensity& d) const;
};

/// Minimizes U on {||psi||^2 = Z} starting from the constant sqrt(Z).
/// d must be neutral against the electrons: sigma~(0) = e Z.
/// Throws ConvergenceError when the residual stays above opts.tol.
GroundState minimize_ground_state(const IonDensity& d, double e, double Z, const BasisPtr& basis,
                                  const GroundStateOptions& opts = {});

/// Euler-Lagrange residual ||H psi - omega psi|| and the Rayleigh quotient omega.
struct Stationarity {
  double omega = 0.0;
  double residual = 0.0;
};
Stationarity stationarity(const FourierField& psi, const IonDensity& d, double e);

struct AsymptoticsRow {
  double e = 0.0;
  double omega0 = 0.0;
  double chi_H2 = 0.0;
  double gamma_defect = 0.0;
  double min_eig_H0 = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

struct AsymptoticsReport {
  std::vector<AsymptoticsRow> rows;
  double slope_omega = 0.0;
  double slope_chi = 0.0;
  /// NaN when fewer than two defects are above round-off.
  double slope_gamma = 0.0;
  double min_eig_H0 = 0.0;
};

/// Least-squares slope of log|y| against log x over entries with |y| > floor.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double floor = 0.0);

/// Ground states of shape.rescaled(e Z) over e_grid and the log-log slopes of
/// |omega0|, ||chi||_{H^2} and ||gamma|^2 - Z|. Needs at least three grid points.
AsymptoticsReport verify_asymptotics(const IonDensity& shape, const std::vector<double>& e_grid, double Z,
                                     const BasisPtr& basis, const GroundStateOptions& opts = {});

/// Writes <stem>.json (metadata) and <stem>.bin (raw complex coefficients of psi0, phi0).
void save_ground_state(const GroundState& gs, const std::filesystem::path& stem, const std::string& key = {});

/// Reads a state written by save_ground_state; returns nullopt when missing or the key differs.
std::optional<GroundState> load_ground_state(const std::filesystem::path& stem, const std::string& key = {});

}  // namespace crystab
