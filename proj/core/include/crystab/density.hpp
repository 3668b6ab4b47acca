#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "crystab/lattice.hpp"

namespace crystab {

enum class DensityFamily { gaussian, wai_product, wai_smooth, modulated, custom_table, custom };

const char* to_string(DensityFamily family);

/// Charge density of a single ion, described by its Fourier transform
/// sigma~(xi) = integral exp(i xi.x) sigma(x) dx.
///
/// Instances are immutable and cheap to copy; the transform is shared.
class IonDensity {
 public:
  using Transform = std::function<cplx(const Vec3&)>;
  using Params = std::map<std::string, double>;

  /// descriptor: canonical JSON of the shape parameters (everything except eZ).
  IonDensity(DensityFamily family, double total_charge, Transform transform, Params params = {},
             std::string descriptor = {});

  cplx operator()(const Vec3& xi) const { return (*transform_)(xi); }
  cplx sigma_hat(const Vec3& xi) const { return (*transform_)(xi); }

  /// eZ = sigma~(0), as declared by the constructor.
  double total_charge() const noexcept { return total_charge_; }
  DensityFamily family() const noexcept { return family_; }
  const Params& params() const noexcept { return params_; }
  const std::string& descriptor() const noexcept { return descriptor_; }

  /// Same shape scaled to a new total charge (the sigma = e mu family).
  IonDensity rescaled(double total_charge) const;

 private:
  DensityFamily family_;
  double total_charge_;
  std::shared_ptr<const Transform> transform_;
  Params params_;
  std::string descriptor_;
};

/// 2 sin(t/2) / t exp(-t^2), exactly zero at t in 2 pi Z \ {0}.
double wai_factor(double t);

/// sigma~(xi) = eZ f(xi1) f(xi2) f(xi3) with f = wai_factor.
IonDensity make_wai_product_density(double total_charge);

/// sigma~(xi) = eZ exp(-width |xi|^2).
IonDensity make_gaussian_density(double total_charge, double width);

/// sigma~(xi) = eZ [f(xi1) f(xi2) f(xi3) + weight * h(xi) exp(-width |xi|^2)],
/// h(xi) = sum_k sin^2(xi_k / 2). Vanishes on 2 pi Z^3 \ 0 without the coordinate-plane
/// degeneracy of the pure product.
IonDensity make_wai_smooth_density(double total_charge, double weight = 1.0, double width = 0.05);

/// Base density multiplied by the mask s + (1 - s) sum_{k in 2 pi Z^3} exp(-|xi - k|^2 / width^2),
/// which keeps values on the dual lattice and damps everything in between.
IonDensity make_modulated_density(const IonDensity& base, double s, double width = 0.5);

/// Tabulated sigma~ on a regular grid, trilinear interpolation, zero outside the table.
/// CSV rows: xi1,xi2,xi3,re,im (an optional non-numeric header line is skipped).
IonDensity load_table_density(const std::filesystem::path& csv);

/// Parse {"family": ..., "eZ": ..., "params": {...}}. When eZ is absent, default_charge is used.
IonDensity density_from_json(const std::string& json_text, double default_charge);

/// Canonical JSON of the density spec, stable across runs (used for hashing).
std::string density_spec_json(const IonDensity& d);

struct WienerMatrix {
  Eigen::Matrix3cd sigma;
  /// Estimate of the neglected tail C^2 sum_{|m|_inf > M_sum} <2 pi m>^{-4}.
  double tail_bound = 0.0;
};

/// Sigma(theta) = sum_{|m|_inf <= M_sum} [xi xi^T / |xi|^2 |sigma~(xi)|^2]_{xi = 2 pi m - theta}.
WienerMatrix wiener_matrix(const IonDensity& d, const BlochParameter& theta, int m_sum = 8,
                           double decay_constant = -1.0);

/// Smallest eigenvalue of a Hermitian 3x3 matrix, computed after normalizing by its largest entry.
double min_eigenvalue_3x3(const Eigen::Matrix3cd& m);

/// Smallest eigenvalue of rows^* rows for a K x 3 factor, via row-sorted pivoted QR and a Jacobi SVD
/// of the triangular factor. Keeps relative accuracy when row norms span many orders of magnitude.
double gram_min_eigenvalue(const Eigen::Matrix<cplx, Eigen::Dynamic, 3>& rows);

/// Rows sqrt(|sigma~(xi)|^2 / |xi|^2) xi of Sigma(theta) = rows^* rows, |m|_inf <= m_sum.
Eigen::Matrix<cplx, Eigen::Dynamic, 3> wiener_factor(const IonDensity& d, const BlochParameter& theta, int m_sum = 8);

/// min eig Sigma(theta) computed from the factor.
double wiener_min_eigenvalue(const IonDensity& d, const BlochParameter& theta, int m_sum = 8);

struct WienerSample {
  Vec3 theta;
  double min_eig;
};

struct ConditionReport {
  bool satisfies_ro_plus = false;
  bool satisfies_wai = false;
  double wai_max_violation = 0.0;
  double decay_constant = 0.0;
  std::vector<WienerSample> wiener_min_eig;
};

/// Checks sigma~(0) = eZ > 0, sigma~(2 pi m) = 0 for 0 < |m|_inf <= m_chk (relative tolerance
/// tol_rel), fits C in |sigma~(xi)| <= C <xi>^{-2} on |xi| <= 2 pi m_chk, and samples the
/// Wiener matrix on a cell-centred 4^3 grid. Never throws.
ConditionReport check_conditions(const IonDensity& d, double tol_rel = 1e-12, int m_chk = 8);

}  // namespace crystab
