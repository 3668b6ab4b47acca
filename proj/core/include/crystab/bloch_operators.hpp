#pragma once

#include <filesystem>

#include "crystab/density.hpp"
#include "crystab/ground_state.hpp"
#include "crystab/lattice.hpp"

namespace crystab {

using CMatrix3 = Eigen::Matrix3cd;
using CMatrixN3 = Eigen::Matrix<cplx, Eigen::Dynamic, 3>;

struct AssemblyOptions {
  /// Allow theta inside the exclusion ball; symbols with xi = 0 get G = 0 and g = 0.
  bool drop_zero_mode = false;
};

/// All per-theta blocks. Layout of B and A: [Psi1 (N) | Psi2 (N) | Q (3) | P (3)].
struct BlochBlocks {
  Vec3 theta = Vec3::Zero();
  double ion_mass = 1.0;
  CMatrix H0;
  RVector Gdiag;
  CMatrix f;
  CMatrixN3 g;
  CMatrixN3 S;
  CMatrix3 T1;
  CMatrix3 T2;
  CMatrix B;

  Eigen::Index field_size() const noexcept { return H0.rows(); }
  Eigen::Index dimension() const noexcept { return 2 * H0.rows() + 6; }
};

/// theta-independent data of a ground state: the multiplication matrices of psi0 and Phi0 and T2.
class BlochModel {
 public:
  BlochModel(GroundState gs, IonDensity density, double ion_mass);

  const GroundState& ground_state() const noexcept { return gs_; }
  const IonDensity& density() const noexcept { return density_; }
  double ion_mass() const noexcept { return mass_; }
  const CMatrix3& T2() const noexcept { return t2_; }
  const DualBasis& basis() const { return gs_.basis(); }

  CMatrix H0(const Vec3& theta, const AssemblyOptions& opts = {}) const;
  RVector Gdiag(const Vec3& theta, const AssemblyOptions& opts = {}) const;
  CMatrix f(const Vec3& theta, const AssemblyOptions& opts = {}) const;
  CMatrixN3 g(const Vec3& theta, const AssemblyOptions& opts = {}) const;
  /// e^2 psi0 G psi0 assembled directly, without the factors.
  CMatrix psi_G_psi(const Vec3& theta, const AssemblyOptions& opts = {}) const;
  /// e psi0 G (grad sigma) assembled directly, without the factors.
  CMatrixN3 S_direct(const Vec3& theta, const AssemblyOptions& opts = {}) const;

  BlochBlocks blocks(const Vec3& theta, const AssemblyOptions& opts = {}) const;

 private:
  void check(const Vec3& theta, const AssemblyOptions& opts) const;

  GroundState gs_;
  IonDensity density_;
  double mass_;
  CMatrix psi_mult_;
  CMatrix phi_mult_;
  CMatrix3 t2_;
};

CMatrix assemble_H0(const BlochParameter& theta, const GroundState& gs);

struct FactorPair {
  CMatrix f;
  CMatrixN3 g;
};
FactorPair assemble_fg(const BlochParameter& theta, const GroundState& gs, const IonDensity& d);

/// T2 = -sum_m Phi0_m (2 pi m)(2 pi m)^T sigma~(-2 pi m) over the basis.
CMatrix3 assemble_T2(const GroundState& gs, const IonDensity& d);

BlochBlocks assemble_B(const BlochParameter& theta, const GroundState& gs, const IonDensity& d, double ion_mass);

/// (Psi1, Psi2, Q, P) -> (Psi2 / 2, -Psi1 / 2, P, -Q).
CVector apply_J(const CVector& y);
CMatrix J_matrix(Eigen::Index field_size);

/// A = J B, formed by exact row operations.
CMatrix assemble_A(const BlochBlocks& blocks);
CMatrix assemble_A(const CMatrix& B);

/// Rows "row,col,re,im" with a header line.
void dump_matrix_csv(const CMatrix& m, const std::filesystem::path& path, const std::string& comment = {});

}  // namespace crystab
