#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "crystab/errors.hpp"

namespace crystab {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using IVec3 = std::array<int, 3>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Truncated dual lattice {m in Z^3 : |m|_inf <= M}, lexicographic in (m1, m2, m3).
///
/// A basis element m stands for the periodic exponential exp(-i 2 pi m.x) on the
/// unit torus; coefficients of a field are taken with the kernel exp(+i 2 pi m.x).
class DualBasis {
 public:
  explicit DualBasis(int cutoff);

  int cutoff() const noexcept { return cutoff_; }
  int side() const noexcept { return 2 * cutoff_ + 1; }
  std::size_t size() const noexcept { return points_.size(); }

  const IVec3& point(std::size_t i) const { return points_.at(i); }
  const std::vector<IVec3>& points() const noexcept { return points_; }

  /// Index of m, or nullopt when m lies outside the box.
  std::optional<std::size_t> index_of(const IVec3& m) const noexcept;
  std::size_t zero_index() const noexcept { return size() / 2; }

  /// 2 pi m for the i-th point.
  Vec3 dual_vector(std::size_t i) const;

  bool operator==(const DualBasis& other) const noexcept { return cutoff_ == other.cutoff_; }

 private:
  int cutoff_;
  std::vector<IVec3> points_;
};

using BasisPtr = std::shared_ptr<const DualBasis>;

BasisPtr make_basis(int cutoff);

/// Default radius of the exclusion ball around points of 2 pi Z^3.
inline constexpr double kDefaultExclusion = 1e-6 * kTwoPi;

/// Quasimomentum theta together with its distance to the dual lattice.
class BlochParameter {
 public:
  explicit BlochParameter(const Vec3& theta, double exclusion_radius = kDefaultExclusion);

  const Vec3& theta() const noexcept { return theta_; }
  double dist_to_dual() const noexcept { return dist_; }
  double exclusion_radius() const noexcept { return exclusion_; }
  bool excluded() const noexcept { return dist_ < exclusion_; }

  /// Throws ExcludedParameter when theta sits in the exclusion ball.
  void require_admissible(const char* where) const;

 private:
  Vec3 theta_;
  double dist_;
  double exclusion_;
};

/// dist(theta, 2 pi Z^3), minimized over the 27 dual points around theta.
double dist_to_dual(const Vec3& theta);

/// Coefficients of a periodic field on a truncated dual basis.
class FourierField {
 public:
  FourierField() = default;
  explicit FourierField(BasisPtr basis);
  FourierField(BasisPtr basis, CVector coeffs);

  const BasisPtr& basis_ptr() const noexcept { return basis_; }
  const DualBasis& basis() const { return *basis_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(coeffs_.size()); }

  const CVector& coeffs() const noexcept { return coeffs_; }
  CVector& coeffs() noexcept { return coeffs_; }
  cplx operator[](std::size_t i) const { return coeffs_[static_cast<Eigen::Index>(i)]; }
  cplx& operator[](std::size_t i) { return coeffs_[static_cast<Eigen::Index>(i)]; }

  /// Coefficient at m, zero outside the box.
  cplx at(const IVec3& m) const;

  double norm2() const { return coeffs_.squaredNorm(); }

  /// Coefficients of the complex conjugate function: c'_m = conj(c_{-m}).
  FourierField conjugate() const;

  /// Largest |c_{-m} - conj(c_m)|; zero for a real-valued function.
  double reality_defect() const;

  /// Enforce c_{-m} = conj(c_m) by averaging.
  void make_real();

 private:
  BasisPtr basis_;
  CVector coeffs_;
};

void require_same_basis(const FourierField& a, const FourierField& b, const char* where);

/// Coefficients of the product a(x) b(x), truncated to the basis of a.
FourierField multiply(const FourierField& a, const FourierField& b);

/// Matrix of u -> P(f u) on the basis: entry (m, m') = f_{m - m'}.
CMatrix multiplication_matrix(const FourierField& f);

/// One cell's worth of the linearized state: (Psi1, Psi2, Q, P).
struct StateVector {
  FourierField psi1;
  FourierField psi2;
  CVec3 q = CVec3::Zero();
  CVec3 p = CVec3::Zero();

  static StateVector zero(const BasisPtr& basis);

  const DualBasis& basis() const { return psi1.basis(); }
  std::size_t field_size() const { return psi1.size(); }
  std::size_t dimension() const { return 2 * field_size() + 6; }

  /// Flat layout [Psi1 | Psi2 | Q | P].
  CVector pack() const;
  static StateVector unpack(const BasisPtr& basis, const CVector& flat);

  StateVector& operator+=(const StateVector& other);
  StateVector& operator*=(cplx s);
};

StateVector operator+(StateVector a, const StateVector& b);
StateVector operator*(cplx s, StateVector a);

/// Inner product of X(T^3), conjugate-linear in the first slot.
cplx inner_X(const StateVector& y1, const StateVector& y2);

/// Diagonal of the V(T^3) Gram matrix in the flat layout: 1 + |2 pi m|^2 on fields, 1 on Q, P.
RVector gram_V(const DualBasis& basis);

double norm_V2(const StateVector& y);

/// Random state with independent standard complex normal entries.
template <class Rng>
StateVector random_state(const BasisPtr& basis, Rng& rng);

}  // namespace crystab

#include "crystab/detail/random_state.hpp"
