#include "crystab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace crystab {

DualBasis::DualBasis(int cutoff) : cutoff_(cutoff) {
  if (cutoff < 1) {
    throw InvalidArgument("DualBasis: cutoff must be >= 1, got " + std::to_string(cutoff));
  }
  const int s = side();
  points_.reserve(static_cast<std::size_t>(s) * s * s);
  for (int a = -cutoff; a <= cutoff; ++a)
    for (int b = -cutoff; b <= cutoff; ++b)
      for (int c = -cutoff; c <= cutoff; ++c) points_.push_back({a, b, c});
}

std::optional<std::size_t> DualBasis::index_of(const IVec3& m) const noexcept {
  for (int k = 0; k < 3; ++k)
    if (m[k] < -cutoff_ || m[k] > cutoff_) return std::nullopt;
  const std::size_t s = static_cast<std::size_t>(side());
  return (static_cast<std::size_t>(m[0] + cutoff_) * s + static_cast<std::size_t>(m[1] + cutoff_)) * s +
         static_cast<std::size_t>(m[2] + cutoff_);
}

Vec3 DualBasis::dual_vector(std::size_t i) const {
  const IVec3& m = points_[i];
  return kTwoPi * Vec3(m[0], m[1], m[2]);
}

BasisPtr make_basis(int cutoff) { return std::make_shared<const DualBasis>(cutoff); }

double dist_to_dual(const Vec3& theta) {
  double best = std::numeric_limits<double>::infinity();
  const Vec3 base = (theta / kTwoPi).array().round();
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = -1; c <= 1; ++c) {
        const Vec3 k = kTwoPi * (base + Vec3(a, b, c));
        best = std::min(best, (theta - k).norm());
      }
  return best;
}

BlochParameter::BlochParameter(const Vec3& theta, double exclusion_radius)
    : theta_(theta), dist_(crystab::dist_to_dual(theta)), exclusion_(exclusion_radius) {}

void BlochParameter::require_admissible(const char* where) const {
  if (excluded()) {
    throw ExcludedParameter(std::string(where) + ": theta is within " + std::to_string(exclusion_) +
                            " of the dual lattice (d = " + std::to_string(dist_) + ")");
  }
}

FourierField::FourierField(BasisPtr basis) : basis_(std::move(basis)) {
  if (!basis_) throw InvalidArgument("FourierField: null basis");
  coeffs_ = CVector::Zero(static_cast<Eigen::Index>(basis_->size()));
}

FourierField::FourierField(BasisPtr basis, CVector coeffs) : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (!basis_) throw InvalidArgument("FourierField: null basis");
  if (static_cast<std::size_t>(coeffs_.size()) != basis_->size()) {
    throw ShapeError("FourierField: coefficient count " + std::to_string(coeffs_.size()) +
                     " does not match basis size " + std::to_string(basis_->size()));
  }
}

cplx FourierField::at(const IVec3& m) const {
  const auto i = basis_->index_of(m);
  return i ? coeffs_[static_cast<Eigen::Index>(*i)] : cplx(0.0);
}

FourierField FourierField::conjugate() const {
  // The box is symmetric, so index i maps to N-1-i under m -> -m.
  const Eigen::Index n = coeffs_.size();
  CVector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = std::conj(coeffs_[n - 1 - i]);
  return FourierField(basis_, std::move(out));
}

double FourierField::reality_defect() const {
  const Eigen::Index n = coeffs_.size();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) worst = std::max(worst, std::abs(coeffs_[n - 1 - i] - std::conj(coeffs_[i])));
  return worst;
}

void FourierField::make_real() { coeffs_ = 0.5 * (coeffs_ + conjugate().coeffs_); }

void require_same_basis(const FourierField& a, const FourierField& b, const char* where) {
  if (!a.basis_ptr() || !b.basis_ptr() || !(a.basis() == b.basis())) {
    throw ShapeError(std::string(where) + ": fields live on different bases");
  }
}

FourierField multiply(const FourierField& a, const FourierField& b) {
  require_same_basis(a, b, "multiply");
  const DualBasis& basis = a.basis();
  const int M = basis.cutoff();
  FourierField out(a.basis_ptr());
  const auto& pts = basis.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    cplx acc = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const IVec3 d{pts[i][0] - pts[j][0], pts[i][1] - pts[j][1], pts[i][2] - pts[j][2]};
      if (std::abs(d[0]) > M || std::abs(d[1]) > M || std::abs(d[2]) > M) continue;
      acc += a[*basis.index_of(d)] * b[j];
    }
    out[i] = acc;
  }
  return out;
}

CMatrix multiplication_matrix(const FourierField& f) {
  const DualBasis& basis = f.basis();
  const auto n = static_cast<Eigen::Index>(basis.size());
  CMatrix out = CMatrix::Zero(n, n);
  const auto& pts = basis.points();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const IVec3 d{pts[i][0] - pts[j][0], pts[i][1] - pts[j][1], pts[i][2] - pts[j][2]};
      if (const auto k = basis.index_of(d)) out(i, j) = f[*k];
    }
  return out;
}

StateVector StateVector::zero(const BasisPtr& basis) {
  StateVector y;
  y.psi1 = FourierField(basis);
  y.psi2 = FourierField(basis);
  return y;
}

CVector StateVector::pack() const {
  const auto n = static_cast<Eigen::Index>(field_size());
  CVector flat(2 * n + 6);
  flat.segment(0, n) = psi1.coeffs();
  flat.segment(n, n) = psi2.coeffs();
  flat.segment(2 * n, 3) = q;
  flat.segment(2 * n + 3, 3) = p;
  return flat;
}

StateVector StateVector::unpack(const BasisPtr& basis, const CVector& flat) {
  const auto n = static_cast<Eigen::Index>(basis->size());
  if (flat.size() != 2 * n + 6) {
    throw ShapeError("StateVector::unpack: expected length " + std::to_string(2 * n + 6) + ", got " +
                     std::to_string(flat.size()));
  }
  StateVector y;
  y.psi1 = FourierField(basis, flat.segment(0, n));
  y.psi2 = FourierField(basis, flat.segment(n, n));
  y.q = flat.segment(2 * n, 3);
  y.p = flat.segment(2 * n + 3, 3);
  return y;
}

StateVector& StateVector::operator+=(const StateVector& other) {
  require_same_basis(psi1, other.psi1, "StateVector::operator+=");
  psi1.coeffs() += other.psi1.coeffs();
  psi2.coeffs() += other.psi2.coeffs();
  q += other.q;
  p += other.p;
  return *this;
}

StateVector& StateVector::operator*=(cplx s) {
  psi1.coeffs() *= s;
  psi2.coeffs() *= s;
  q *= s;
  p *= s;
  return *this;
}

StateVector operator+(StateVector a, const StateVector& b) { return a += b; }
StateVector operator*(cplx s, StateVector a) { return a *= s; }

cplx inner_X(const StateVector& y1, const StateVector& y2) {
  require_same_basis(y1.psi1, y2.psi1, "inner_X");
  require_same_basis(y1.psi2, y2.psi2, "inner_X");
  return y1.psi1.coeffs().dot(y2.psi1.coeffs()) + y1.psi2.coeffs().dot(y2.psi2.coeffs()) + y1.q.dot(y2.q) +
         y1.p.dot(y2.p);
}

RVector gram_V(const DualBasis& basis) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  RVector w = RVector::Ones(2 * n + 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double k2 = basis.dual_vector(static_cast<std::size_t>(i)).squaredNorm();
    w[i] = 1.0 + k2;
    w[n + i] = 1.0 + k2;
  }
  return w;
}

double norm_V2(const StateVector& y) {
  const RVector w = gram_V(y.basis());
  return (w.array() * y.pack().array().abs2()).sum();
}

}  // namespace crystab
