#include "crystab/bloch_operators.hpp"

#include <cstdio>
#include <fstream>

namespace crystab {

namespace {

constexpr double kZeroSymbol = 1e-12;

Vec3 shifted(const DualBasis& basis, std::size_t i, const Vec3& theta) { return basis.dual_vector(i) - theta; }

}  // namespace

BlochModel::BlochModel(GroundState gs, IonDensity density, double ion_mass)
    : gs_(std::move(gs)), density_(std::move(density)), mass_(ion_mass) {
  if (!(ion_mass > 0.0) || !std::isfinite(ion_mass)) throw InvalidArgument("BlochModel: ion mass must be positive");
  if (!gs_.psi0.basis_ptr()) throw InvalidArgument("BlochModel: empty ground state");
  psi_mult_ = multiplication_matrix(gs_.psi0);
  phi_mult_ = multiplication_matrix(gs_.phi0);
  t2_ = assemble_T2(gs_, density_);
}

void BlochModel::check(const Vec3& theta, const AssemblyOptions& opts) const {
  if (!opts.drop_zero_mode) BlochParameter(theta).require_admissible("bloch operators");
}

CMatrix BlochModel::H0(const Vec3& theta, const AssemblyOptions& opts) const {
  check(theta, opts);
  CMatrix h = -gs_.e * phi_mult_;
  for (std::size_t i = 0; i < basis().size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    h(k, k) += 0.5 * shifted(basis(), i, theta).squaredNorm() - gs_.omega0;
  }
  return 0.5 * (h + h.adjoint());
}

RVector BlochModel::Gdiag(const Vec3& theta, const AssemblyOptions& opts) const {
  check(theta, opts);
  RVector out(static_cast<Eigen::Index>(basis().size()));
  for (std::size_t i = 0; i < basis().size(); ++i) {
    const double xi2 = shifted(basis(), i, theta).squaredNorm();
    out[static_cast<Eigen::Index>(i)] = xi2 < kZeroSymbol * kZeroSymbol ? 0.0 : 1.0 / xi2;
  }
  return out;
}

CMatrix BlochModel::f(const Vec3& theta, const AssemblyOptions& opts) const {
  const RVector root = Gdiag(theta, opts).cwiseSqrt();
  return gs_.e * (root.cast<cplx>().asDiagonal() * psi_mult_);
}

namespace {

// V(m, k) = -i xi_k sigma~(xi), xi = 2 pi m - theta.
CMatrixN3 gradient_symbol(const DualBasis& basis, const IonDensity& d, const Vec3& theta) {
  CMatrixN3 v(static_cast<Eigen::Index>(basis.size()), 3);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Vec3 xi = shifted(basis, i, theta);
    const cplx s = d(xi);
    for (int k = 0; k < 3; ++k) v(static_cast<Eigen::Index>(i), k) = cplx(0.0, -xi[k]) * s;
  }
  return v;
}

}  // namespace

CMatrixN3 BlochModel::g(const Vec3& theta, const AssemblyOptions& opts) const {
  const RVector root = Gdiag(theta, opts).cwiseSqrt();
  return root.cast<cplx>().asDiagonal() * gradient_symbol(basis(), density_, theta);
}

CMatrix BlochModel::psi_G_psi(const Vec3& theta, const AssemblyOptions& opts) const {
  const RVector G = Gdiag(theta, opts);
  return (gs_.e * gs_.e) * (psi_mult_ * G.cast<cplx>().asDiagonal() * psi_mult_);
}

CMatrixN3 BlochModel::S_direct(const Vec3& theta, const AssemblyOptions& opts) const {
  const RVector G = Gdiag(theta, opts);
  return gs_.e * (psi_mult_ * G.cast<cplx>().asDiagonal() * gradient_symbol(basis(), density_, theta));
}

BlochBlocks BlochModel::blocks(const Vec3& theta, const AssemblyOptions& opts) const {
  BlochBlocks b;
  b.theta = theta;
  b.ion_mass = mass_;
  b.H0 = H0(theta, opts);
  b.Gdiag = Gdiag(theta, opts);
  b.f = f(theta, opts);
  b.g = g(theta, opts);
  b.S = b.f.adjoint() * b.g;
  b.T1 = b.g.adjoint() * b.g;
  b.T1 = 0.5 * (b.T1 + b.T1.adjoint()).eval();
  b.T2 = t2_;

  const Eigen::Index n = b.field_size();
  b.B = CMatrix::Zero(2 * n + 6, 2 * n + 6);
  b.B.block(0, 0, n, n) = 2.0 * b.H0 + 4.0 * (b.f.adjoint() * b.f);
  b.B.block(n, n, n, n) = 2.0 * b.H0;
  b.B.block(0, 2 * n, n, 3) = 2.0 * b.S;
  b.B.block(2 * n, 0, 3, n) = 2.0 * b.S.adjoint();
  b.B.block(2 * n, 2 * n, 3, 3) = b.T1 + b.T2;
  b.B.block(2 * n + 3, 2 * n + 3, 3, 3) = CMatrix3::Identity() / mass_;
  b.B = 0.5 * (b.B + b.B.adjoint()).eval();
  return b;
}

CMatrix assemble_H0(const BlochParameter& theta, const GroundState& gs) {
  theta.require_admissible("assemble_H0");
  CMatrix h = -gs.e * multiplication_matrix(gs.phi0);
  const DualBasis& basis = gs.basis();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    h(k, k) += 0.5 * shifted(basis, i, theta.theta()).squaredNorm() - gs.omega0;
  }
  return 0.5 * (h + h.adjoint());
}

FactorPair assemble_fg(const BlochParameter& theta, const GroundState& gs, const IonDensity& d) {
  theta.require_admissible("assemble_fg");
  const DualBasis& basis = gs.basis();
  RVector root(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i)
    root[static_cast<Eigen::Index>(i)] = 1.0 / shifted(basis, i, theta.theta()).norm();
  FactorPair out;
  out.f = gs.e * (root.cast<cplx>().asDiagonal() * multiplication_matrix(gs.psi0));
  out.g = root.cast<cplx>().asDiagonal() * gradient_symbol(basis, d, theta.theta());
  return out;
}

CMatrix3 assemble_T2(const GroundState& gs, const IonDensity& d) {
  const DualBasis& basis = gs.basis();
  CMatrix3 t2 = CMatrix3::Zero();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (i == basis.zero_index()) continue;
    const Vec3 k = basis.dual_vector(i);
    t2 -= (gs.phi0[i] * d(-k)) * (k * k.transpose()).cast<cplx>();
  }
  return 0.5 * (t2 + t2.adjoint());
}

BlochBlocks assemble_B(const BlochParameter& theta, const GroundState& gs, const IonDensity& d, double ion_mass) {
  theta.require_admissible("assemble_B");
  return BlochModel(gs, d, ion_mass).blocks(theta.theta());
}

CVector apply_J(const CVector& y) {
  const Eigen::Index n = (y.size() - 6) / 2;
  if (y.size() < 8 || 2 * n + 6 != y.size()) throw ShapeError("apply_J: bad state dimension");
  CVector out(y.size());
  out.segment(0, n) = 0.5 * y.segment(n, n);
  out.segment(n, n) = -0.5 * y.segment(0, n);
  out.segment(2 * n, 3) = y.segment(2 * n + 3, 3);
  out.segment(2 * n + 3, 3) = -y.segment(2 * n, 3);
  return out;
}

CMatrix J_matrix(Eigen::Index field_size) {
  const Eigen::Index n = field_size;
  CMatrix j = CMatrix::Zero(2 * n + 6, 2 * n + 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    j(i, n + i) = 0.5;
    j(n + i, i) = -0.5;
  }
  for (Eigen::Index k = 0; k < 3; ++k) {
    j(2 * n + k, 2 * n + 3 + k) = 1.0;
    j(2 * n + 3 + k, 2 * n + k) = -1.0;
  }
  return j;
}

CMatrix assemble_A(const CMatrix& B) {
  const Eigen::Index n = (B.rows() - 6) / 2;
  if (B.rows() != B.cols() || B.rows() < 8 || 2 * n + 6 != B.rows()) throw ShapeError("assemble_A: bad B shape");
  CMatrix a(B.rows(), B.cols());
  a.middleRows(0, n) = 0.5 * B.middleRows(n, n);
  a.middleRows(n, n) = -0.5 * B.middleRows(0, n);
  a.middleRows(2 * n, 3) = B.middleRows(2 * n + 3, 3);
  a.middleRows(2 * n + 3, 3) = -B.middleRows(2 * n, 3);
  return a;
}

CMatrix assemble_A(const BlochBlocks& blocks) { return assemble_A(blocks.B); }

void dump_matrix_csv(const CMatrix& m, const std::filesystem::path& path, const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("dump_matrix_csv: cannot write " + path.string());
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "row,col,re,im\n";
  char buf[96];
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%ld,%ld,%.17g,%.17g\n", static_cast<long>(i), static_cast<long>(j),
                    m(i, j).real(), m(i, j).imag());
      out << buf;
    }
}

}  // namespace crystab
