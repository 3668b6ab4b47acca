#include "crystab/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace crystab {

Propagator Propagator::build(const BlochBlocks& blocks, double rel_tol) {
  return build(blocks.B, blocks.theta, rel_tol);
}

Propagator Propagator::build(const CMatrix& B, const Vec3& theta, double rel_tol) {
  if (B.rows() != B.cols() || B.rows() < 8 || (B.rows() - 6) % 2 != 0) throw ShapeError("Propagator: bad B shape");
  const CMatrix h = 0.5 * (B + B.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) throw NumericError("Propagator: eigensolver failed on B");
  const RVector& lam = es.eigenvalues();
  const double lo = lam[0], hi = lam[lam.size() - 1];
  if (!(lo > rel_tol * std::abs(hi))) {
    std::ostringstream msg;
    msg << "Propagator: energy operator not positive definite, min eigenvalue " << lo;
    throw NotPositiveError(msg.str(), lo, theta);
  }
  Propagator p;
  p.theta_ = theta;
  const CMatrix& U = es.eigenvectors();
  const RVector root = lam.cwiseSqrt();
  p.lambda_ = U * root.cast<cplx>().asDiagonal() * U.adjoint();
  p.lambda_inv_ = U * root.cwiseInverse().cast<cplx>().asDiagonal() * U.adjoint();
  p.lambda_ = 0.5 * (p.lambda_ + p.lambda_.adjoint()).eval();
  p.lambda_inv_ = 0.5 * (p.lambda_inv_ + p.lambda_inv_.adjoint()).eval();

  const CMatrix j_lambda = assemble_A(p.lambda_);  // J Lambda by row operations
  p.k_ = cplx(0.0, 1.0) * (p.lambda_ * j_lambda);
  p.k_ = 0.5 * (p.k_ + p.k_.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> ks(p.k_);
  if (ks.info() != Eigen::Success) throw NumericError("Propagator: eigensolver failed on K");
  p.mu_ = ks.eigenvalues();
  p.out_ = p.lambda_inv_ * ks.eigenvectors();
  p.in_ = ks.eigenvectors().adjoint() * p.lambda_;
  p.cond_.min_eig_B = lo;
  p.cond_.max_eig_B = hi;
  p.cond_.lambda_inv_norm = 1.0 / std::sqrt(lo);
  return p;
}

CVector Propagator::evolve(const CVector& y0, double t) const {
  if (y0.size() != dimension()) throw ShapeError("Propagator::evolve: state dimension mismatch");
  if (t == 0.0) return y0;
  CVector z = in_ * y0;
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] *= std::polar(1.0, -mu_[i] * t);
  return out_ * z;
}

StateVector Propagator::evolve(const StateVector& y0, double t) const {
  return StateVector::unpack(y0.psi1.basis_ptr(), evolve(y0.pack(), t));
}

std::vector<StateVector> Propagator::evolve(const StateVector& y0, const std::vector<double>& times) const {
  std::vector<StateVector> out;
  out.reserve(times.size());
  const CVector flat = y0.pack();
  for (double t : times) out.push_back(StateVector::unpack(y0.psi1.basis_ptr(), evolve(flat, t)));
  return out;
}

double Propagator::energy_norm(const CVector& y) const {
  if (y.size() != dimension()) throw ShapeError("Propagator::energy_norm: state dimension mismatch");
  return (lambda_ * y).norm();
}

CVector rk4_integrate(const CMatrix& A, const CVector& y0, double t, int steps) {
  if (steps < 1) throw InvalidArgument("rk4_integrate: steps must be >= 1");
  if (A.rows() != A.cols() || A.cols() != y0.size()) throw ShapeError("rk4_integrate: shape mismatch");
  const double h = t / steps;
  CVector y = y0;
  for (int s = 0; s < steps; ++s) {
    const CVector k1 = A * y;
    const CVector k2 = A * (y + 0.5 * h * k1);
    const CVector k3 = A * (y + 0.5 * h * k2);
    const CVector k4 = A * (y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

}  // namespace crystab
