#include "crystab/ground_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace crystab {

namespace {

double laplace_symbol(const DualBasis& basis, std::size_t i) { return basis.dual_vector(i).squaredNorm(); }

// Potential of rho with the zero mode dropped, no neutrality check.
FourierField coulomb(const FourierField& rho) {
  const DualBasis& basis = rho.basis();
  FourierField phi(rho.basis_ptr());
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (i != basis.zero_index()) phi[i] = rho[i] / laplace_symbol(basis, i);
  return phi;
}

FourierField apply_hamiltonian(const FourierField& psi, const FourierField& phi, double e) {
  FourierField out = multiply(phi, psi);
  out.coeffs() *= -e;
  const DualBasis& basis = psi.basis();
  for (std::size_t i = 0; i < basis.size(); ++i) out[i] += 0.5 * laplace_symbol(basis, i) * psi[i];
  return out;
}

void require_coupling(double e, double Z, const char* where) {
  if (!(e > 0.0 && e <= 1.0)) throw InvalidArgument(std::string(where) + ": e must lie in (0, 1]");
  if (!(Z > 0.0) || !std::isfinite(Z)) throw InvalidArgument(std::string(where) + ": Z must be positive");
}

void normalize(FourierField& psi, double Z) {
  const double n2 = psi.norm2();
  if (!(n2 > 0.0)) throw NumericError("ground state: iterate collapsed to zero");
  psi.coeffs() *= std::sqrt(Z / n2);
}

void fix_phase(FourierField& psi) {
  psi.make_real();
  const std::size_t z = psi.basis().zero_index();
  psi[z] = cplx(psi[z].real(), 0.0);
  if (psi[z].real() < 0.0) psi.coeffs() = -psi.coeffs();
}

}  // namespace

FourierField solve_potential(const FourierField& nu, double e, double tol) {
  const std::size_t z = nu.basis().zero_index();
  if (std::abs(nu[z]) > tol) {
    std::ostringstream msg;
    msg << "solve_potential: cell average " << std::abs(nu[z]) << " exceeds tolerance " << tol;
    throw NeutralityError(msg.str(), std::abs(nu[z]));
  }
  FourierField phi = coulomb(nu);
  phi.coeffs() *= e;
  return phi;
}

FourierField periodized_density(const IonDensity& d, const BasisPtr& basis) {
  FourierField out(basis);
  for (std::size_t i = 0; i < basis->size(); ++i) out[i] = d(basis->dual_vector(i));
  return out;
}

FourierField charge_density(const FourierField& psi, const IonDensity& d, double e) {
  FourierField rho = multiply(psi, psi.conjugate());
  rho.coeffs() *= -e;
  rho.coeffs() += periodized_density(d, psi.basis_ptr()).coeffs();
  return rho;
}

double energy_per_cell(const FourierField& psi, const IonDensity& d, double e) {
  const DualBasis& basis = psi.basis();
  const FourierField rho = charge_density(psi, d, e);
  double kinetic = 0.0, field = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double k2 = laplace_symbol(basis, i);
    kinetic += k2 * std::norm(psi[i]);
    if (i != basis.zero_index()) field += std::norm(rho[i]) / k2;
  }
  return 0.5 * kinetic + 0.5 * field;
}

FourierField energy_gradient(const FourierField& psi, const IonDensity& d, double e) {
  return apply_hamiltonian(psi, coulomb(charge_density(psi, d, e)), e);
}

CMatrix static_hamiltonian(const FourierField& phi, double e) {
  CMatrix h = -e * multiplication_matrix(phi);
  const DualBasis& basis = phi.basis();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    h(k, k) += 0.5 * laplace_symbol(basis, i);
  }
  return 0.5 * (h + h.adjoint());
}

IonDensity charged_density(const IonDensity& shape, double e, double Z) {
  require_coupling(e, Z, "charged_density");
  return shape.rescaled(e * Z);
}

Stationarity stationarity(const FourierField& psi, const IonDensity& d, double e) {
  const FourierField h_psi = energy_gradient(psi, d, e);
  Stationarity s;
  s.omega = psi.coeffs().dot(h_psi.coeffs()).real() / psi.norm2();
  s.residual = (h_psi.coeffs() - s.omega * psi.coeffs()).norm();
  return s;
}

cplx GroundState::gamma() const { return psi0[basis().zero_index()]; }

FourierField GroundState::chi() const {
  FourierField out = psi0;
  out[basis().zero_index()] = 0.0;
  return out;
}

double GroundState::chi_H2_norm() const {
  const FourierField c = chi();
  double acc = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double w = 1.0 + laplace_symbol(basis(), i);
    acc += w * w * std::norm(c[i]);
  }
  return std::sqrt(acc);
}

FourierField GroundState::nu0(const IonDensity& d) const {
  FourierField nu = charge_density(psi0, d, e);
  nu.coeffs() /= e;
  return nu;
}

GroundState minimize_ground_state(const IonDensity& d, double e, double Z, const BasisPtr& basis,
                                  const GroundStateOptions& opts) {
  require_coupling(e, Z, "minimize_ground_state");
  if (!basis) throw InvalidArgument("minimize_ground_state: null basis");
  if (!(opts.tol > 0.0) || opts.max_iterations < 1)
    throw InvalidArgument("minimize_ground_state: tol and max_iterations must be positive");
  const double mean = d(Vec3::Zero()).real() - e * Z;
  if (std::abs(mean) > 1e-12 * std::max(1.0, e * Z))
    throw NeutralityError("minimize_ground_state: sigma~(0) differs from e Z", mean);

  const DualBasis& b = *basis;
  const auto n = static_cast<Eigen::Index>(b.size());
  RVector precond(n);
  for (Eigen::Index i = 0; i < n; ++i) precond[i] = 1.0 / (1.0 + 0.5 * laplace_symbol(b, static_cast<std::size_t>(i)));

  FourierField psi(basis);
  psi[b.zero_index()] = std::sqrt(Z);

  int it = 0;
  Stationarity st = stationarity(psi, d, e);
  CVector prev_psi, prev_dir;
  double step = 1.0;
  while (st.residual > opts.tol && it < opts.max_iterations) {
    const FourierField h_psi = energy_gradient(psi, d, e);
    const CVector r = h_psi.coeffs() - st.omega * psi.coeffs();
    CVector dir = -(precond.cwiseProduct(r.real()).cast<cplx>() + cplx(0, 1) * precond.cwiseProduct(r.imag()).cast<cplx>());
    dir -= (psi.coeffs().dot(dir).real() / Z) * psi.coeffs();
    if (prev_psi.size() == n) {
      const CVector s = psi.coeffs() - prev_psi;
      const CVector y = prev_dir - dir;
      const double sy = s.dot(y).real();
      if (sy > 0.0) step = std::clamp(s.squaredNorm() / sy, 1e-3, 10.0);
    }
    prev_psi = psi.coeffs();
    prev_dir = dir;
    psi.coeffs() += step * dir;
    normalize(psi, Z);
    fix_phase(psi);
    st = stationarity(psi, d, e);
    ++it;
  }

  if (st.residual > opts.tol && opts.scf_refinement) {
    double mix = 1.0;
    for (int sweep = 0; sweep < opts.max_scf_sweeps && st.residual > opts.tol; ++sweep, ++it) {
      const FourierField phi = coulomb(charge_density(psi, d, e));
      Eigen::SelfAdjointEigenSolver<CMatrix> es(static_hamiltonian(phi, e));
      FourierField next(basis, es.eigenvectors().col(0));
      normalize(next, Z);
      fix_phase(next);
      FourierField trial = psi;
      trial.coeffs() = (1.0 - mix) * psi.coeffs() + mix * next.coeffs();
      normalize(trial, Z);
      fix_phase(trial);
      const Stationarity ts = stationarity(trial, d, e);
      if (ts.residual < st.residual || mix < 1e-3) {
        psi = trial;
        st = ts;
      } else {
        mix *= 0.5;
      }
    }
  }

  if (!(st.residual <= opts.tol)) {
    std::ostringstream msg;
    msg << "minimize_ground_state: residual " << st.residual << " above tolerance " << opts.tol << " after " << it
        << " iterations";
    throw ConvergenceError(msg.str(), st.residual, it);
  }

  GroundState gs;
  gs.e = e;
  gs.Z = Z;
  gs.psi0 = psi;
  FourierField rho = charge_density(psi, d, e);
  rho[b.zero_index()] = 0.0;  // removes round-off of the normalization
  gs.phi0 = solve_potential(rho, 1.0);
  gs.phi0.make_real();
  gs.omega0 = st.omega;
  gs.residual = st.residual;
  gs.energy = energy_per_cell(psi, d, e);
  gs.iterations = it;
  gs.density_spec = density_spec_json(d);
  return gs;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double floor) {
  if (x.size() != y.size()) throw ShapeError("loglog_slope: size mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(std::abs(y[i]) > floor) || !(x[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  if (count < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = count * sxx - sx * sx;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (count * sxy - sx * sy) / denom;
}

AsymptoticsReport verify_asymptotics(const IonDensity& shape, const std::vector<double>& e_grid, double Z,
                                     const BasisPtr& basis, const GroundStateOptions& opts) {
  if (e_grid.size() < 3) throw InvalidArgument("verify_asymptotics: at least three values of e are needed");
  AsymptoticsReport report;
  report.min_eig_H0 = std::numeric_limits<double>::infinity();
  std::vector<double> es, omegas, chis, gammas;
  for (double e : e_grid) {
    const IonDensity d = charged_density(shape, e, Z);
    const GroundState gs = minimize_ground_state(d, e, Z, basis, opts);
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(static_hamiltonian(gs.phi0, e), Eigen::EigenvaluesOnly);
    AsymptoticsRow row;
    row.e = e;
    row.omega0 = gs.omega0;
    row.chi_H2 = gs.chi_H2_norm();
    row.gamma_defect = std::abs(std::norm(gs.gamma()) - Z);
    row.min_eig_H0 = eig.eigenvalues()[0] - gs.omega0;
    row.residual = gs.residual;
    row.iterations = gs.iterations;
    report.rows.push_back(row);
    report.min_eig_H0 = std::min(report.min_eig_H0, row.min_eig_H0);
    es.push_back(e);
    omegas.push_back(row.omega0);
    chis.push_back(row.chi_H2);
    gammas.push_back(row.gamma_defect);
  }
  report.slope_omega = loglog_slope(es, omegas);
  report.slope_chi = loglog_slope(es, chis);
  report.slope_gamma = loglog_slope(es, gammas, 1e-13 * Z);
  return report;
}

}  // namespace crystab
