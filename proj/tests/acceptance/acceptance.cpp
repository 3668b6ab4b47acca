// Acceptance suite: one PASS/FAIL line per criterion.
// Exit status is 0 once every criterion has been evaluated; --strict makes any FAIL fatal.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "crystab/crystab.hpp"

using namespace crystab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[1024];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

BlochModel make_model(const IonDensity& d, double e, int M, double mass = 1.0) {
  return BlochModel(minimize_ground_state(d, e, 1.0, make_basis(M)), d, mass);
}

// Wai density whose Sigma is singular on theta3 in 2 pi Z.
IonDensity necessity_density(double eZ) {
  auto s = [](double t) { return std::abs(t) < 1e-12 ? 1.0 : 2.0 * std::sin(0.5 * t) / t; };
  return IonDensity(DensityFamily::custom, eZ, [eZ, s](const Vec3& xi) {
    return cplx(eZ * s(xi[0]) * s(xi[1]) * wai_factor(xi[2]) * std::exp(-0.05 * (xi[0] * xi[0] + xi[1] * xi[1])));
  });
}

Vec3 random_theta(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  for (;;) {
    const Vec3 t(u(rng), u(rng), u(rng));
    if (!BlochParameter(t).excluded()) return t;
  }
}

Outcome analytic_baseline() {
  const double e = 0.1, Z = 1.0;
  const auto t0 = std::chrono::steady_clock::now();
  const GroundState gs = minimize_ground_state(make_wai_product_density(e * Z), e, Z, make_basis(4));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  FourierField flat(gs.basis_ptr());
  flat[gs.basis().zero_index()] = std::sqrt(Z);
  const double dpsi = (gs.psi0.coeffs() - flat.coeffs()).norm();
  const double dphi = std::sqrt(gs.phi0.norm2());
  return {dpsi < 1e-8 && std::abs(gs.omega0) < 1e-8 && dphi < 1e-8 && secs < 60.0,
          fmt("M=4 |psi0-sqrtZ|=%.2e |omega0|=%.2e |Phi0|=%.2e time=%.2fs", dpsi, std::abs(gs.omega0), dphi, secs)};
}

Outcome small_charge_asymptotics() {
  const AsymptoticsReport rep =
      verify_asymptotics(make_gaussian_density(1.0, 0.05), {0.02, 0.04, 0.08, 0.16}, 1.0, make_basis(4));
  const bool omega_ok = rep.slope_omega >= 1.8 && rep.slope_omega <= 2.2;
  const bool chi_ok = rep.slope_chi >= 1.8 && rep.slope_chi <= 2.2;
  const bool h0_ok = rep.min_eig_H0 >= -1e-8;
  return {omega_ok && chi_ok && h0_ok,
          fmt("M=4 slope|omega0|=%.4f%s slope|chi|_H2=%.4f%s min eig H0=%.2e%s", rep.slope_omega,
              omega_ok ? "" : " (outside [1.8,2.2])", rep.slope_chi, chi_ok ? "" : " (outside [1.8,2.2])",
              rep.min_eig_H0, h0_ok ? "" : " (below -1e-8)")};
}

Outcome factorization() {
  const BlochModel model = make_model(make_gaussian_density(0.1, 0.05), 0.1, 2);
  double es = 0.0, et1 = 0.0, ef = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 5; ++k) {
        const Vec3 theta = kTwoPi / 6.0 * Vec3(i + 1, j + 1, k + 1);
        const BlochBlocks b = model.blocks(theta);
        es = std::max(es, max_abs(model.S_direct(theta) - b.f.adjoint() * b.g));
        et1 = std::max(et1, max_abs(b.T1 - b.g.adjoint() * b.g));
        ef = std::max(ef, max_abs(model.psi_G_psi(theta) - b.f.adjoint() * b.f));
      }
  return {es < 1e-10 && et1 < 1e-10 && ef < 1e-10,
          fmt("gaussian M=2 5^3 grid |S-f*g|=%.2e |T1-g*g|=%.2e |e2 psiGpsi-f*f|=%.2e", es, et1, ef)};
}

Outcome perfect_square() {
  const BlochModel model = make_model(make_gaussian_density(0.1, 0.05), 0.1, 2);
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const BlochBlocks b = model.blocks(random_theta(rng));
    const StateVector y = random_state(model.ground_state().basis_ptr(), rng);
    const double q = energy_form(b, y);
    worst = std::max(worst, std::abs(q - decomposed_energy_form(b, y)) / std::abs(q));
  }
  return {worst < 1e-10, fmt("100 random (theta, Y) max relative difference %.2e", worst)};
}

Outcome wiener_positivity() {
  const double e = 0.1;
  const BlochModel model = make_model(make_wai_product_density(e), e, 2);
  const auto grid = uniform_theta_grid(8, 0.05 * kTwoPi);
  ScanOptions opts;
  opts.threads = threads();
  const StabilityScan scan = positivity_scan(model, grid, opts);
  double kmin = INFINITY, smin = INFINITY;
  for (const auto& p : scan.points) {
    kmin = std::min(kmin, p.kappa);
    smin = std::min(smin, p.sigma_min_eig);
  }
  const bool sufficiency = scan.failed == 0 && kmin > 0.0 && smin > 0.0;

  const IonDensity nd = necessity_density(e);
  const BlochModel necessity = make_model(nd, e, 2);
  const Vec3 theta0(kPi, kPi, 0.0);
  const Coercivity c = coercivity(necessity.blocks(theta0));
  const double sigma0 = wiener_min_eigenvalue(nd, BlochParameter(theta0));
  return {sufficiency && c.kappa <= 1e-10,
          fmt("wai_product M=2 %zu points: min kappa=%.3e min eig Sigma=%.3e failed=%zu; singular density kappa(pi,pi,0)=%.3e "
              "eig Sigma=%.1e",
              scan.points.size(), kmin, smin, scan.failed, c.kappa, sigma0)};
}

Outcome degeneration() {
  const BlochModel model = make_model(make_wai_smooth_density(0.1), 0.1, 2);
  AssemblyOptions opts;
  opts.drop_zero_mode = true;
  std::vector<double> d, kappa;
  for (double t : {0.04, 0.02, 0.01, 0.005}) {
    const Vec3 theta = t * Vec3(kTwoPi, 0, 0);
    d.push_back(dist_to_dual(theta));
    kappa.push_back(coercivity(model.blocks(theta, opts)).kappa);
  }
  const double slope = loglog_slope(d, kappa);
  return {slope >= 1.8, fmt("wai_smooth M=2 kappa(d=%.3f..%.4f)=%.3e..%.3e exponent %.3f", d.front(), d.back(),
                            kappa.front(), kappa.back(), slope)};
}

Outcome counterexample() {
  const double e = 0.05;
  const auto grid = uniform_theta_grid(8, 0.05 * kTwoPi);
  const IonDensity d = build_counterexample(make_gaussian_density(1.0, 0.05), {1, 0, 0}, 0.05, e);
  const BlochModel model = make_model(d, e, 2);
  const auto mode = find_negative_mode(model, grid, 1e-10, threads());
  double witness = NAN;
  if (mode) witness = energy_form(model.blocks(mode->theta), mode->witness);
  const bool witness_ok = mode && witness < 0.0 && std::abs(witness - mode->value) <= 1e-12 * std::abs(mode->value);

  const BlochModel wai = make_model(make_wai_product_density(e), e, 2);
  const bool wai_clean = !find_negative_mode(wai, grid, 1e-10, threads()).has_value();

  const IonDensity shape = make_gaussian_density(1.0, 0.05);
  std::vector<double> es{0.02, 0.04, 0.08, 0.16}, residual;
  const auto basis = make_basis(2);
  for (double ee : es) {
    const IonDensity s = shape.rescaled(ee);
    const GroundState gs = minimize_ground_state(s, ee, 1.0, basis);
    residual.push_back((assemble_T2(gs, s) + t2_small_charge_limit(s, *basis)).cwiseAbs().maxCoeff());
  }
  const double slope = loglog_slope(es, residual);
  return {witness_ok && wai_clean && slope >= 3.5,
          fmt("e=0.05 QTQ=%.4e at (%.3f,%.3f,%.3f) witness=%.4e; wai density %s; T2 residual slope %.3f",
              mode ? mode->value : NAN, mode ? mode->theta[0] : NAN, mode ? mode->theta[1] : NAN,
              mode ? mode->theta[2] : NAN, witness, wai_clean ? "no negative mode" : "NEGATIVE MODE", slope)};
}

Outcome dynamics() {
  const BlochModel model = make_model(make_wai_smooth_density(0.1), 0.1, 2);
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd;
  std::vector<double> times;
  for (int i = 0; i <= 100; ++i) times.push_back(i);

  double per_theta = 0.0;
  std::vector<Vec3> thetas{Vec3(kPi, kPi, kPi)};
  for (int i = 0; i < 4; ++i) thetas.push_back(random_theta(rng));
  for (const Vec3& theta : thetas) {
    const Propagator p = Propagator::build(model.blocks(theta));
    CVector y0(p.dimension());
    for (Eigen::Index i = 0; i < y0.size(); ++i) y0[i] = cplx(nd(rng), nd(rng));
    const double w0 = p.energy_norm(y0);
    for (double t : times) per_theta = std::max(per_theta, std::abs(p.energy_norm(p.evolve(y0, t)) - w0) / w0);
  }

  const auto basis = model.ground_state().basis_ptr();
  SupercellState init = SupercellState::zero(4, basis);
  for (auto& c : init.cells) c = random_state(basis, rng);
  SupercellOptions so;
  so.threads = threads();
  const SupercellTrajectory traj = evolve_supercell(model, init, {0.0, 25.0, 50.0, 75.0, 100.0}, so);

  const BlochBlocks b = model.blocks(Vec3(kPi, kPi, kPi));
  const Propagator p = Propagator::build(b);
  CVector y0(p.dimension());
  for (Eigen::Index i = 0; i < y0.size(); ++i) y0[i] = cplx(nd(rng), nd(rng));
  const CVector spectral = p.evolve(y0, 1.0);
  const double rk = (rk4_integrate(assemble_A(b), y0, 1.0, 16000) - spectral).norm() / spectral.norm();

  return {per_theta < 1e-8 && traj.max_relative_drift < 1e-7 && rk < 1e-6,
          fmt("wai_smooth M=2 per-theta drift %.2e; supercell L=4 W-norm drift %.2e%s; RK4 vs spectral %.2e",
              per_theta, traj.max_relative_drift, traj.zero_mode_regularized ? " (theta=0 regularized)" : "", rk)};
}

Outcome linearization() {
  std::string detail;
  bool ok = true;
  std::mt19937_64 rng(99);
  for (const auto& [name, density] : {std::pair{"wai_smooth", make_wai_smooth_density(0.1)},
                                      std::pair{"gaussian", make_gaussian_density(0.1, 0.05)}}) {
    const BlochModel model = make_model(density, 0.1, 1);
    SupercellState v = SupercellState::zero(2, model.ground_state().basis_ptr());
    for (auto& c : v.cells) c = random_state(model.ground_state().basis_ptr(), rng);
    const OracleReport rep = linearization_oracle(model, v, {1e-3, 5e-4}, threads());
    const double ratio = rep.ratios.front();
    ok = ok && ratio >= 1.8 && ratio <= 2.2;
    detail += fmt("%s%s L=2 M=1 defect %.2e->%.2e ratio %.4f", detail.empty() ? "" : "; ", name,
                  rep.rows[0].relative_defect, rep.rows[1].relative_defect, ratio);
  }
  return {ok, detail};
}

Outcome unitarity() {
  const auto basis = make_basis(2);
  std::mt19937_64 rng(5);
  double round = 0.0, parseval = 0.0;
  for (int L : {2, 3, 4}) {
    SupercellState s = SupercellState::zero(L, basis);
    for (auto& c : s.cells) c = random_state(basis, rng);
    const BlochComponents comps = bloch_decompose(s);
    const SupercellState back = bloch_reconstruct(comps);
    double modes = 0.0;
    for (std::size_t k = 0; k < s.cell_count(); ++k) {
      round = std::max(round, (back.cells[k].pack() - s.cells[k].pack()).cwiseAbs().maxCoeff());
      modes += comps.modes[k].pack().squaredNorm();
    }
    const double direct = supercell_norm2(s);
    parseval = std::max(parseval, std::abs(modes / static_cast<double>(s.cell_count()) - direct) / direct);
  }
  return {round < 1e-12 && parseval < 1e-12,
          fmt("L=2,3,4 M=2 round trip %.2e Parseval %.2e", round, parseval)};
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"analytic baseline", analytic_baseline},
      {"small-charge asymptotics", small_charge_asymptotics},
      {"factorization", factorization},
      {"perfect square", perfect_square},
      {"wiener/positivity equivalence", wiener_positivity},
      {"degeneration at dual lattice", degeneration},
      {"counterexample", counterexample},
      {"linearized dynamics", dynamics},
      {"linearization oracle", linearization},
      {"transform unitarity", unitarity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria pass\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return strict && failed ? 1 : 0;
}
