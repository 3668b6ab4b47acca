#include <cmath>
#include <random>

#include "crystab/workbench/commands.hpp"
#include "sink.hpp"

namespace crystab::workbench {

namespace {

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  std::string status;  // pass, fail, info, skipped
};

Check bound(std::string name, double value, double tol) {
  return {std::move(name), value, tol, value <= tol ? "pass" : "fail"};
}

Vec3 random_theta(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  for (;;) {
    const Vec3 t(u(rng), u(rng), u(rng));
    if (dist_to_dual(t) > 0.05 * kTwoPi) return t;
  }
}

double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

int run_verify(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const IonDensity d = c.make_density();
  const CachedGroundState cached = obtain_ground_state(ctx, d, c.e);
  const GroundState& gs = cached.gs;
  const BlochModel model(gs, d, c.ion_mass);
  const BasisPtr basis = gs.basis_ptr();
  std::mt19937_64 rng(c.seed);
  std::vector<Check> checks;

  checks.push_back(bound("ground_state_residual", gs.residual, c.solver_tol));
  checks.push_back(bound("ground_state_norm_defect", std::abs(gs.psi0.norm2() - c.Z), 1e-10 * c.Z));

  {
    SupercellState s = SupercellState::zero(c.supercell_L, basis);
    for (auto& cell : s.cells) cell = random_state(basis, rng);
    const BlochComponents comps = bloch_decompose(s);
    const SupercellState back = bloch_reconstruct(comps);
    double err = 0.0, modes = 0.0;
    for (std::size_t k = 0; k < s.cell_count(); ++k) {
      err = std::max(err, (back.cells[k].pack() - s.cells[k].pack()).cwiseAbs().maxCoeff());
      modes += comps.modes[k].pack().squaredNorm();
    }
    const double direct = supercell_norm2(s);
    const double cells = static_cast<double>(s.cell_count());
    checks.push_back(bound("bloch_round_trip", err, 1e-12));
    checks.push_back(bound("bloch_parseval", std::abs(modes / cells - direct) / direct, 1e-12));
  }

  double fact = 0.0, herm = 0.0, square = 0.0, lower = 0.0;
  bool any_positive = false;
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3 theta = random_theta(rng);
    const BlochBlocks b = model.blocks(theta);
    fact = std::max({fact, max_abs(b.f.adjoint() * b.f - model.psi_G_psi(theta)), max_abs(b.S - model.S_direct(theta)),
                     max_abs(b.T1 - b.g.adjoint() * b.g)});
    herm = std::max(herm, max_abs(b.B - b.B.adjoint()) / max_abs(b.B));
    const Coercivity k = coercivity(b);
    for (int i = 0; i < 10; ++i) {
      const StateVector y = random_state(basis, rng);
      const double q = energy_form(b, y);
      square = std::max(square, std::abs(q - decomposed_energy_form(b, y)) / std::max(1.0, std::abs(q)));
      if (k.verdict == Verdict::positive) {
        any_positive = true;
        lower = std::max(lower, (k.kappa * norm_V2(y) - q) / std::max(1.0, std::abs(q)));
      }
    }
  }
  checks.push_back(bound("factorization", fact, 1e-10));
  checks.push_back(bound("energy_operator_hermitian", herm, 1e-12));
  checks.push_back(bound("perfect_square", square, 1e-10));
  checks.push_back(any_positive ? bound("coercivity_lower_bound", std::max(lower, 0.0), 1e-9)
                                : Check{"coercivity_lower_bound", 0.0, 1e-9, "skipped"});

  {
    const Vec3 theta(kPi, kPi, kPi);
    try {
      const Propagator p = Propagator::build(model.blocks(theta));
      CVector y0(p.dimension());
      std::normal_distribution<double> nd;
      for (Eigen::Index i = 0; i < y0.size(); ++i) y0[i] = cplx(nd(rng), nd(rng));
      const double w0 = p.energy_norm(y0);
      double drift = 0.0;
      for (double t : c.times()) drift = std::max(drift, std::abs(p.energy_norm(p.evolve(y0, t)) - w0) / w0);
      checks.push_back(bound("propagator_energy_drift", drift, 1e-8));
    } catch (const NotPositiveError&) {
      checks.push_back({"propagator_energy_drift", 0.0, 1e-8, "skipped"});
    }
  }

  {
    SupercellState v = SupercellState::zero(2, basis);
    for (auto& cell : v.cells) cell = random_state(basis, rng);
    const OracleReport rep = linearization_oracle(model, v, {1e-3, 5e-4}, ctx.threads);
    const double ratio = rep.ratios.front();
    checks.push_back({"linearization_oracle_ratio", ratio, 0.2, std::abs(ratio - 2.0) <= 0.2 ? "pass" : "fail"});
    checks.push_back({"linearization_oracle_relative_defect", rep.rows.back().relative_defect, 0.0, "info"});
  }

  const OutputSink sink(ctx.out, ctx.config_hash);
  if (c.e_grid.size() >= 3) {
    const AsymptoticsReport rep = verify_asymptotics(d, c.e_grid, c.Z, basis, c.solver_options());
    CsvWriter csv = sink.csv("asymptotics.csv", {"e", "omega0", "chi_H2", "gamma_defect", "min_eig_H0", "residual"});
    for (const auto& r : rep.rows)
      csv.row({num(r.e), num(r.omega0), num(r.chi_H2), num(r.gamma_defect), num(r.min_eig_H0), num(r.residual)});
    checks.push_back({"slope_omega", rep.slope_omega, 0.0, "info"});
    checks.push_back({"slope_chi_H2", rep.slope_chi, 0.0, "info"});
    checks.push_back({"slope_gamma", rep.slope_gamma, 0.0, "info"});
    checks.push_back(bound("min_eig_H0_negative_part", std::max(0.0, -rep.min_eig_H0), 1e-8));
  }

  bool ok = true;
  {
    CsvWriter csv = sink.csv("verify.csv", {"check", "value", "tolerance", "status"});
    for (const Check& ch : checks) {
      csv.row({ch.name, num(ch.value), num(ch.tolerance), ch.status});
      ok = ok && ch.status != "fail";
    }
  }
  ojson report = sink.header("verify");
  report["cache_key"] = cached.key;
  report["passed"] = ok;
  for (const Check& ch : checks) report["checks"][ch.name] = {{"value", ch.value}, {"status", ch.status}};
  sink.write_json("verify.json", report);
  return ok ? kOk : kNegativeVerdict;
}

}  // namespace crystab::workbench
