#include "crystab/workbench/commands.hpp"

#include <cmath>
#include <iostream>
#include <random>

#include "crystab/workbench/hashing.hpp"
#include "sink.hpp"

namespace crystab::workbench {

namespace {

std::ostream& log(const Context& ctx) {
  static std::ostream null_stream(nullptr);
  return ctx.log ? *ctx.log : null_stream;
}

ojson vec_json(const Vec3& v) { return ojson::array({v[0], v[1], v[2]}); }

std::vector<BlochParameter> scan_grid(const RunConfig& c) {
  auto grid = uniform_theta_grid(c.grid_L, c.exclusion, c.cell_centred);
  if (grid.empty()) throw ConfigError("config: the theta grid is empty after exclusions");
  return grid;
}

ojson ground_state_json(const CachedGroundState& c) {
  const GroundState& gs = c.gs;
  const cplx g = gs.gamma();
  const FourierField chi = gs.chi();
  return ojson{{"cache_key", c.key},
               {"converged", true},
               {"e", gs.e},
               {"Z", gs.Z},
               {"basis_cutoff", gs.basis().cutoff()},
               {"omega0", gs.omega0},
               {"energy", gs.energy},
               {"residual", gs.residual},
               {"iterations", gs.iterations},
               {"gamma", {g.real(), g.imag()}},
               {"gamma_defect", std::norm(g) - gs.Z},
               {"chi_L2", std::sqrt(chi.norm2())},
               {"chi_H2", gs.chi_H2_norm()},
               {"phi_L2", std::sqrt(gs.phi0.norm2())}};
}

std::string verdict_cell(const ScanPoint& p) { return p.error.empty() ? to_string(p.verdict) : "error"; }

}  // namespace

Context make_context(RunConfig config, const std::optional<std::filesystem::path>& out, unsigned threads,
                     const std::optional<std::uint64_t>& seed, bool force, std::ostream* log) {
  Context ctx;
  if (out) config.output_dir = out->string();
  if (seed) config.seed = *seed;
  ctx.out = config.output_dir;
  ctx.threads = threads == 0 ? 1 : threads;
  ctx.force = force;
  ctx.config_hash = config_hash(config);
  ctx.config = std::move(config);
  ctx.log = log;
  return ctx;
}

CachedGroundState obtain_ground_state(const Context& ctx, const IonDensity& d, double e) {
  const RunConfig& c = ctx.config;
  CachedGroundState out;
  out.key = ground_state_key(d, e, c.Z, c.basis_cutoff);
  const auto stem = ctx.out / "cache" / out.key;
  if (auto hit = load_ground_state(stem, out.key)) {
    out.gs = std::move(*hit);
    out.cache_hit = true;
    log(ctx) << "ground state: cache hit " << out.key << '\n';
    return out;
  }
  out.gs = minimize_ground_state(d, e, c.Z, make_basis(c.basis_cutoff), c.solver_options());
  std::filesystem::create_directories(stem.parent_path());
  save_ground_state(out.gs, stem, out.key);
  log(ctx) << "ground state: solved in " << out.gs.iterations << " iterations, cached " << out.key << '\n';
  return out;
}

int run_groundstate(const Context& ctx) {
  const OutputSink sink(ctx.out, ctx.config_hash);
  const IonDensity d = ctx.config.make_density();
  ojson report = sink.header("groundstate");
  report["density"] = ojson::parse(density_spec_json(d));
  try {
    const CachedGroundState c = obtain_ground_state(ctx, d, ctx.config.e);
    report.update(ground_state_json(c));
    sink.write_json("groundstate.json", report);
    return kOk;
  } catch (const ConvergenceError& ex) {
    report["converged"] = false;
    report["residual"] = ex.residual();
    report["iterations"] = ex.iterations();
    sink.write_json("groundstate.json", report);
    log(ctx) << "ground state: " << ex.what() << '\n';
    return kNotConverged;
  }
}

int run_scan(const Context& ctx, const std::string& kind_override) {
  const RunConfig& c = ctx.config;
  const std::string kind = kind_override.empty() ? c.scan_kind : kind_override;
  if (kind != "positivity" && kind != "wiener") throw ConfigError("scan: kind must be 'positivity' or 'wiener'");
  const auto grid = scan_grid(c);
  const IonDensity d = c.make_density();
  ScanOptions opts;
  opts.threads = ctx.threads;

  std::vector<ScanPoint> points;
  std::size_t counts[3] = {0, 0, 0};
  std::size_t failed = 0;
  if (kind == "wiener") {
    points = wiener_scan(d, grid, opts);
  } else {
    const CachedGroundState gs = obtain_ground_state(ctx, d, c.e);
    const BlochModel model(gs.gs, d, c.ion_mass);
    points = positivity_scan(model, grid, opts).points;
  }
  long arg_kappa = -1, arg_sigma = -1;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const ScanPoint& p = points[i];
    if (!p.error.empty()) {
      ++failed;
      continue;
    }
    ++counts[static_cast<int>(p.verdict)];
    if (arg_kappa < 0 || p.kappa < points[static_cast<std::size_t>(arg_kappa)].kappa) arg_kappa = static_cast<long>(i);
    if (arg_sigma < 0 || p.sigma_min_eig < points[static_cast<std::size_t>(arg_sigma)].sigma_min_eig)
      arg_sigma = static_cast<long>(i);
  }

  const OutputSink sink(ctx.out, ctx.config_hash);
  {
    CsvWriter csv = sink.csv("scan_" + kind + ".csv",
                             {"theta1", "theta2", "theta3", "dist", "kappa", "sigma_min_eig", "verdict"});
    for (const ScanPoint& p : points)
      csv.row({num(p.theta[0]), num(p.theta[1]), num(p.theta[2]), num(p.dist),
               kind == "wiener" ? std::string() : num(p.kappa), num(p.sigma_min_eig), verdict_cell(p)});
  }
  const double n = static_cast<double>(points.size());
  ojson summary = sink.header("scan");
  summary["kind"] = kind;
  summary["points"] = points.size();
  summary["positive"] = counts[0];
  summary["degenerate"] = counts[1];
  summary["negative"] = counts[2];
  summary["failed"] = failed;
  summary["positive_fraction"] = counts[0] / n;
  summary["degenerate_fraction"] = counts[1] / n;
  summary["negative_fraction"] = counts[2] / n;
  if (kind == "positivity" && arg_kappa >= 0) {
    const ScanPoint& p = points[static_cast<std::size_t>(arg_kappa)];
    summary["min_kappa"] = {{"value", p.kappa}, {"theta", vec_json(p.theta)}};
  }
  if (arg_sigma >= 0) {
    const ScanPoint& p = points[static_cast<std::size_t>(arg_sigma)];
    summary["min_sigma_eig"] = {{"value", p.sigma_min_eig}, {"theta", vec_json(p.theta)}};
  }
  summary["stable"] = counts[2] == 0 && failed == 0;
  sink.write_json("scan_" + kind + ".json", summary);
  log(ctx) << "scan " << kind << ": " << counts[0] << " positive, " << counts[1] << " degenerate, " << counts[2]
           << " negative, " << failed << " failed\n";
  if (counts[2] > 0) return kNegativeVerdict;
  return failed > 0 ? kFailure : kOk;
}

int run_evolve(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const IonDensity d = c.make_density();
  const CachedGroundState gs = obtain_ground_state(ctx, d, c.e);
  const BlochModel model(gs.gs, d, c.ion_mass);
  const BasisPtr basis = gs.gs.basis_ptr();

  SupercellState init = SupercellState::zero(c.supercell_L, basis);
  if (c.initial == "random") {
    std::mt19937_64 rng(c.seed);
    for (auto& cell : init.cells) cell = random_state(basis, rng);
  }
  SupercellOptions opts;
  opts.threads = ctx.threads;
  opts.ode_fallback = ctx.force;
  const auto times = c.times();
  SupercellTrajectory traj;
  try {
    traj = evolve_supercell(model, init, times, opts);
  } catch (const NotPositiveError& ex) {
    log(ctx) << "evolve: " << ex.what() << " (rerun with --force to integrate with RK4)\n";
    return kNotPositive;
  }

  const OutputSink sink(ctx.out, ctx.config_hash);
  {
    CsvWriter csv = sink.csv("trajectory.csv", {"t", "n1", "n2", "n3", "psi_sq", "q_abs", "p_abs", "w_norm"});
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      const SupercellState& s = traj.states[i];
      for (std::size_t k = 0; k < s.cell_count(); ++k) {
        const IVec3 n = SupercellState::cell_of(s.L, k);
        const StateVector& y = s.cells[k];
        csv.row({num(traj.times[i]), std::to_string(n[0]), std::to_string(n[1]), std::to_string(n[2]),
                 num(y.psi1.norm2() + y.psi2.norm2()), num(y.q.norm()), num(y.p.norm()), num(traj.w_norm[i])});
      }
    }
  }
  ojson summary = sink.header("evolve");
  summary["cache_key"] = gs.key;
  summary["supercell_L"] = c.supercell_L;
  summary["horizon"] = c.horizon;
  summary["samples"] = c.samples;
  summary["initial"] = c.initial;
  summary["max_relative_drift"] = traj.max_relative_drift;
  summary["w_norm_initial"] = traj.w_norm.empty() ? 0.0 : traj.w_norm.front();
  summary["zero_mode_regularized"] = traj.zero_mode_regularized;
  summary["ode_fallback"] = !traj.ode_fallback_thetas.empty();
  ojson fallback = ojson::array();
  for (const Vec3& t : traj.ode_fallback_thetas) fallback.push_back(vec_json(t));
  summary["ode_fallback_thetas"] = fallback;
  sink.write_json("evolve.json", summary);
  log(ctx) << "evolve: max relative W-norm drift " << traj.max_relative_drift << '\n';
  return kOk;
}

int run_counterexample(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const auto grid = scan_grid(c);
  IonDensity base = [&] {
    try {
      return density_from_json(c.counterexample.base, c.Z);
    } catch (const InvalidArgument& ex) {
      throw ConfigError(ex.what());
    }
  }();
  const IonDensity d = build_counterexample(base, c.counterexample.m0, c.counterexample.s, c.e, c.counterexample.width);
  const CachedGroundState gs = obtain_ground_state(ctx, d, c.e);
  const BlochModel model(gs.gs, d, c.ion_mass);
  const auto mode = find_negative_mode(model, grid, 1e-10, ctx.threads);
  const ConditionReport conditions = check_conditions(d);

  const IonDensity reference = c.make_density();
  const CachedGroundState ref_gs = obtain_ground_state(ctx, reference, c.e);
  const auto ref_mode = find_negative_mode(BlochModel(ref_gs.gs, reference, c.ion_mass), grid, 1e-10, ctx.threads);

  const OutputSink sink(ctx.out, ctx.config_hash);
  ojson report = sink.header("counterexample");
  report["density"] = ojson::parse(density_spec_json(d));
  report["cache_key"] = gs.key;
  report["satisfies_wai"] = conditions.satisfies_wai;
  report["satisfies_ro_plus"] = conditions.satisfies_ro_plus;
  report["wai_max_violation"] = conditions.wai_max_violation;
  report["found"] = mode.has_value();
  if (mode) {
    report["theta0"] = vec_json(mode->theta);
    report["q"] = ojson::array();
    for (int k = 0; k < 3; ++k) report["q"].push_back({mode->q[k].real(), mode->q[k].imag()});
    report["value"] = mode->value;
    report["witness_energy"] = energy_form(model.blocks(mode->theta), mode->witness);
  }
  report["reference"] = {{"density", ojson::parse(density_spec_json(reference))},
                         {"found", ref_mode.has_value()},
                         {"value", ref_mode ? ref_mode->value : 0.0}};
  sink.write_json("counterexample.json", report);
  log(ctx) << "counterexample: negative mode " << (mode ? "found" : "not found") << ", reference "
           << (ref_mode ? "negative" : "clean") << '\n';
  return mode || ref_mode ? kNegativeVerdict : kOk;
}

int run_command(const std::string& verb, const Context& ctx, const std::string& scan_kind) {
  try {
    if (verb == "groundstate") return run_groundstate(ctx);
    if (verb == "scan") return run_scan(ctx, scan_kind);
    if (verb == "evolve") return run_evolve(ctx);
    if (verb == "counterexample") return run_counterexample(ctx);
    if (verb == "verify") return run_verify(ctx);
    throw ConfigError("unknown command '" + verb + "'");
  } catch (const ConfigError& ex) {
    log(ctx) << "config error: " << ex.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument& ex) {
    log(ctx) << "config error: " << ex.what() << '\n';
    return kConfigError;
  } catch (const NeutralityError& ex) {
    log(ctx) << "config error: " << ex.what() << '\n';
    return kConfigError;
  } catch (const ConvergenceError& ex) {
    log(ctx) << "not converged: " << ex.what() << '\n';
    return kNotConverged;
  } catch (const NotPositiveError& ex) {
    log(ctx) << "not positive: " << ex.what() << '\n';
    return kNotPositive;
  } catch (const std::exception& ex) {
    log(ctx) << "error: " << ex.what() << '\n';
    return kFailure;
  }
}

}  // namespace crystab::workbench
