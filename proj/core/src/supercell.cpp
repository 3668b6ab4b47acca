#include "crystab/supercell.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "crystab/parallel.hpp"

namespace crystab {

namespace {

double inf_norm(const CMatrix& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

void require_model_basis(const BlochModel& model, const SupercellState& s, const char* where) {
  if (s.L < 1 || s.cells.size() != static_cast<std::size_t>(s.L) * s.L * s.L)
    throw ShapeError(std::string(where) + ": malformed supercell state");
  for (const auto& c : s.cells)
    if (!(c.basis() == model.basis())) throw ShapeError(std::string(where) + ": state basis differs from the model");
}

SupercellState axpy(const SupercellState& a, cplx s, const SupercellState& b) {
  SupercellState out = a;
  for (std::size_t i = 0; i < out.cells.size(); ++i) out.cells[i] += s * b.cells[i];
  return out;
}

}  // namespace

SupercellTrajectory evolve_supercell(const BlochModel& model, const SupercellState& initial,
                                     const std::vector<double>& times, const SupercellOptions& opts) {
  require_model_basis(model, initial, "evolve_supercell");
  const BasisPtr basis = initial.cells.front().psi1.basis_ptr();
  const BlochComponents comps = bloch_decompose(initial);
  const std::size_t modes = comps.modes.size();

  std::vector<std::vector<CVector>> evolved(modes);
  std::vector<std::vector<double>> energies(modes);
  std::vector<char> regularized(modes, 0), fallback(modes, 0);

  parallel_for(modes, opts.threads, [&](std::size_t k) {
    Vec3 theta = comps.thetas[k];
    if (BlochParameter(theta).excluded()) {
      theta = Vec3::Constant(opts.zero_mode_shift);
      regularized[k] = 1;
    }
    const BlochBlocks blocks = model.blocks(theta);
    const CVector y0 = comps.modes[k].pack();
    std::optional<Propagator> prop;
    try {
      prop = Propagator::build(blocks, opts.rel_tol);
    } catch (const NotPositiveError&) {
      if (!opts.ode_fallback) throw;
      fallback[k] = 1;
    }
    if (prop) {
      for (double t : times) evolved[k].push_back(prop->evolve(y0, t));
    } else {
      const CMatrix A = assemble_A(blocks);
      const double rate = std::max(inf_norm(A), 1e-12);
      CVector y = y0;
      double t_now = 0.0;
      for (double t : times) {
        if (t < t_now) {
          y = y0;
          t_now = 0.0;
        }
        const int steps = std::max(1, static_cast<int>(std::ceil((t - t_now) * rate / 0.5)));
        if (t > t_now) y = rk4_integrate(A, y, t - t_now, steps);
        t_now = t;
        evolved[k].push_back(y);
      }
    }
    for (const auto& y : evolved[k]) energies[k].push_back(y.dot(blocks.B * y).real());
  });

  SupercellTrajectory traj;
  traj.times = times;
  const double inv_cells = 1.0 / static_cast<double>(modes);
  for (std::size_t k = 0; k < modes; ++k) {
    traj.zero_mode_regularized = traj.zero_mode_regularized || regularized[k];
    if (fallback[k]) traj.ode_fallback_thetas.push_back(comps.thetas[k]);
  }
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    BlochComponents at;
    at.L = comps.L;
    at.thetas = comps.thetas;
    double energy = 0.0;
    for (std::size_t k = 0; k < modes; ++k) {
      at.modes.push_back(StateVector::unpack(basis, evolved[k][ti]));
      energy += energies[k][ti];
    }
    energy *= inv_cells;
    traj.states.push_back(bloch_reconstruct(at));
    traj.energy.push_back(energy);
    traj.w_norm.push_back(std::sqrt(std::max(0.0, energy)));
  }
  if (!traj.w_norm.empty()) {
    const double ref = traj.w_norm.front();
    for (double w : traj.w_norm) {
      const double drift = ref > 0.0 ? std::abs(w - ref) / ref : std::abs(w - ref);
      traj.max_relative_drift = std::max(traj.max_relative_drift, drift);
    }
  }
  return traj;
}

SupercellState apply_supercell_generator(const BlochModel& model, const SupercellState& v, unsigned threads) {
  require_model_basis(model, v, "apply_supercell_generator");
  const BasisPtr basis = v.cells.front().psi1.basis_ptr();
  BlochComponents comps = bloch_decompose(v);
  parallel_for(comps.modes.size(), threads, [&](std::size_t k) {
    AssemblyOptions opts;
    opts.drop_zero_mode = BlochParameter(comps.thetas[k]).excluded();
    const CMatrix A = assemble_A(model.blocks(comps.thetas[k], opts));
    comps.modes[k] = StateVector::unpack(basis, A * comps.modes[k].pack());
  });
  return bloch_reconstruct(comps);
}

NonlinearSupercell::NonlinearSupercell(const BlochModel& model, int L) : model_(model), L_(L) {
  if (L < 1) throw InvalidArgument("NonlinearSupercell: L must be >= 1");
  const int M = model.basis().cutoff();
  lo_ = -L * M - L + 1;
  hi_ = L * M;
  side_ = hi_ - lo_ + 1;
  const std::size_t total = static_cast<std::size_t>(side_) * side_ * side_;
  freq_.resize(total);
  sigma_hat_.resize(total);
  sigma_neg_.resize(total);
  for (int a = lo_; a <= hi_; ++a)
    for (int b = lo_; b <= hi_; ++b)
      for (int c = lo_; c <= hi_; ++c) {
        const std::size_t i = fine_index({a, b, c});
        freq_[i] = kTwoPi / L * Vec3(a, b, c);
        sigma_hat_[i] = model.density()(freq_[i]);
        sigma_neg_[i] = model.density()(-freq_[i]);
      }
}

std::size_t NonlinearSupercell::fine_index(const IVec3& q) const {
  return (static_cast<std::size_t>(q[0] - lo_) * side_ + static_cast<std::size_t>(q[1] - lo_)) * side_ +
         static_cast<std::size_t>(q[2] - lo_);
}

CVector NonlinearSupercell::convolve(const CVector& a, const CVector& b) const {
  const std::size_t total = freq_.size();
  CVector out = CVector::Zero(static_cast<Eigen::Index>(total));
  std::vector<std::size_t> nonzero;
  for (std::size_t j = 0; j < total; ++j)
    if (b[static_cast<Eigen::Index>(j)] != 0.0) nonzero.push_back(j);
  const std::size_t s = static_cast<std::size_t>(side_);
  for (std::size_t i = 0; i < total; ++i) {
    const long i0 = static_cast<long>(i / (s * s)), i1 = static_cast<long>((i / s) % s), i2 = static_cast<long>(i % s);
    cplx acc = 0.0;
    for (std::size_t j : nonzero) {
      // box index of q - q' is (i - j) - lo per axis
      const long e0 = i0 - static_cast<long>(j / (s * s)) - lo_;
      const long e1 = i1 - static_cast<long>((j / s) % s) - lo_;
      const long e2 = i2 - static_cast<long>(j % s) - lo_;
      if (e0 < 0 || e1 < 0 || e2 < 0 || e0 >= side_ || e1 >= side_ || e2 >= side_) continue;
      acc += a[static_cast<Eigen::Index>((static_cast<std::size_t>(e0) * s + static_cast<std::size_t>(e1)) * s +
                                         static_cast<std::size_t>(e2))] *
             b[static_cast<Eigen::Index>(j)];
    }
    out[static_cast<Eigen::Index>(i)] = acc;
  }
  return out;
}

NonlinearSupercell::Fine NonlinearSupercell::equilibrium() const {
  Fine x;
  const auto total = static_cast<Eigen::Index>(freq_.size());
  x.psi_r = CVector::Zero(total);
  x.psi_i = CVector::Zero(total);
  const std::size_t cells = static_cast<std::size_t>(L_) * L_ * L_;
  x.q.assign(cells, CVec3::Zero());
  x.p.assign(cells, CVec3::Zero());
  const DualBasis& basis = model_.basis();
  const FourierField& psi0 = model_.ground_state().psi0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const IVec3& m = basis.point(i);
    x.psi_r[static_cast<Eigen::Index>(fine_index({L_ * m[0], L_ * m[1], L_ * m[2]}))] = psi0[i];
  }
  return x;
}

NonlinearSupercell::Fine NonlinearSupercell::embed(const SupercellState& v) const {
  require_model_basis(model_, v, "NonlinearSupercell");
  if (v.L != L_) throw ShapeError("NonlinearSupercell: supercell size mismatch");
  Fine x = equilibrium();
  x.psi_r.setZero();
  const BlochComponents comps = bloch_decompose(v);
  const DualBasis& basis = model_.basis();
  const double inv_cells = 1.0 / static_cast<double>(comps.modes.size());
  for (std::size_t k = 0; k < comps.modes.size(); ++k) {
    const IVec3 kk = SupercellState::cell_of(L_, k);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const IVec3& m = basis.point(i);
      const auto idx =
          static_cast<Eigen::Index>(fine_index({L_ * m[0] - kk[0], L_ * m[1] - kk[1], L_ * m[2] - kk[2]}));
      x.psi_r[idx] = comps.modes[k].psi1[i] * inv_cells;
      x.psi_i[idx] = comps.modes[k].psi2[i] * inv_cells;
    }
  }
  for (std::size_t n = 0; n < v.cells.size(); ++n) {
    x.q[n] = v.cells[n].q;
    x.p[n] = v.cells[n].p;
  }
  return x;
}

SupercellState NonlinearSupercell::extract(const Fine& f) const {
  const BasisPtr basis = model_.ground_state().basis_ptr();
  SupercellState ions = SupercellState::zero(L_, basis);
  for (std::size_t n = 0; n < ions.cells.size(); ++n) {
    ions.cells[n].q = f.q[n];
    ions.cells[n].p = f.p[n];
  }
  BlochComponents comps = bloch_decompose(ions);
  const double cells = static_cast<double>(comps.modes.size());
  for (std::size_t k = 0; k < comps.modes.size(); ++k) {
    const IVec3 kk = SupercellState::cell_of(L_, k);
    for (std::size_t i = 0; i < basis->size(); ++i) {
      const IVec3& m = basis->point(i);
      const auto idx =
          static_cast<Eigen::Index>(fine_index({L_ * m[0] - kk[0], L_ * m[1] - kk[1], L_ * m[2] - kk[2]}));
      comps.modes[k].psi1[i] = cells * f.psi_r[idx];
      comps.modes[k].psi2[i] = cells * f.psi_i[idx];
    }
  }
  return bloch_reconstruct(comps);
}

NonlinearSupercell::Fine NonlinearSupercell::vector_field(const Fine& x) const {
  const std::size_t total = freq_.size();
  const double e = model_.ground_state().e;
  const double omega0 = model_.ground_state().omega0;
  const double inv_cells = 1.0 / (static_cast<double>(L_) * L_ * L_);
  const std::size_t cells = x.q.size();

  auto position = [&](std::size_t n) {
    const IVec3 c = SupercellState::cell_of(L_, n);
    return CVec3(Vec3(c[0], c[1], c[2]).cast<cplx>() + x.q[n]);
  };

  const CVector density = convolve(x.psi_r, x.psi_r) + convolve(x.psi_i, x.psi_i);
  CVector phi(static_cast<Eigen::Index>(total));
  for (std::size_t i = 0; i < total; ++i) {
    const double k2 = freq_[i].squaredNorm();
    if (k2 == 0.0) {
      phi[static_cast<Eigen::Index>(i)] = 0.0;
      continue;
    }
    cplx ions = 0.0;
    for (std::size_t n = 0; n < cells; ++n) ions += std::exp(cplx(0.0, 1.0) * freq_[i].cast<cplx>().dot(position(n)));
    const cplx rho = inv_cells * sigma_hat_[i] * ions - e * density[static_cast<Eigen::Index>(i)];
    phi[static_cast<Eigen::Index>(i)] = rho / k2;
  }

  auto apply_k = [&](const CVector& u) {
    CVector out = -e * convolve(phi, u);
    for (std::size_t i = 0; i < total; ++i)
      out[static_cast<Eigen::Index>(i)] += (0.5 * freq_[i].squaredNorm() - omega0) * u[static_cast<Eigen::Index>(i)];
    return out;
  };

  Fine f;
  f.psi_r = apply_k(x.psi_i);
  f.psi_i = -apply_k(x.psi_r);
  f.q.resize(cells);
  f.p.resize(cells);
  const double mass = model_.ion_mass();
  for (std::size_t n = 0; n < cells; ++n) {
    f.q[n] = x.p[n] / mass;
    CVec3 force = CVec3::Zero();
    const CVec3 pos = position(n);
    for (std::size_t i = 0; i < total; ++i) {
      const cplx ph = phi[static_cast<Eigen::Index>(i)];
      if (ph == 0.0) continue;
      const cplx w = cplx(0.0, 1.0) * ph * sigma_neg_[i] * std::exp(cplx(0.0, -1.0) * freq_[i].cast<cplx>().dot(pos));
      force += w * freq_[i].cast<cplx>();
    }
    f.p[n] = force;
  }
  return f;
}

SupercellState NonlinearSupercell::difference_quotient(const SupercellState& v, double h) const {
  if (!(h > 0.0)) throw InvalidArgument("difference_quotient: h must be positive");
  const Fine x0 = equilibrium();
  const Fine dv = embed(v);
  Fine xh = x0;
  xh.psi_r += h * dv.psi_r;
  xh.psi_i += h * dv.psi_i;
  for (std::size_t n = 0; n < xh.q.size(); ++n) {
    xh.q[n] += h * dv.q[n];
    xh.p[n] += h * dv.p[n];
  }
  const Fine f0 = vector_field(x0);
  Fine fh = vector_field(xh);
  fh.psi_r = (fh.psi_r - f0.psi_r) / h;
  fh.psi_i = (fh.psi_i - f0.psi_i) / h;
  for (std::size_t n = 0; n < fh.q.size(); ++n) {
    fh.q[n] = (fh.q[n] - f0.q[n]) / h;
    fh.p[n] = (fh.p[n] - f0.p[n]) / h;
  }
  return extract(fh);
}

double NonlinearSupercell::equilibrium_defect() const {
  const Fine f = vector_field(equilibrium());
  double worst = std::max(f.psi_r.cwiseAbs().maxCoeff(), f.psi_i.cwiseAbs().maxCoeff());
  for (std::size_t n = 0; n < f.q.size(); ++n)
    worst = std::max({worst, f.q[n].cwiseAbs().maxCoeff(), f.p[n].cwiseAbs().maxCoeff()});
  return worst;
}

OracleReport linearization_oracle(const BlochModel& model, const SupercellState& v, const std::vector<double>& hs,
                                  unsigned threads) {
  if (hs.empty()) throw InvalidArgument("linearization_oracle: no step sizes");
  const SupercellState av = apply_supercell_generator(model, v, threads);
  const NonlinearSupercell system(model, v.L);
  OracleReport report;
  report.generator_norm = std::sqrt(supercell_norm2(av));
  for (double h : hs) {
    const SupercellState dq = system.difference_quotient(v, h);
    OracleRow row;
    row.h = h;
    row.defect = std::sqrt(supercell_norm2(axpy(dq, -1.0, av)));
    row.relative_defect = report.generator_norm > 0.0 ? row.defect / report.generator_norm : row.defect;
    report.rows.push_back(row);
  }
  for (std::size_t i = 0; i + 1 < report.rows.size(); ++i)
    report.ratios.push_back(report.rows[i + 1].defect > 0.0 ? report.rows[i].defect / report.rows[i + 1].defect : 0.0);
  return report;
}

}  // namespace crystab
