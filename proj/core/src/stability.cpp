#include "crystab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crystab/parallel.hpp"

namespace crystab {

namespace {

int cutoff_of(const BlochBlocks& b) {
  const int cutoff = static_cast<int>(std::lround((std::cbrt(static_cast<double>(b.field_size())) - 1.0) / 2.0));
  const Eigen::Index side = 2 * cutoff + 1;
  if (cutoff < 1 || side * side * side != b.field_size()) throw ShapeError("coercivity: blocks do not match a cubic basis");
  return cutoff;
}

double inf_norm(const CMatrix& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

double min_generalized(const CMatrix& a, const RVector& weights) {
  const RVector s = weights.cwiseSqrt().cwiseInverse();
  CMatrix scaled = s.cast<cplx>().asDiagonal() * a * s.cast<cplx>().asDiagonal();
  scaled = 0.5 * (scaled + scaled.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(scaled, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("coercivity: eigensolver failed");
  return es.eigenvalues()[0];
}

// Fixed point of lambda = min eig [T2 + g^* (I + F K^{-1} F^*)^{-1} g], K = 2 H0 - lambda W, F = 2 f.
std::optional<double> schur_refinement(const BlochBlocks& b, const RVector& w_field, double start, int max_iter) {
  const Eigen::Index n = b.field_size();
  const CMatrix F = 2.0 * b.f;
  double lambda = start;
  for (int it = 0; it < max_iter; ++it) {
    CMatrix K = 2.0 * b.H0;
    K.diagonal() -= (lambda * w_field).cast<cplx>();
    Eigen::LLT<CMatrix> kl(K);
    if (kl.info() != Eigen::Success) return std::nullopt;
    CMatrix inner = CMatrix::Identity(n, n) + F * kl.solve(F.adjoint());
    inner = 0.5 * (inner + inner.adjoint()).eval();
    Eigen::LLT<CMatrix> il(inner);
    if (il.info() != Eigen::Success) return std::nullopt;
    // g^* inner^{-1} g = C^* C with C = L^{-1} g
    const CMatrixN3 c = il.matrixL().solve(b.g);
    double next;
    if (b.T2.isZero(0.0)) {
      next = gram_min_eigenvalue(c);
    } else {
      const CMatrix3 sigma_eff = b.T2 + c.adjoint() * c;
      next = min_eigenvalue_3x3(sigma_eff);
    }
    const bool done = std::abs(next - lambda) <= 1e-15 * std::abs(next);
    lambda = next;
    if (done) break;
  }
  return lambda;
}

}  // namespace

double energy_form(const BlochBlocks& blocks, const CVector& flat) {
  if (flat.size() != blocks.B.rows()) throw ShapeError("energy_form: state dimension does not match B");
  return flat.dot(blocks.B * flat).real();
}

double energy_form(const BlochBlocks& blocks, const StateVector& y) { return energy_form(blocks, y.pack()); }

double decomposed_energy_form(const BlochBlocks& blocks, const StateVector& y) {
  if (static_cast<Eigen::Index>(y.field_size()) != blocks.field_size())
    throw ShapeError("decomposed_energy_form: state dimension does not match B");
  const CVector& p1 = y.psi1.coeffs();
  const CVector& p2 = y.psi2.coeffs();
  const CVector square = 2.0 * (blocks.f * p1) + blocks.g * y.q;
  return 2.0 * p1.dot(blocks.H0 * p1).real() + square.squaredNorm() + 2.0 * p2.dot(blocks.H0 * p2).real() +
         y.q.dot(blocks.T2 * y.q).real() + y.p.squaredNorm() / blocks.ion_mass;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::positive: return "positive";
    case Verdict::degenerate: return "degenerate";
    case Verdict::negative: return "negative";
  }
  return "unknown";
}

double coercivity_dense(const BlochBlocks& blocks) {
  return min_generalized(blocks.B, gram_V(DualBasis(cutoff_of(blocks))));
}

Coercivity coercivity(const BlochBlocks& b, const CoercivityOptions& opts) {
  const Eigen::Index n = b.field_size();
  const RVector gram = gram_V(DualBasis(cutoff_of(b)));
  const RVector w_field = gram.head(n);

  Coercivity out;
  out.kappa_p = 1.0 / b.ion_mass;
  out.kappa_psi2 = min_generalized(2.0 * b.H0, w_field);

  CMatrix sector(n + 3, n + 3);
  sector.topLeftCorner(n, n) = b.B.topLeftCorner(n, n);
  sector.topRightCorner(n, 3) = b.B.block(0, 2 * n, n, 3);
  sector.bottomLeftCorner(3, n) = b.B.block(2 * n, 0, 3, n);
  sector.bottomRightCorner(3, 3) = b.B.block(2 * n, 2 * n, 3, 3);
  RVector w_sector(n + 3);
  w_sector << w_field, RVector::Ones(3);
  out.kappa_psi1_q = min_generalized(sector, w_sector);

  const double b_scale = inf_norm(b.B);
  out.scale = b_scale;
  if (out.kappa_psi1_q < opts.refine_below * b_scale) {
    if (auto refined = schur_refinement(b, w_field, std::min(0.0, out.kappa_psi1_q), opts.max_refinements)) {
      out.kappa_psi1_q = *refined;
      out.refined = true;
      out.scale = inf_norm(b.T1) + inf_norm(b.T2);
    }
  }
  out.kappa = std::min({out.kappa_psi1_q, out.kappa_psi2, out.kappa_p});
  if (out.kappa != out.kappa_psi1_q) out.scale = b_scale;
  const double threshold = opts.tol * out.scale;
  if (out.kappa > threshold)
    out.verdict = Verdict::positive;
  else if (out.kappa < -threshold)
    out.verdict = Verdict::negative;
  else
    out.verdict = Verdict::degenerate;
  return out;
}

std::vector<BlochParameter> uniform_theta_grid(int L, double exclusion_radius, bool cell_centred) {
  if (L < 1) throw InvalidArgument("uniform_theta_grid: L must be >= 1");
  if (!(exclusion_radius >= 0.0)) throw InvalidArgument("uniform_theta_grid: exclusion radius must be >= 0");
  const double shift = cell_centred ? 0.5 : 0.0;
  std::vector<BlochParameter> grid;
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b)
      for (int c = 0; c < L; ++c) {
        const Vec3 theta = kTwoPi / L * Vec3(a + shift, b + shift, c + shift);
        BlochParameter p(theta, exclusion_radius);
        if (!p.excluded()) grid.push_back(p);
      }
  return grid;
}

double StabilityScan::positive_fraction() const {
  return points.empty() ? 0.0 : static_cast<double>(positive) / static_cast<double>(points.size());
}

long StabilityScan::argmin_kappa() const {
  long best = -1;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].error.empty()) continue;
    if (best < 0 || points[i].kappa < points[static_cast<std::size_t>(best)].kappa) best = static_cast<long>(i);
  }
  return best;
}

StabilityScan positivity_scan(const BlochModel& model, const std::vector<BlochParameter>& grid,
                              const ScanOptions& opts) {
  StabilityScan scan;
  scan.cutoff = model.basis().cutoff();
  scan.e = model.ground_state().e;
  scan.points.resize(grid.size());
  parallel_for(grid.size(), opts.threads, [&](std::size_t i) {
    ScanPoint& pt = scan.points[i];
    pt.theta = grid[i].theta();
    pt.dist = grid[i].dist_to_dual();
    try {
      grid[i].require_admissible("positivity_scan");
      const Coercivity c = coercivity(model.blocks(pt.theta), opts.coercivity);
      pt.kappa = c.kappa;
      pt.verdict = c.verdict;
      pt.refined = c.refined;
      pt.sigma_min_eig = wiener_min_eigenvalue(model.density(), grid[i], opts.wiener_terms);
    } catch (const std::exception& ex) {
      pt.error = ex.what();
    }
  });
  for (const auto& pt : scan.points) {
    if (!pt.error.empty())
      ++scan.failed;
    else if (pt.verdict == Verdict::positive)
      ++scan.positive;
    else if (pt.verdict == Verdict::negative)
      ++scan.negative;
    else
      ++scan.degenerate;
  }
  return scan;
}

std::vector<ScanPoint> wiener_scan(const IonDensity& d, const std::vector<BlochParameter>& grid,
                                   const ScanOptions& opts) {
  std::vector<ScanPoint> out(grid.size());
  parallel_for(grid.size(), opts.threads, [&](std::size_t i) {
    ScanPoint& pt = out[i];
    pt.theta = grid[i].theta();
    pt.dist = grid[i].dist_to_dual();
    try {
      const auto rows = wiener_factor(d, grid[i], opts.wiener_terms);
      pt.sigma_min_eig = gram_min_eigenvalue(rows);
      const double scale = rows.rowwise().squaredNorm().sum();
      pt.verdict = pt.sigma_min_eig > opts.coercivity.tol * scale    ? Verdict::positive
                   : pt.sigma_min_eig < -opts.coercivity.tol * scale ? Verdict::negative
                                                                     : Verdict::degenerate;
    } catch (const std::exception& ex) {
      pt.error = ex.what();
    }
  });
  return out;
}

IonDensity build_counterexample(const IonDensity& base, const IVec3& m0, double s, double e, double width) {
  if (m0[0] == 0 && m0[1] == 0 && m0[2] == 0) throw InvalidArgument("build_counterexample: m0 must be nonzero");
  if (!(e > 0.0 && e <= 1.0)) throw InvalidArgument("build_counterexample: e must lie in (0, 1]");
  const Vec3 k0 = kTwoPi * Vec3(m0[0], m0[1], m0[2]);
  if (std::abs(base(k0)) == 0.0)
    throw InvalidArgument("build_counterexample: base transform vanishes at 2 pi m0; the Wai condition cannot break");
  return make_modulated_density(base.rescaled(e * base.total_charge()), s, width);
}

std::optional<NegativeMode> find_negative_mode(const BlochModel& model, const std::vector<BlochParameter>& grid,
                                               double tol, unsigned threads) {
  struct Candidate {
    double value = std::numeric_limits<double>::infinity();
    double scale = 0.0;
    CVec3 q = CVec3::Zero();
    bool ok = false;
  };
  std::vector<Candidate> found(grid.size());
  const double t2_scale = model.T2().cwiseAbs().maxCoeff();
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    if (grid[i].excluded()) return;
    const CMatrixN3 g = model.g(grid[i].theta());
    CMatrix3 t = g.adjoint() * g + model.T2();
    t = 0.5 * (t + t.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMatrix3> es(t);
    found[i].value = es.eigenvalues()[0];
    found[i].q = es.eigenvectors().col(0);
    found[i].scale = std::max((g.adjoint() * g).cwiseAbs().maxCoeff(), t2_scale);
    found[i].ok = true;
  });
  long best = -1;
  for (std::size_t i = 0; i < found.size(); ++i)
    if (found[i].ok && (best < 0 || found[i].value < found[static_cast<std::size_t>(best)].value))
      best = static_cast<long>(i);
  if (best < 0) return std::nullopt;
  const Candidate& c = found[static_cast<std::size_t>(best)];
  if (!(c.value < -tol * c.scale)) return std::nullopt;
  NegativeMode mode;
  mode.theta = grid[static_cast<std::size_t>(best)].theta();
  // Phase fixed so that the largest component is real and positive.
  Eigen::Index k = 0;
  c.q.cwiseAbs().maxCoeff(&k);
  mode.q = c.q * (std::abs(c.q[k]) / c.q[k]);
  mode.value = c.value;
  mode.witness = StateVector::zero(model.ground_state().basis_ptr());
  mode.witness.q = mode.q;
  return mode;
}

CMatrix3 t2_small_charge_limit(const IonDensity& sigma, const DualBasis& basis) {
  CMatrix3 out = CMatrix3::Zero();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (i == basis.zero_index()) continue;
    const Vec3 xi = basis.dual_vector(i);
    out += (std::norm(sigma(xi)) / xi.squaredNorm() * (xi * xi.transpose())).cast<cplx>();
  }
  return out;
}

}  // namespace crystab
