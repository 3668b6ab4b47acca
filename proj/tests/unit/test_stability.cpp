#include <gtest/gtest.h>

#include <random>

#include "crystab/stability.hpp"

using namespace crystab;

namespace {

BlochModel make_model(const IonDensity& d, double e, double mass = 1.0, int M = 2) {
  return BlochModel(minimize_ground_state(d, e, 1.0, make_basis(M)), d, mass);
}

const BlochModel& smooth_model() {
  static const BlochModel m = make_model(make_wai_smooth_density(0.1), 0.1, 1.5);
  return m;
}

const BlochModel& gauss_model() {
  static const BlochModel m = make_model(make_gaussian_density(0.1, 0.05), 0.1);
  return m;
}

const BlochModel& product_model() {
  static const BlochModel m = make_model(make_wai_product_density(0.1), 0.1);
  return m;
}

const IonDensity& counterexample_density() {
  static const IonDensity d = build_counterexample(make_gaussian_density(1.0, 0.05), {1, 0, 0}, 0.05, 0.05);
  return d;
}

const BlochModel& counterexample_model() {
  static const BlochModel m = make_model(counterexample_density(), 0.05);
  return m;
}

Vec3 random_theta(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, kTwoPi - 0.2);
  return Vec3(u(rng), u(rng), u(rng));
}

}  // namespace

TEST(EnergyForm, PerfectSquareDecomposition) {
  std::mt19937_64 rng(31);
  for (const BlochModel* model : {&smooth_model(), &gauss_model()}) {
    for (int trial = 0; trial < 100; ++trial) {
      const BlochBlocks b = model->blocks(random_theta(rng));
      const StateVector y = random_state(model->ground_state().basis_ptr(), rng);
      const double direct = energy_form(b, y);
      EXPECT_NEAR(direct, decomposed_energy_form(b, y), 1e-10 * (1.0 + std::abs(direct)));
      EXPECT_NEAR(direct, energy_form(b, y.pack()), 1e-12 * (1.0 + std::abs(direct)));
    }
  }
}

TEST(EnergyForm, IonAndPsi2Sectors) {
  const BlochModel& model = gauss_model();
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const BlochParameter theta(random_theta(rng));
    const BlochBlocks b = model.blocks(theta.theta());
    StateVector y = StateVector::zero(model.ground_state().basis_ptr());
    std::normal_distribution<double> nd;
    for (int k = 0; k < 3; ++k) {
      y.q[k] = cplx(nd(rng), nd(rng));
      y.p[k] = cplx(nd(rng), nd(rng));
    }
    const double expected = (y.q.adjoint() * (b.T1 + b.T2) * y.q)(0, 0).real() + y.p.squaredNorm() / model.ion_mass();
    EXPECT_NEAR(energy_form(b, y), expected, 1e-12 * (1.0 + std::abs(expected)));

    StateVector z = StateVector::zero(model.ground_state().basis_ptr());
    z.psi2 = random_state(model.ground_state().basis_ptr(), rng).psi1;
    const double d = theta.dist_to_dual();
    EXPECT_GE(energy_form(b, z), d * d * z.psi2.norm2() - 1e-10);
  }
}

TEST(Coercivity, LowerBoundOnRandomStates) {
  const BlochModel& model = smooth_model();
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const BlochBlocks b = model.blocks(random_theta(rng));
    const Coercivity c = coercivity(b);
    EXPECT_EQ(c.verdict, Verdict::positive);
    EXPECT_GT(c.kappa, 0.0);
    EXPECT_NEAR(c.kappa, coercivity_dense(b), 1e-9 * c.scale);
    EXPECT_DOUBLE_EQ(c.kappa_p, 1.0 / model.ion_mass());
    for (int k = 0; k < 10; ++k) {
      const StateVector y = random_state(model.ground_state().basis_ptr(), rng);
      EXPECT_GE(energy_form(b, y), c.kappa * norm_V2(y) * (1.0 - 1e-10));
    }
  }
}

TEST(Coercivity, WaiProductResolvedBySchurRefinement) {
  const BlochBlocks b = product_model().blocks(Vec3(kPi, kPi, kPi));
  const Coercivity c = coercivity(b);
  EXPECT_TRUE(c.refined);
  EXPECT_GT(c.kappa, 0.0);
  EXPECT_NE(c.verdict, Verdict::negative);
}

TEST(Coercivity, CounterexampleIsNegative) {
  const BlochBlocks b = counterexample_model().blocks(Vec3(kPi, kPi, kPi));
  const Coercivity c = coercivity(b);
  EXPECT_EQ(c.verdict, Verdict::negative);
  EXPECT_LT(c.kappa, 0.0);
}

TEST(ThetaGrid, CountsAndExclusion) {
  const double r = 0.05 * kTwoPi;
  EXPECT_EQ(uniform_theta_grid(4, r).size(), 64u);
  EXPECT_EQ(uniform_theta_grid(4, r, false).size(), 63u);
  for (const auto& t : uniform_theta_grid(8, r, false)) EXPECT_GE(t.dist_to_dual(), r);
  EXPECT_THROW(uniform_theta_grid(0, r), InvalidArgument);
}

TEST(PositivityScan, WaiProductSmallGrid) {
  const auto grid = uniform_theta_grid(2, 0.05 * kTwoPi);
  ScanOptions opts;
  opts.threads = 2;
  const StabilityScan scan = positivity_scan(product_model(), grid, opts);
  ASSERT_EQ(scan.points.size(), 8u);
  EXPECT_EQ(scan.negative, 0u);
  EXPECT_EQ(scan.failed, 0u);
  for (const auto& p : scan.points) {
    EXPECT_GT(p.kappa, 0.0);
    EXPECT_GT(p.sigma_min_eig, 0.0);
  }
  const auto wiener = wiener_scan(product_model().density(), grid, opts);
  for (const auto& p : wiener) EXPECT_GT(p.sigma_min_eig, 0.0);
}

TEST(PositivityScan, ThreadCountDoesNotChangeResults) {
  const auto grid = uniform_theta_grid(2, 0.05 * kTwoPi);
  ScanOptions one, three;
  three.threads = 3;
  const StabilityScan a = positivity_scan(smooth_model(), grid, one);
  const StabilityScan b = positivity_scan(smooth_model(), grid, three);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i].kappa, b.points[i].kappa);
  EXPECT_EQ(a.positive, a.points.size());
  EXPECT_DOUBLE_EQ(a.positive_fraction(), 1.0);
  EXPECT_GE(a.argmin_kappa(), 0);
}

TEST(Counterexample, DensityProperties) {
  const IonDensity& d = counterexample_density();
  EXPECT_NEAR(d(Vec3::Zero()).real(), 0.05, 1e-15);
  const ConditionReport rep = check_conditions(d);
  EXPECT_TRUE(rep.satisfies_ro_plus);
  EXPECT_FALSE(rep.satisfies_wai);
  const IonDensity base = make_gaussian_density(1.0, 0.05);
  const Vec3 k(kTwoPi, 0, 0);
  EXPECT_NEAR(d(k).real(), 0.05 * base(k).real(), 1e-12);
  EXPECT_THROW(build_counterexample(base, {0, 0, 0}, 0.05, 0.05), InvalidArgument);
  EXPECT_THROW(build_counterexample(make_wai_product_density(1.0), {1, 0, 0}, 0.05, 0.05), InvalidArgument);
}

TEST(Counterexample, NegativeModeWitness) {
  const BlochModel& model = counterexample_model();
  const auto mode = find_negative_mode(model, uniform_theta_grid(2, 0.05 * kTwoPi));
  ASSERT_TRUE(mode.has_value());
  EXPECT_LT(mode->value, 0.0);
  EXPECT_NEAR(mode->q.norm(), 1.0, 1e-12);
  const BlochBlocks b = model.blocks(mode->theta);
  EXPECT_NEAR(energy_form(b, mode->witness), mode->value, 1e-12);
  EXPECT_EQ(mode->witness.psi1.coeffs().norm(), 0.0);
  EXPECT_EQ(mode->witness.p.norm(), 0.0);
}

TEST(Counterexample, WaiDensityHasNoNegativeMode) {
  EXPECT_FALSE(find_negative_mode(smooth_model(), uniform_theta_grid(2, 0.05 * kTwoPi)).has_value());
}

TEST(T2, SmallChargeLimit) {
  const IonDensity shape = make_gaussian_density(1.0, 0.05);
  std::vector<double> es{0.02, 0.04, 0.08, 0.16}, residual;
  const auto basis = make_basis(2);
  for (double e : es) {
    const IonDensity d = shape.rescaled(e);
    const GroundState gs = minimize_ground_state(d, e, 1.0, basis);
    const CMatrix3 lead = t2_small_charge_limit(d, *basis);
    residual.push_back((assemble_T2(gs, d) + lead).cwiseAbs().maxCoeff());
    EXPECT_LT(residual.back(), 0.2 * lead.cwiseAbs().maxCoeff());
  }
  EXPECT_GE(loglog_slope(es, residual), 3.5);
}
