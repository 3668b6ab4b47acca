#include <gtest/gtest.h>

#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "crystab/stability.hpp"
#include "crystab/supercell.hpp"

using namespace crystab;

namespace {

BlochModel make_model(const IonDensity& d, double e, int M, double mass = 1.0) {
  return BlochModel(minimize_ground_state(d, e, 1.0, make_basis(M)), d, mass);
}

const BlochModel& smooth_model() {
  static const BlochModel m = make_model(make_wai_smooth_density(0.1), 0.1, 2);
  return m;
}

const BlochModel& small_model() {
  static const BlochModel m = make_model(make_wai_smooth_density(0.1), 0.1, 1, 2.0);
  return m;
}

const Propagator& corner_propagator() {
  static const Propagator p = Propagator::build(smooth_model().blocks(Vec3(kPi, kPi, kPi)));
  return p;
}

CVector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(nd(rng), nd(rng));
  return v;
}

SupercellState random_supercell(const BlochModel& model, int L, std::mt19937_64& rng) {
  SupercellState s = SupercellState::zero(L, model.ground_state().basis_ptr());
  for (auto& c : s.cells) c = random_state(model.ground_state().basis_ptr(), rng);
  return s;
}

}  // namespace

TEST(Propagator, SpectralStructure) {
  const Propagator& p = corner_propagator();
  EXPECT_LT((p.K() - p.K().adjoint()).cwiseAbs().maxCoeff(), 1e-12 * p.K().cwiseAbs().maxCoeff());
  const RVector& mu = p.K_eigenvalues();
  RVector sorted = mu;
  std::sort(sorted.begin(), sorted.end());
  for (Eigen::Index i = 0; i < sorted.size(); ++i)
    EXPECT_NEAR(sorted[i], -sorted[sorted.size() - 1 - i], 1e-9 * sorted.cwiseAbs().maxCoeff());
  EXPECT_GT(p.conditioning().min_eig_B, 0.0);
  EXPECT_LT((p.Lambda() * p.Lambda_inv() - CMatrix::Identity(p.dimension(), p.dimension())).norm(), 1e-9);
}

TEST(Propagator, IdentityAtZeroAndLinearity) {
  const Propagator& p = corner_propagator();
  std::mt19937_64 rng(41);
  const CVector a = random_vector(p.dimension(), rng), b = random_vector(p.dimension(), rng);
  EXPECT_LT((p.evolve(a, 0.0) - a).norm(), 1e-12 * a.norm());
  const cplx alpha(0.3, -1.2);
  const CVector lhs = p.evolve(CVector(alpha * a + b), 2.5);
  const CVector rhs = alpha * p.evolve(a, 2.5) + p.evolve(b, 2.5);
  EXPECT_LT((lhs - rhs).norm(), 1e-10 * lhs.norm());
}

TEST(Propagator, EnergyConservation) {
  const Propagator& p = corner_propagator();
  std::mt19937_64 rng(42);
  const CVector y0 = random_vector(p.dimension(), rng);
  const double w0 = p.energy_norm(y0);
  for (double t : {0.5, 3.0, 10.0, 50.0, 100.0})
    EXPECT_LT(std::abs(p.energy_norm(p.evolve(y0, t)) - w0), 1e-8 * w0);
}

TEST(Propagator, MatchesRk4AndMatrixExponential) {
  const BlochBlocks b = smooth_model().blocks(Vec3(kPi, kPi, kPi));
  const Propagator& p = corner_propagator();
  const CMatrix A = assemble_A(b);
  std::mt19937_64 rng(43);
  const CVector y0 = random_vector(p.dimension(), rng);
  const CVector spectral = p.evolve(y0, 1.0);
  const CVector rk = rk4_integrate(A, y0, 1.0, 16000);
  EXPECT_LT((rk - spectral).norm(), 1e-6 * spectral.norm());
  for (double t : {0.1, 1.0, 10.0}) {
    const CMatrix At = A * t;
    const CVector dense = At.exp() * y0;
    const CVector s = p.evolve(y0, t);
    EXPECT_LT((dense - s).norm(), 1e-8 * s.norm()) << "t=" << t;
  }
}

TEST(Propagator, DiagonalLambdaForDiagonalB) {
  CMatrix B = CMatrix::Zero(8, 8);
  for (int i = 0; i < 8; ++i) B(i, i) = 1.0 + i;
  const Propagator p = Propagator::build(B, Vec3(1, 1, 1));
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(p.Lambda()(i, i).real(), std::sqrt(1.0 + i), 1e-14);
  CMatrix off = p.Lambda();
  off.diagonal().setZero();
  EXPECT_LT(off.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Propagator, RejectsNonPositiveOperator) {
  const IonDensity d = build_counterexample(make_gaussian_density(1.0, 0.05), {1, 0, 0}, 0.05, 0.05);
  const BlochModel model = make_model(d, 0.05, 1);
  try {
    Propagator::build(model.blocks(Vec3(kPi, kPi, kPi)));
    FAIL() << "expected NotPositiveError";
  } catch (const NotPositiveError& err) {
    EXPECT_LT(err.min_eigenvalue(), 0.0);
  }
}

TEST(Rk4, RejectsBadInput) {
  const CMatrix A = CMatrix::Identity(3, 3);
  EXPECT_THROW(rk4_integrate(A, CVector::Ones(3), 1.0, 0), InvalidArgument);
  EXPECT_THROW(rk4_integrate(A, CVector::Ones(2), 1.0, 10), ShapeError);
}

TEST(Supercell, ZeroStaysZero) {
  const BlochModel& model = small_model();
  const SupercellState zero = SupercellState::zero(2, model.ground_state().basis_ptr());
  const SupercellTrajectory traj = evolve_supercell(model, zero, {0.0, 1.0, 5.0});
  ASSERT_EQ(traj.states.size(), 3u);
  for (const auto& s : traj.states) EXPECT_EQ(supercell_norm2(s), 0.0);
}

TEST(Supercell, SingleBlochModeMatchesPerThetaEvolution) {
  const BlochModel& model = small_model();
  const int L = 2;
  const IVec3 k{1, 0, 1};
  const Vec3 theta = kTwoPi / L * Vec3(k[0], k[1], k[2]);
  std::mt19937_64 rng(44);
  const StateVector y0 = random_state(model.ground_state().basis_ptr(), rng);
  SupercellState init = SupercellState::zero(L, model.ground_state().basis_ptr());
  for (std::size_t c = 0; c < init.cell_count(); ++c) {
    const IVec3 n = SupercellState::cell_of(L, c);
    init.cells[c] = std::polar(1.0, Vec3(n[0], n[1], n[2]).dot(theta)) * y0;
  }
  const SupercellTrajectory traj = evolve_supercell(model, init, {0.0, 2.0});
  const Propagator p = Propagator::build(model.blocks(theta));
  const CVector expected = p.evolve(y0.pack(), 2.0);
  for (std::size_t c = 0; c < init.cell_count(); ++c) {
    const IVec3 n = SupercellState::cell_of(L, c);
    const CVector got = traj.states[1].cells[c].pack();
    EXPECT_LT((got - std::polar(1.0, Vec3(n[0], n[1], n[2]).dot(theta)) * expected).norm(), 1e-10 * expected.norm());
  }
}

TEST(Supercell, EnergyDrift) {
  const BlochModel& model = small_model();
  std::mt19937_64 rng(45);
  const SupercellState init = random_supercell(model, 2, rng);
  SupercellOptions opts;
  opts.threads = 2;
  const SupercellTrajectory traj = evolve_supercell(model, init, {0.0, 10.0, 50.0, 100.0}, opts);
  EXPECT_TRUE(traj.zero_mode_regularized);
  EXPECT_LT(traj.max_relative_drift, 1e-7);
  ASSERT_EQ(traj.energy.size(), 4u);
  EXPECT_GT(traj.energy.front(), 0.0);
}

TEST(LinearizationOracle, SecondOrderDefect) {
  const BlochModel& model = small_model();
  std::mt19937_64 rng(46);
  const SupercellState v = random_supercell(model, 2, rng);
  const NonlinearSupercell system(model, 2);
  EXPECT_LT(system.equilibrium_defect(), 1e-8);
  const OracleReport rep = linearization_oracle(model, v, {1e-3, 5e-4});
  ASSERT_EQ(rep.ratios.size(), 1u);
  EXPECT_NEAR(rep.ratios[0], 2.0, 0.1);
  EXPECT_LT(rep.rows.back().relative_defect, 1e-5);
}

TEST(LinearizationOracle, ZeroDirectionAndPsi2Direction) {
  const BlochModel& model = small_model();
  const auto basis = model.ground_state().basis_ptr();
  const OracleReport zero = linearization_oracle(model, SupercellState::zero(2, basis), {1e-3});
  EXPECT_EQ(zero.rows[0].defect, 0.0);

  std::mt19937_64 rng(47);
  SupercellState v = SupercellState::zero(2, basis);
  for (auto& c : v.cells) c.psi2 = random_state(basis, rng).psi1;
  const OracleReport rep = linearization_oracle(model, v, {1e-3, 5e-4});
  EXPECT_LT(rep.rows.back().relative_defect, 1e-5);
}

TEST(LinearizationOracle, NonConstantGroundState) {
  const IonDensity d = make_gaussian_density(0.1, 0.05);
  const BlochModel model = make_model(d, 0.1, 1);
  std::mt19937_64 rng(48);
  const SupercellState v = random_supercell(model, 2, rng);
  const OracleReport rep = linearization_oracle(model, v, {1e-3, 5e-4});
  EXPECT_NEAR(rep.ratios[0], 2.0, 0.1);
  EXPECT_LT(rep.rows.back().relative_defect, 1e-5);
}
