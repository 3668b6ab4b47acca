#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "crystab/density.hpp"

using namespace crystab;

TEST(WaiFactor, ExactZerosAndNormalization) {
  EXPECT_EQ(wai_factor(0.0), 1.0);
  for (int k = 1; k <= 20; ++k) {
    EXPECT_EQ(wai_factor(kTwoPi * k), 0.0);
    EXPECT_EQ(wai_factor(-kTwoPi * k), 0.0);
  }
  EXPECT_NEAR(wai_factor(kPi), 2.0 / kPi * std::exp(-kPi * kPi), 1e-16);
  EXPECT_NEAR(wai_factor(3.0 * kPi), -2.0 / (3.0 * kPi) * std::exp(-9.0 * kPi * kPi), 1e-300);
}

TEST(Density, WaiProductVanishesOnDualLattice) {
  const IonDensity d = make_wai_product_density(0.3);
  EXPECT_DOUBLE_EQ(d(Vec3::Zero()).real(), 0.3);
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b)
      for (int c = -3; c <= 3; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        EXPECT_EQ(std::abs(d(kTwoPi * Vec3(a, b, c))), 0.0);
      }
}

TEST(Density, ConditionReport) {
  const ConditionReport wai = check_conditions(make_wai_product_density(0.1));
  EXPECT_TRUE(wai.satisfies_ro_plus);
  EXPECT_TRUE(wai.satisfies_wai);
  EXPECT_EQ(wai.wai_max_violation, 0.0);
  ASSERT_EQ(wai.wiener_min_eig.size(), 64u);
  for (const auto& s : wai.wiener_min_eig) EXPECT_GT(s.min_eig, 0.0);

  const ConditionReport gauss = check_conditions(make_gaussian_density(0.1, 0.05));
  EXPECT_TRUE(gauss.satisfies_ro_plus);
  EXPECT_FALSE(gauss.satisfies_wai);
  EXPECT_GT(gauss.decay_constant, 0.0);

  const ConditionReport smooth = check_conditions(make_wai_smooth_density(0.1));
  EXPECT_TRUE(smooth.satisfies_wai);
  for (const auto& s : smooth.wiener_min_eig) EXPECT_GT(s.min_eig, 1e-8);
}

TEST(Density, WienerMatrixMatchesFactor) {
  const IonDensity d = make_wai_smooth_density(0.1);
  const BlochParameter theta(Vec3(0.7, 1.9, 2.6));
  const WienerMatrix w = wiener_matrix(d, theta, 6);
  const auto rows = wiener_factor(d, theta, 6);
  EXPECT_LT((w.sigma - rows.adjoint() * rows).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(wiener_min_eigenvalue(d, theta, 6), min_eigenvalue_3x3(w.sigma), 1e-12 * w.sigma.norm());
  EXPECT_GT(w.tail_bound, 0.0);
  EXPECT_LT(wiener_matrix(d, theta, 8).tail_bound, w.tail_bound);
  EXPECT_THROW(wiener_matrix(d, BlochParameter(Vec3::Zero()), 6), ExcludedParameter);
}

TEST(Density, GramMinEigenvalueKeepsRelativeAccuracy) {
  Eigen::Matrix<cplx, Eigen::Dynamic, 3> rows(3, 3);
  rows << 1.0, 0.0, 0.0, 0.0, 1e-20, 0.0, 1e-5, 0.0, 1e-25;
  // rows^* rows = diag(1 + 1e-10, 1e-40, 1e-50)
  EXPECT_NEAR(gram_min_eigenvalue(rows) / 1e-50, 1.0, 1e-10);
}

TEST(Density, ModulatedKeepsLatticeValues) {
  const IonDensity base = make_gaussian_density(1.0, 0.05);
  const IonDensity same = make_modulated_density(base, 1.0);
  const IonDensity damped = make_modulated_density(base, 0.05);
  const Vec3 off(1.3, -2.2, 0.4);
  EXPECT_NEAR(std::abs(same(off) - base(off)), 0.0, 1e-15);
  EXPECT_NEAR(damped(Vec3::Zero()).real(), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(damped(kTwoPi * Vec3(1, 0, 0)) - base(kTwoPi * Vec3(1, 0, 0))), 0.0, 1e-12);
  EXPECT_LT(std::abs(damped(Vec3(kPi, kPi, kPi))), 0.06 * std::abs(base(Vec3(kPi, kPi, kPi))));
  EXPECT_THROW(make_modulated_density(base, 0.0), InvalidArgument);
}

TEST(Density, JsonRoundTrip) {
  const IonDensity d = make_modulated_density(make_gaussian_density(0.4, 0.07), 0.2, 0.6);
  const IonDensity back = density_from_json(density_spec_json(d), 1.0);
  EXPECT_EQ(back.family(), DensityFamily::modulated);
  EXPECT_EQ(density_spec_json(back), density_spec_json(d));
  for (const Vec3& xi : {Vec3(0.3, 0.1, -2.0), Vec3(kPi, 0, 0), Vec3(5.0, 4.0, 1.0)})
    EXPECT_NEAR(std::abs(back(xi) - d(xi)), 0.0, 1e-15);
  EXPECT_THROW(density_from_json("{\"family\":\"nope\"}", 1.0), InvalidArgument);
  EXPECT_THROW(density_from_json("not json", 1.0), InvalidArgument);
  EXPECT_NEAR(density_from_json("{\"family\":\"wai_product\"}", 0.25).total_charge(), 0.25, 0.0);
}

TEST(Density, RescaledChangesChargeOnly) {
  const IonDensity d = make_gaussian_density(2.0, 0.05);
  const IonDensity r = d.rescaled(0.5);
  EXPECT_DOUBLE_EQ(r.total_charge(), 0.5);
  EXPECT_NEAR(std::abs(r(Vec3(1, 2, 3)) - 0.25 * d(Vec3(1, 2, 3))), 0.0, 1e-16);
  EXPECT_THROW(d.rescaled(-1.0), InvalidArgument);
}

TEST(Density, TableInterpolation) {
  const auto path = std::filesystem::temp_directory_path() / "crystab_table_density.csv";
  {
    std::ofstream out(path);
    out << "xi1,xi2,xi3,re,im\n";
    for (int a = -2; a <= 2; ++a)
      for (int b = -2; b <= 2; ++b)
        for (int c = -2; c <= 2; ++c) out << a << ',' << b << ',' << c << ',' << (1.0 + a + 2 * b + 3 * c) << ",0\n";
  }
  const IonDensity d = load_table_density(path);
  EXPECT_EQ(d.family(), DensityFamily::custom_table);
  EXPECT_NEAR(d.total_charge(), 1.0, 1e-15);
  // trilinear interpolation reproduces affine data
  EXPECT_NEAR(d(Vec3(0.25, -1.5, 0.75)).real(), 1.0 + 0.25 - 3.0 + 2.25, 1e-13);
  EXPECT_EQ(std::abs(d(Vec3(2.5, 0, 0))), 0.0);
  std::filesystem::remove(path);
  EXPECT_THROW(load_table_density("/nonexistent/table.csv"), InvalidArgument);
}
