#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rodband/electrostatics.hpp"

using namespace rodband;

namespace {

const CellGeometry kGeom1 = CellGeometry::make(0.2, 0.4);
const CellGeometry kGeom2 = CellGeometry::make(0.15, 0.4);
constexpr std::array<double, 2> kX{1.0, 0.0};

const LatticeSumTable& sums() {
  static const LatticeSumTable t = lattice_sums_for(25, 400.0);
  return t;
}

LatticeSumTable dilute(int order) {
  LatticeSumTable t;
  t.max_order = order;
  t.radius = 0.0;
  t.values.assign(static_cast<std::size_t>(order) + 1, 0.0);
  t.s2 = 0.0;
  return t;
}

const ElectrostaticSpectrum& spectrum1() {
  static const ElectrostaticSpectrum s = compute_spectrum(kGeom1, sums(), 20, kX);
  return s;
}

}  // namespace

TEST(Electrostatics, MatrixExamples) {
  const RayleighMatrix M = assemble_matrix(kGeom1, sums(), 20);
  EXPECT_NEAR(M.raw(1, 1), -0.047947, 5e-7);
  // A_11 carries the S_2 convention term.
  EXPECT_NEAR(M.raw(0, 0), 0.35080, 5e-6);
  for (int l = 3; l <= 20; l += 2) {
    const double p = std::pow(0.2, -2.0 * l) + std::pow(0.4, -2.0 * l);
    EXPECT_NEAR(M.raw(l - 1, l - 1), std::pow(0.4, -2.0 * l) / p, 1e-14) << l;
  }
}

TEST(Electrostatics, SparsityPattern) {
  const RayleighMatrix M = assemble_matrix(kGeom1, sums(), 20);
  for (int l = 1; l <= 20; ++l)
    for (int m = 1; m <= 20; ++m)
      if (l != m && (l + m) % 4 != 0) EXPECT_EQ(M.raw(l - 1, m - 1), 0.0);
}

TEST(Electrostatics, BalancedMatrixIsSymmetricSimilarity) {
  for (const auto* g : {&kGeom1, &kGeom2}) {
    const RayleighMatrix M = assemble_matrix(*g, sums(), 20);
    const double scale = M.balanced.norm();
    EXPECT_LT((M.balanced - M.balanced.transpose()).norm(), 1e-12 * scale);
    for (int l = 0; l < 8; ++l)
      for (int m = 0; m < 8; ++m) {
        const double sim = M.balance_weights(l) * M.raw(l, m) / M.balance_weights(m);
        EXPECT_NEAR(sim, M.balanced(l, m), 1e-12 * std::max(1.0, std::abs(sim)));
      }
  }
}

TEST(Electrostatics, DiluteLimitIsDiagonal) {
  const auto t = dilute(50);
  const RayleighMatrix M = assemble_matrix(kGeom1, t, 20);
  for (int l = 1; l <= 20; ++l) EXPECT_NEAR(M.raw(l - 1, l - 1), 1.0 / (1.0 + std::pow(2.0, 2.0 * l)), 1e-15);
  const auto s = solve_spectrum(kGeom1, t, 20, kX);
  ASSERT_GE(s.modes.size(), 3u);
  EXPECT_NEAR(s.modes[0].lambda, 0.2, 1e-14);
  EXPECT_NEAR(s.modes[1].lambda, 0.058824, 1e-6);
  EXPECT_NEAR(s.modes[2].lambda, 0.015385, 1e-6);
}

TEST(Electrostatics, OverflowFlagged) {
  const CellGeometry g = CellGeometry::make(0.01, 0.49);
  EXPECT_THROW(assemble_matrix(g, lattice_sums_for(100, 20.0), 100), NumericalError);
}

TEST(Electrostatics, ClosureExamples) {
  std::vector<double> B{1.0};
  auto c = closure_coefficients(0.0, B, kGeom1);
  EXPECT_NEAR(c.A[0], 25.0, 1e-12);
  EXPECT_NEAR(c.C[0], 6.25, 1e-12);
  EXPECT_NEAR(c.D[0], 4.0, 1e-12);
  EXPECT_THROW(closure_coefficients(0.5, B, kGeom1), NumericalError);
}

TEST(Electrostatics, ModeInvariants) {
  const auto& s = spectrum1();
  EXPECT_EQ(s.modes.size() + s.rejected.size(), 20u);
  for (std::size_t i = 0; i < s.modes.size(); ++i) {
    const auto& m = s.modes[i];
    EXPECT_GT(m.lambda, -0.5);
    EXPECT_LT(m.lambda, 0.5);
    EXPECT_LT(m.residual, 1e-8);
    EXPECT_NEAR(energy_of(m.A_coef, m.B, m.C_coef, m.D_coef, kGeom1), 1.0, 1e-8);
    EXPECT_GT(m.energy_norm, 0.0);
    if (i) EXPECT_GE(std::abs(s.modes[i - 1].lambda), std::abs(m.lambda));
  }
}

TEST(Electrostatics, LeadingEigenvalue) {
  // Largest eigenvalue of the classical matrix at N = 20.
  EXPECT_NEAR(spectrum1().modes.at(0).lambda, 0.35917, 5e-5);
  EXPECT_TRUE(spectrum1().modes.at(0).converged);
}

TEST(Electrostatics, AccumulationAtZero) {
  int large = 0;
  for (const auto& m : spectrum1().modes) large += std::abs(m.lambda) >= 1e-3;
  EXPECT_LE(large, 13);
}

TEST(Electrostatics, ConvergedFlagMeansStableUnderTruncation) {
  // converged <=> an order N+5 eigenvalue lies within 1e-6 relative
  const auto s25 = solve_spectrum(kGeom1, sums(), 25, kX);
  int flagged = 0;
  for (const auto& m : spectrum1().modes) {
    double best = INFINITY;
    for (const auto& r : s25.modes) best = std::min(best, std::abs(r.lambda - m.lambda));
    EXPECT_EQ(m.converged, best < 1e-6 * std::abs(m.lambda)) << m.lambda;
    flagged += m.converged;
  }
  EXPECT_GT(flagged, 0);
  EXPECT_LT(flagged, static_cast<int>(spectrum1().modes.size()));
}

TEST(Electrostatics, PotentialContinuityNeumannAndJump) {
  const auto& s = spectrum1();
  const double a = kGeom1.a, b = kGeom1.b;
  for (std::size_t k = 0; k < 6 && k < s.modes.size(); ++k) {
    const auto& m = s.modes[k];
    double umax = 0.0;
    for (int i = 0; i < 64; ++i) umax = std::max(umax, std::abs(evaluate_potential(m, b, 2 * oracle::pi * i / 64, kGeom1)));
    for (int i = 0; i < 64; ++i) {
      const double th = 2 * oracle::pi * i / 64;
      // host side just outside r = b from the host coefficients directly
      double uh = 0.0;
      for (std::size_t l = 0; l < m.C_coef.size(); ++l)
        uh += (m.C_coef[l] * std::pow(b, l + 1.0) + m.D_coef[l] * std::pow(b, -(l + 1.0))) * std::cos((l + 1.0) * th);
      EXPECT_NEAR(evaluate_potential(m, b, th, kGeom1), uh, 1e-8 * umax);
      // Neumann at the core: one-sided difference of the coating expansion
      const double h = 1e-6 * a;
      const double fd = (-3 * evaluate_potential(m, a * (1 + 1e-14), th, kGeom1) +
                         4 * evaluate_potential(m, a + h, th, kGeom1) - evaluate_potential(m, a + 2 * h, th, kGeom1)) /
                        (2 * h);
      const double scale = std::abs(radial_derivative(m, b, th, true)) + umax / a;
      EXPECT_NEAR(fd, 0.0, 1e-6 * scale);
      EXPECT_NEAR(radial_derivative(m, a, th, true), 0.0, 1e-8 * scale);
      const double din = radial_derivative(m, b, th, true), dout = radial_derivative(m, b, th, false);
      EXPECT_NEAR(m.lambda * (din - dout) + 0.5 * (din + dout), 0.0, 1e-6 * (std::abs(din) + std::abs(dout) + 1.0));
      EXPECT_NEAR(surface_charge(m, th, kGeom1), din - dout, 1e-8 * (std::abs(din) + std::abs(dout) + 1.0));
    }
  }
}

TEST(Electrostatics, ValidityRadius) {
  bool beyond = false;
  const auto& m = spectrum1().modes.at(0);
  evaluate_potential(m, 0.55, 0.3, kGeom1, &beyond);
  EXPECT_FALSE(beyond);
  evaluate_potential(m, 0.65, 0.3, kGeom1, &beyond);
  EXPECT_TRUE(beyond);
  EXPECT_THROW(evaluate_potential(m, 0.2, 0.0, kGeom1), DomainError);
}

TEST(Electrostatics, SurfaceChargeHasNoMonopole) {
  const auto& m = spectrum1().modes.at(1);
  const double total = oracle::integrate([&](double th) { return surface_charge(m, th, kGeom1); }, 0.0, 2 * oracle::pi);
  EXPECT_NEAR(total, 0.0, 1e-10);
  ElectrostaticMode single;
  single.lambda = 0.1;
  single.B = {1.0};
  for (double th : {0.0, 0.4, 1.3, 2.9}) {
    EXPECT_NEAR(surface_charge(single, th, kGeom1), surface_charge(single, 0.0, kGeom1) * std::cos(th), 1e-10);
  }
}

TEST(Electrostatics, ModesWithoutDipoleDoNotCouple) {
  std::vector<double> B(10, 0.0);
  B[1] = 1.0;
  B[5] = -0.3;
  const auto c = closure_coefficients(0.1, B, kGeom1);
  const auto r = energy_norm_and_alphas(c.A, B, c.C, c.D, kGeom1, kX);
  EXPECT_GT(r.energy_norm, 0.0);
  EXPECT_EQ(r.alpha1, 0.0);
  EXPECT_EQ(r.alpha2, 0.0);
}

TEST(Electrostatics, BesselBound) {
  for (const auto* g : {&kGeom1, &kGeom2}) {
    const auto s = compute_spectrum(*g, sums(), 20, kX);
    double sum = 0.0;
    for (const auto& m : s.modes) sum += (m.alpha1 + m.alpha2) * (m.alpha1 + m.alpha2);
    EXPECT_LE(sum, g->theta_H + g->theta_P);
  }
}

TEST(Electrostatics, DirectionScalesCouplings) {
  const std::array<double, 2> k{0.6, 0.8};
  const auto s = solve_spectrum(kGeom1, sums(), 20, k);
  const auto& m = s.modes.at(0);
  EXPECT_NEAR(m.alpha1, 0.6 * m.alpha1_x, 1e-15);
  EXPECT_NEAR(m.alpha2, 0.6 * m.alpha2_x, 1e-15);
}

TEST(Electrostatics, CoatingCouplingMatchesQuadrature) {
  std::mt19937 rng(17);
  for (const auto* g : {&kGeom1, &kGeom2}) {
    const auto s = solve_spectrum(*g, sums(), 20, kX);
    std::vector<const ElectrostaticMode*> coupled;
    for (const auto& m : s.modes)
      if (std::abs(m.alpha2_x) > 1e-8) coupled.push_back(&m);
    ASSERT_FALSE(coupled.empty());
    for (int i = 0; i < 5; ++i) {
      const auto& m = *coupled[rng() % coupled.size()];
      const double q = oracle::coating_flux_quadrature(m.A_coef, m.B, g->a, g->b);
      EXPECT_NEAR(q, m.alpha2_x, 1e-4 * std::abs(m.alpha2_x)) << "lambda=" << m.lambda;
    }
  }
}

TEST(Electrostatics, PeriodicSystemModes) {
  const auto s = compute_spectrum(kGeom1, sums(), 20, kX, RayleighSystem::periodic);
  ASSERT_FALSE(s.modes.empty());
  EXPECT_EQ(s.system, RayleighSystem::periodic);
  EXPECT_NEAR(s.modes[0].lambda, 0.34501, 5e-5);
  // Host expansion of a periodic mode satisfies the Rayleigh identity C = T D.
  const auto& m = s.modes[0];
  for (int l = 1; l <= 5; ++l) {
    double rhs = 0.0;
    for (int q = 1; q <= 20; ++q) rhs += detail::rayleigh_coupling(sums(), l, q) * m.D_coef[q - 1];
    EXPECT_NEAR(m.C_coef[l - 1], rhs, 1e-8 * (std::abs(m.C_coef[0]) + 1.0)) << l;
  }
  for (const auto& mm : s.modes) EXPECT_NEAR(energy_of(mm.A_coef, mm.B, mm.C_coef, mm.D_coef, kGeom1), 1.0, 1e-8);
}

TEST(Electrostatics, CoatingEigenspaceWeight) {
  EXPECT_NEAR(coating_eigenspace_weight(kGeom1), oracle::pi * 0.04 * 0.12 / 0.2, 1e-15);
}
