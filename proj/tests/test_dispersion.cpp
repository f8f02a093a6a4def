#include <gtest/gtest.h>

#include <map>

#include "rodband/pipeline.hpp"

using namespace rodband;

namespace {

const Pipeline& example(double a) {
  static const Pipeline p1 = build_pipeline(reference_config(0.2));
  static const Pipeline p2 = build_pipeline(reference_config(0.15));
  return a == 0.2 ? p1 : p2;
}

}  // namespace

TEST(Dispersion, IntervalsCoverRangeAndAreSorted) {
  for (double a : {0.2, 0.15}) {
    const auto& rep = example(a).bands;
    ASSERT_FALSE(rep.intervals.empty());
    EXPECT_EQ(rep.intervals.front().nu_lo, 0.0);
    EXPECT_EQ(rep.intervals.back().nu_hi, 1.2);
    for (std::size_t i = 0; i < rep.intervals.size(); ++i) {
      EXPECT_LT(rep.intervals[i].nu_lo, rep.intervals[i].nu_hi);
      if (i) EXPECT_EQ(rep.intervals[i].nu_lo, rep.intervals[i - 1].nu_hi);
    }
    for (std::size_t i = 1; i < rep.critical.size(); ++i) EXPECT_LE(rep.critical[i - 1].nu, rep.critical[i].nu);
  }
}

TEST(Dispersion, EdgesIncludeBothPoles) {
  const auto& p = example(0.2);
  const double mu_pole = p.model->mu_poles(1.2).at(0);
  const double eps_pole = p.model->resonances().at(0).lambda + 0.5;
  bool mu_found = false, eps_found = false;
  for (const auto& c : p.bands.critical) {
    if (c.kind == CriticalKind::mu_pole && std::abs(c.nu - mu_pole) < 1e-6) mu_found = true;
    if (c.kind == CriticalKind::eps_pole && std::abs(c.nu - eps_pole) < 1e-6) eps_found = true;
  }
  EXPECT_TRUE(mu_found);
  EXPECT_TRUE(eps_found);
  EXPECT_NEAR(mu_pole, 0.50730, 1e-5);
}

TEST(Dispersion, ZerosAreBisectedTightly) {
  const auto& p = example(0.2);
  for (const auto& c : p.bands.critical) {
    if (c.kind == CriticalKind::mu_zero) {
      const double w = 1e-10;
      EXPECT_LT(p.model->mu_eff(c.nu - w) * p.model->mu_eff(c.nu + w), 0.0) << c.nu;
    }
    if (c.kind == CriticalKind::eps_zero) {
      const double w = 1e-10;
      EXPECT_LT(p.model->inv_eps_kk(c.nu - w) * p.model->inv_eps_kk(c.nu + w), 0.0) << c.nu;
    }
  }
}

TEST(Dispersion, NoResonancesGiveSinglePassbandBelowCoatingZero) {
  const auto g = CellGeometry::make(0.2, 0.4);
  DirichletSpectrum none;
  none.a = 0.2;
  none.tail = g.theta_R;  // mu_eff == 1
  EffectiveModel m(g, MaterialSpec::make(285.0), none, {}, 0.0, PermittivityForm::printed);
  const auto rep = band_edges(m, 0.999);
  // theta_H + nu/(nu-1) theta_P is positive up to nu = theta_H/(theta_H+theta_P), negative after.
  const double edge = g.theta_H / (g.theta_H + g.theta_P);
  ASSERT_EQ(rep.intervals.size(), 2u);
  EXPECT_EQ(rep.intervals[0].band_class, BandClass::double_positive);
  EXPECT_NEAR(rep.intervals[0].nu_hi, edge, 1e-10);
  EXPECT_EQ(rep.intervals[1].band_class, BandClass::single_negative_stop);
}

TEST(Dispersion, ZeroWavenumberGivesZeroFrequency) {
  const auto& p = example(0.2);
  const auto pts = solve_leading_order(*p.model, p.bands, 0.0);
  ASSERT_FALSE(pts.empty());
  EXPECT_EQ(pts[0].nu, 0.0);
  EXPECT_EQ(pts[0].branch_id, 0);
}

TEST(Dispersion, RootsSatisfyRelationAndClassification) {
  for (double a : {0.2, 0.15}) {
    const auto& p = example(a);
    for (double dk : {0.1, 0.5, 1.0}) {
      for (const auto& q : solve_leading_order(*p.model, p.bands, dk)) {
        EXPECT_LT(q.residual, 1e-10);
        EXPECT_NEAR(dk * dk, p.model->nu_n_sq(q.nu), 1e-10);
        EXPECT_EQ(q.band_class, p.model->classify(q.nu).band_class);
        EXPECT_TRUE(is_propagating(q.band_class));
        EXPECT_EQ(q.source, "leading_order");
        const auto& iv = p.bands.intervals.at(q.interval);
        EXPECT_GT(q.nu, iv.nu_lo);
        EXPECT_LT(q.nu, iv.nu_hi);
      }
    }
  }
}

TEST(Dispersion, AcousticBranchValues) {
  const auto& p = example(0.2);
  const auto pts = solve_leading_order(*p.model, p.bands, 0.5);
  ASSERT_FALSE(pts.empty());
  EXPECT_EQ(pts[0].branch_id, 0);
  EXPECT_NEAR(pts[0].nu, 0.0745, 1e-3);
}

TEST(Dispersion, OneRootPerPropagatingIntervalBelowPlasmaFrequency) {
  for (double a : {0.2, 0.15}) {
    const auto& p = example(a);
    std::size_t intervals = 0;
    for (std::size_t i : p.bands.propagating()) intervals += p.bands.intervals[i].nu_hi <= 1.0;
    for (double dk : default_dk_grid()) {
      std::size_t roots = 0;
      for (const auto& q : solve_leading_order(*p.model, p.bands, dk)) roots += q.nu < 1.0;
      EXPECT_EQ(roots, intervals) << "a=" << a << " dk=" << dk;
    }
  }
}

TEST(Dispersion, BranchesAreContinuous) {
  const auto& p = example(0.2);
  const auto pts = trace_branches(*p.model, p.bands, default_dk_grid(), 2);
  std::map<int, std::vector<DispersionPoint>> by_branch;
  for (const auto& q : pts) by_branch[q.branch_id].push_back(q);
  ASSERT_TRUE(by_branch.count(0));
  EXPECT_EQ(by_branch[0].size(), 10u);
  for (auto& [id, v] : by_branch) {
    for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GT(v[i].dk, v[i - 1].dk);
    for (std::size_t i = 2; i < v.size(); ++i) {
      const double slope = (v[i - 1].nu - v[i - 2].nu) / (v[i - 1].dk - v[i - 2].dk);
      EXPECT_LE(std::abs(v[i].nu - v[i - 1].nu), 10 * std::abs(slope * (v[i].dk - v[i - 1].dk)) + 1e-9);
    }
  }
  // Thread count does not change the result.
  const auto serial = trace_branches(*p.model, p.bands, default_dk_grid(), 1);
  ASSERT_EQ(serial.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(serial[i].nu, pts[i].nu);
    EXPECT_EQ(serial[i].branch_id, pts[i].branch_id);
  }
}

TEST(Dispersion, BackwardWaveOnDoubleNegativeBranch) {
  const auto& p = example(0.2);
  const auto pts = trace_branches(*p.model, p.bands, default_dk_grid());
  std::map<int, std::vector<DispersionPoint>> by_branch;
  for (const auto& q : pts) by_branch[q.branch_id].push_back(q);
  int dng = 0;
  for (auto& [id, v] : by_branch) {
    if (v.size() < 2 || v[0].band_class != BandClass::double_negative) continue;
    ++dng;
    for (std::size_t i = 1; i < v.size(); ++i) {
      const double group = (v[i].omega_ratio() - v[i - 1].omega_ratio()) / (v[i].dk - v[i - 1].dk);
      const auto flow = energy_flow(p.model->classify(v[i].nu));
      // group velocity and energy flow both point against the phase velocity
      EXPECT_LT(group, 0.0);
      EXPECT_LT(flow.poynting_along_khat, 0.0);
    }
  }
  EXPECT_GE(dng, 1);
}

TEST(Dispersion, NonMonotoneGridRejected) {
  const auto& p = example(0.2);
  EXPECT_THROW(trace_branches(*p.model, p.bands, {0.2, 0.1}), ConfigError);
  EXPECT_THROW(solve_leading_order(*p.model, p.bands, -0.1), DomainError);
}

TEST(Dispersion, ResonanceSensitivityReported) {
  const auto& p = example(0.2);
  const auto s = resonance_sensitivity(*p.model, {0.1, 0.5, 1.0}, 1.2);
  EXPECT_EQ(s.modes_total, p.model->resonances().size());
  EXPECT_EQ(s.modes_kept, (s.modes_total + 1) / 2);
  EXPECT_GE(s.max_shift, 0.0);
}
