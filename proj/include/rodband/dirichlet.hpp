#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "rodband/errors.hpp"
#include "rodband/specfun.hpp"

namespace rodband {

// Radially symmetric Dirichlet eigenpair of the core disk of radius a.
struct DirichletMode {
  int index = 0;       // radial index n >= 1
  double zero = 0.0;   // j_{0,n}
  double mu = 0.0;     // (j_{0,n}/a)^2
  double mean_sq = 0.0;  // squared mean over the disk, 4 pi a^2 / j_{0,n}^2
  double j1_at_zero = 0.0;  // J_1(j_{0,n}), used by the normalized eigenfunction
};

struct DirichletSpectrum {
  double a = 0.0;
  std::vector<DirichletMode> modes;
  double tail = 0.0;  // pi a^2 - sum of kept mean_sq
};

inline DirichletSpectrum dirichlet_spectrum(double a, int count) {
  if (!(a > 0.0 && a < 0.5)) throw GeometryError("dirichlet_spectrum: core radius must lie in (0, 0.5)");
  if (count < 1) throw ConfigError("dirichlet_spectrum: count must be >= 1");
  const BesselZeroTable zeros = bessel_zeros(0, count);
  DirichletSpectrum s;
  s.a = a;
  double sum = 0.0;
  for (int n = 0; n < count; ++n) {
    DirichletMode m;
    m.index = n + 1;
    m.zero = zeros.zeros[n];
    m.mu = (m.zero / a) * (m.zero / a);
    m.mean_sq = 4.0 * std::numbers::pi * a * a / (m.zero * m.zero);
    m.j1_at_zero = bessel_j(1, m.zero);
    sum += m.mean_sq;
    s.modes.push_back(m);
  }
  s.tail = std::numbers::pi * a * a - sum;
  return s;
}

// Normalized eigenfunction phi_n(r) = J_0(j r / a) / (sqrt(pi) a J_1(j)).
inline double dirichlet_eigenfunction(const DirichletMode& m, double a, double r) {
  return bessel_j(0, m.zero * r / a) / (std::sqrt(std::numbers::pi) * a * m.j1_at_zero);
}

// Core profile psi_0(r) = sum_n mu_n <phi_n> phi_n(r) / (mu_n - xi0) for r <= a.
// Summed as 1 + xi0 sum_n <phi_n> phi_n(r) / (mu_n - xi0), using the expansion
// sum_n <phi_n> phi_n = 1; the remaining terms decay like 1/mu_n and the
// boundary value is exactly 1.
inline double psi0_profile(const DirichletSpectrum& s, double xi0, double r) {
  if (r < 0.0 || r > s.a * (1.0 + 1e-12)) throw DomainError("psi0_profile: r must lie in [0, a]");
  for (const auto& m : s.modes)
    if (std::abs(xi0 - m.mu) <= 1e-10 * m.mu)
      throw PoleProximityError("psi0_profile: xi0 within pole exclusion of mu_n", m.mu);
  if (r >= s.a) return 1.0;
  double v = 0.0;
  for (const auto& m : s.modes) {
    const double mean = 2.0 * std::sqrt(std::numbers::pi) * s.a / m.zero;  // <phi_n>
    v += mean * dirichlet_eigenfunction(m, s.a, r) / (m.mu - xi0);
  }
  return 1.0 + xi0 * v;
}

}  // namespace rodband
