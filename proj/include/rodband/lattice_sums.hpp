#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "rodband/errors.hpp"

namespace rodband {

namespace detail {

// C-infinity radial cutoff: 1 on [0, 1/2], smooth transition to 0 at t = 1.
inline double smooth_window(double t) {
  if (t <= 0.5) return 1.0;
  if (t >= 1.0) return 0.0;
  const double s = 2.0 * (t - 0.5);
  auto f = [](double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; };
  const double up = f(1.0 - s), down = f(s);
  return up / (up + down);
}

// Windowed sums sum_{j != 0} w(|z_j|/R) Re(z_j^{-n}) for n = 1..max_order over
// the square lattice Z^2, entry n of the result (entry 0 unused).
inline std::vector<double> windowed_lattice_sums(int max_order, double radius) {
  std::vector<double> acc(static_cast<std::size_t>(max_order) + 1, 0.0);
  const int span = static_cast<int>(std::floor(radius));
  const double r2max = radius * radius;
  for (int i = -span; i <= span; ++i) {
    for (int j = -span; j <= span; ++j) {
      if (i == 0 && j == 0) continue;
      const double r2 = double(i) * i + double(j) * j;
      if (r2 >= r2max) continue;
      const double w = smooth_window(std::sqrt(r2) / radius);
      const std::complex<double> inv(i / r2, -j / r2);
      std::complex<double> p(1.0, 0.0);
      for (int n = 1; n <= max_order; ++n) {
        p *= inv;
        acc[n] += w * p.real();
      }
    }
  }
  return acc;
}

}  // namespace detail

// S_n = sum_{j != 0} cos(n phi_j) / R_j^n, evaluated by direct summation with a
// smooth radial window of the given radius. No symmetry shortcut is taken, so
// this is the path used to check the symmetry nulls.
inline double lattice_sum_by_summation(int n, double radius = 400.0) {
  if (n < 3) throw DomainError("lattice_sum_by_summation: order must be >= 3");
  return detail::windowed_lattice_sums(n, radius)[n];
}

// Square-lattice sum S_n for n >= 3. Orders not divisible by 4 vanish by the
// four-fold symmetry and are returned as exact zeros.
inline double lattice_sum(int n, double radius = 400.0) {
  if (n == 2)
    throw DomainError("lattice_sum(2) is conditionally convergent and not defined by direct summation");
  if (n < 2) throw DomainError("lattice_sum: order must be >= 3, got " + std::to_string(n));
  if (n % 4 != 0) return 0.0;
  return lattice_sum_by_summation(n, radius);
}

struct LatticeSumTable {
  int max_order = 0;
  double radius = 0.0;
  std::vector<double> values;  // values[n], n <= max_order; entries below 3 unused
  // Value assigned to the conditionally convergent S_2 where the Rayleigh system
  // needs it. pi is the classical square-array convention (rows summed first).
  double s2 = std::numbers::pi;

  double at(int n) const {
    if (n < 3 || n > max_order)
      throw DomainError("LatticeSumTable: order " + std::to_string(n) + " not tabulated");
    return values[static_cast<std::size_t>(n)];
  }
};

inline LatticeSumTable build_lattice_sums(int max_order, double radius = 400.0) {
  if (max_order < 3) max_order = 3;
  LatticeSumTable t;
  t.max_order = max_order;
  t.radius = radius;
  t.values = detail::windowed_lattice_sums(max_order, radius);
  t.values[0] = t.values[1] = t.values[2] = 0.0;
  for (int n = 3; n <= max_order; ++n)
    if (n % 4 != 0) t.values[n] = 0.0;
  return t;
}

}  // namespace rodband
