#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "rodband/errors.hpp"

namespace rodband {

// Bessel function of the first kind J_n(x), integer order n >= 0, 0 <= x <= 1e4.
// Power series for x <= 1, otherwise Miller's downward recurrence normalized
// by J_0 + 2 sum_k J_{2k} = 1.
template <std::floating_point T>
T bessel_j(int n, T x) {
  if (n < 0) throw DomainError("bessel_j: negative order " + std::to_string(n));
  if (!(x >= T(0)) || x > T(1e4)) throw DomainError("bessel_j: argument outside [0, 1e4]");
  if (x == T(0)) return n == 0 ? T(1) : T(0);

  if (x <= T(1)) {
    const T half = x / T(2);
    T lead = T(1);
    for (int k = 1; k <= n; ++k) lead *= half / T(k);
    const T q = -half * half;
    T term = lead, sum = lead;
    for (int k = 1; k < 60; ++k) {
      term *= q / (T(k) * T(n + k));
      sum += term;
      if (std::abs(term) <= std::numeric_limits<T>::epsilon() * std::abs(sum)) break;
    }
    return sum;
  }

  const double top = std::max<double>(n, static_cast<double>(x));
  int m = static_cast<int>(top + 30.0 + 20.0 * std::cbrt(top));
  m += m & 1;
  T next = T(0), cur = T(1), norm = T(0), jn = T(0);
  const T big = std::sqrt(std::numeric_limits<T>::max());
  for (int k = m; k >= 1; --k) {
    const T prev = T(2 * k) / x * cur - next;
    next = cur;
    cur = prev;  // cur holds J_{k-1}
    if (k - 1 == n) jn = cur;
    if (((k - 1) & 1) == 0 && k - 1 > 0) norm += T(2) * cur;
    if (std::abs(cur) > big) {
      cur /= big;
      next /= big;
      norm /= big;
      jn /= big;
    }
  }
  norm += cur;  // J_0 term
  return jn / norm;
}

struct BesselZeroTable {
  int order = 0;
  std::vector<double> zeros;  // ascending positive roots of J_order
};

namespace detail {

// McMahon's large-root expansion of the k-th zero of J_n.
inline double mcmahon_guess(int n, int k) {
  const double beta = (k + 0.5 * n - 0.25) * std::numbers::pi;
  const double mu = 4.0 * n * n;
  const double e = 8.0 * beta;
  return beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e * e * e);
}

}  // namespace detail

// First `count` positive zeros of J_n, each bracketed starting from McMahon's
// estimate and refined by bisection to 1e-12 relative width or better.
inline BesselZeroTable bessel_zeros(int n, int count) {
  if (n < 0) throw DomainError("bessel_zeros: negative order");
  if (count < 1) throw DomainError("bessel_zeros: count must be >= 1");
  BesselZeroTable table{n, {}};
  table.zeros.reserve(count);
  double lower = n == 0 ? 1e-3 : static_cast<double>(n) * 0.999;  // j_{n,1} > n
  const double step = 0.1;
  for (int k = 1; k <= count; ++k) {
    // J_n is positive before its first zero and alternates after each zero.
    const double want = (k % 2 == 1) ? 1.0 : -1.0;
    double lo = std::max(lower, detail::mcmahon_guess(n, k) - 0.45 * std::numbers::pi);
    double flo = bessel_j(n, lo);
    if (flo * want <= 0.0) {
      lo = lower;
      flo = bessel_j(n, lo);
    }
    double hi = lo + step;
    double fhi = bessel_j(n, hi);
    while (fhi * want > 0.0) {
      lo = hi;
      flo = fhi;
      hi += step;
      fhi = bessel_j(n, hi);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double fm = bessel_j(n, mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    const double root = 0.5 * (lo + hi);
    table.zeros.push_back(root);
    lower = root + 1e-6;
  }
  return table;
}

}  // namespace rodband
