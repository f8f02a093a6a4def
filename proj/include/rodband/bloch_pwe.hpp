#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rodband/config.hpp"
#include "rodband/dispersion.hpp"
#include "rodband/errors.hpp"
#include "rodband/parallel.hpp"
#include "rodband/specfun.hpp"

namespace rodband {

// Fourier coefficient of the indicator of a disk of radius c centred in the
// unit cell, for reciprocal vector magnitude |g|.
inline double disk_transform(double c, double gnorm) {
  if (gnorm == 0.0) return std::numbers::pi * c * c;
  return c * bessel_j(1, 2.0 * std::numbers::pi * gnorm * c) / gnorm;
}

inline void check_coating_singularity(double nu) {
  if (std::abs(nu - 1.0) < 1e-6)
    throw PoleProximityError("inverse permittivity: nu within 1e-6 of the coating singularity nu = 1", 1.0);
}

// Fourier coefficient of the inverse permittivity over the unit cell at frequency nu.
inline double inv_permittivity_fourier(const std::array<double, 2>& g, double nu, const CellGeometry& geom,
                                       const MaterialSpec& mat) {
  check_coating_singularity(nu);
  const double gn = std::hypot(g[0], g[1]);
  const double core = disk_transform(geom.a, gn);
  const double coat = disk_transform(geom.b, gn) - core;
  return (gn == 0.0 ? 1.0 : 0.0) + (coating_inverse_permittivity(nu) - 1.0) * coat + (1.0 / mat.eps_R - 1.0) * core;
}

// Plane waves with integer reciprocal vectors |g|_inf <= G_max.
class BlochOperator {
 public:
  BlochOperator(const CellGeometry& geom, const MaterialSpec& mat, int G_max) : geom_(geom), mat_(mat), G_(G_max) {
    if (G_max < 1) throw ConfigError("G_max must be >= 1");
    for (int y = -G_; y <= G_; ++y)
      for (int x = -G_; x <= G_; ++x) basis_.push_back({x, y});
    const int w = 4 * G_ + 1;
    core_.resize(static_cast<std::size_t>(w) * w);
    coat_.resize(core_.size());
    for (int dy = -2 * G_; dy <= 2 * G_; ++dy)
      for (int dx = -2 * G_; dx <= 2 * G_; ++dx) {
        const double gn = std::hypot(double(dx), double(dy));
        const double c = disk_transform(geom_.a, gn);
        core_[index(dx, dy)] = c;
        coat_[index(dx, dy)] = disk_transform(geom_.b, gn) - c;
      }
  }

  int G_max() const { return G_; }
  std::size_t size() const { return basis_.size(); }
  const std::vector<std::array<int, 2>>& basis() const { return basis_; }
  const CellGeometry& geometry() const { return geom_; }
  const MaterialSpec& material() const { return mat_; }

  double coefficient(int dx, int dy, double nu) const {
    check_coating_singularity(nu);
    const std::size_t i = index(dx, dy);
    return (dx == 0 && dy == 0 ? 1.0 : 0.0) + (coating_inverse_permittivity(nu) - 1.0) * coat_[i] +
           (1.0 / mat_.eps_R - 1.0) * core_[i];
  }

  Eigen::MatrixXd assemble(double nu, const std::array<double, 2>& beta) const {
    check_coating_singularity(nu);
    const double zc = coating_inverse_permittivity(nu) - 1.0;
    const double zr = 1.0 / mat_.eps_R - 1.0;
    const std::size_t n = basis_.size();
    const double tp = 2.0 * std::numbers::pi;
    std::vector<double> kx(n), ky(n);
    for (std::size_t i = 0; i < n; ++i) {
      kx[i] = beta[0] + tp * basis_[i][0];
      ky[i] = beta[1] + tp * basis_[i][1];
    }
    Eigen::MatrixXd K(n, n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = j; i < n; ++i) {
        const std::size_t t = index(basis_[i][0] - basis_[j][0], basis_[i][1] - basis_[j][1]);
        const double ainv = (i == j ? 1.0 : 0.0) + zc * coat_[t] + zr * core_[t];
        const double v = (kx[i] * kx[j] + ky[i] * ky[j]) * ainv;
        K(i, j) = v;
        K(j, i) = v;
      }
    return K;
  }

  Eigen::VectorXd eigenvalues(double nu, const std::array<double, 2>& beta) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(assemble(nu, beta), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("Bloch eigensolve failed at nu = " + std::to_string(nu));
    return es.eigenvalues();
  }

 private:
  std::size_t index(int dx, int dy) const {
    const int w = 4 * G_ + 1;
    return static_cast<std::size_t>((dy + 2 * G_) * w + (dx + 2 * G_));
  }

  CellGeometry geom_;
  MaterialSpec mat_;
  int G_;
  std::vector<std::array<int, 2>> basis_;
  std::vector<double> core_;
  std::vector<double> coat_;
};

struct BlochSettings {
  double tol = 1e-10;
  int max_iter = 100;
  bool want_vector = true;
  // Bracketed fallback: scan step and half-width, relative to the seed.
  double scan_step = 0.005;
  double scan_span = 0.2;
  // Admissible frequency window; solutions outside it count as failures.
  double nu_lo = 0.0;
  double nu_hi = std::numeric_limits<double>::infinity();
};

struct BlochSolution {
  std::array<double, 2> beta{0.0, 0.0};
  double nu = 0.0;
  Eigen::VectorXd coefficients;
  int iterations = 0;
  double residual = 0.0;          // |nu_final - nu_prev|
  double self_consistency = 0.0;  // distance from nu to the nearest eigenvalue of K(nu)
  bool converged = false;
  std::string method;  // fixed_point, damped, bracketed
  double omega_ratio() const { return std::sqrt(nu); }
};

namespace detail {

inline Eigen::Index nearest_index(const Eigen::VectorXd& ev, double nu) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < ev.size(); ++k)
    if (std::abs(ev[k] - nu) < std::abs(ev[best] - nu)) best = k;
  return best;
}

struct FixedPointResult {
  double nu = 0.0;
  double step = 0.0;
  int iterations = 0;
  bool ok = false;
};

inline FixedPointResult fixed_point(const BlochOperator& op, const std::array<double, 2>& beta, double seed,
                                    double damp, const BlochSettings& s, std::vector<double>& history) {
  FixedPointResult r;
  double nu = seed;
  int flips = 0;
  double last_step = 0.0;
  for (int it = 1; it <= s.max_iter; ++it) {
    if (std::abs(nu - 1.0) < 1e-6 || nu < s.nu_lo || nu > s.nu_hi) return r;
    const Eigen::VectorXd ev = op.eigenvalues(nu, beta);
    const double lam = ev[nearest_index(ev, nu)];
    const double next = nu + damp * (lam - nu);
    history.push_back(next);
    const double step = next - nu;
    r.iterations = it;
    if (std::abs(step) < s.tol) {
      // round-off can leave the static root a hair below zero
      r.nu = std::max(next, 0.0);
      r.step = std::abs(step);
      r.ok = next >= std::max(s.nu_lo, 0.0) - s.tol && next <= s.nu_hi;
      return r;
    }
    // Sustained sign alternation without shrinking steps: a 2-cycle.
    if (it > 1 && step * last_step < 0.0 && std::abs(step) >= 0.9 * std::abs(last_step)) {
      if (++flips >= 4) return r;
    } else {
      flips = 0;
    }
    last_step = step;
    nu = next;
  }
  return r;
}

// Bracket search for a sign change of lambda_k(nu) - nu, moving outward from the
// seed, then bisection on the bracketing index.
inline FixedPointResult bracketed(const BlochOperator& op, const std::array<double, 2>& beta, double seed,
                                  const BlochSettings& s, std::vector<double>& history) {
  FixedPointResult r;
  // Narrow windows get at least 16 samples across.
  double h = s.scan_step * std::max(seed, 1e-6);
  if (std::isfinite(s.nu_hi)) h = std::min(h, (s.nu_hi - s.nu_lo) / 16.0);
  const int steps = static_cast<int>(std::ceil(s.scan_span * std::max(seed, 1e-6) / h));
  auto admissible = [&](double x) { return x >= s.nu_lo && x <= s.nu_hi && x >= 0.0 && std::abs(x - 1.0) >= 1e-6; };
  auto gap = [&](double x) -> Eigen::VectorXd {
    Eigen::VectorXd ev = op.eigenvalues(x, beta);
    ev.array() -= x;
    return ev;
  };
  if (!admissible(seed)) return r;
  const Eigen::VectorXd g0 = gap(seed);
  int evals = 1;
  std::array<double, 2> px{seed, seed};
  std::array<Eigen::VectorXd, 2> pg{g0, g0};
  std::array<bool, 2> alive{true, true};
  for (int j = 1; j <= steps && (alive[0] || alive[1]); ++j) {
    for (int side = 0; side < 2; ++side) {
      if (!alive[side]) continue;
      const double x = seed + (side == 0 ? 1.0 : -1.0) * j * h;
      if (!admissible(x)) {
        alive[side] = false;
        continue;
      }
      const Eigen::VectorXd gx = gap(x);
      ++evals;
      Eigen::Index best = -1;
      for (Eigen::Index k = 0; k < gx.size(); ++k)
        if ((pg[side][k] < 0.0) != (gx[k] < 0.0)) {
          const double d = std::min(std::abs(pg[side][k]), std::abs(gx[k]));
          if (best < 0 || d < std::min(std::abs(pg[side][best]), std::abs(gx[best]))) best = k;
        }
      if (best >= 0) {
        double lo = std::min(px[side], x), hi = std::max(px[side], x);
        double glo = side == 0 ? pg[side][best] : gx[best];
        while (hi - lo > s.tol) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          const double gm = gap(mid)[best];
          ++evals;
          history.push_back(mid);
          if ((gm < 0.0) == (glo < 0.0)) {
            lo = mid;
            glo = gm;
          } else {
            hi = mid;
          }
        }
        r.nu = 0.5 * (lo + hi);
        r.step = hi - lo;
        r.iterations = evals;
        r.ok = true;
        return r;
      }
      px[side] = x;
      pg[side] = gx;
    }
  }
  r.iterations = evals;
  return r;
}

}  // namespace detail

// Solves K(nu) u = nu u self-consistently starting from `seed`. Plain
// nearest-eigenvalue iteration first, a half-damped retry on failure, then a
// bracketed scan around the seed. Throws NonConvergenceError when all fail.
inline BlochSolution solve_nonlinear_eigen(const BlochOperator& op, const std::array<double, 2>& beta, double seed,
                                           const BlochSettings& s = {}) {
  if (!(seed >= 0.0)) throw DomainError("solve_nonlinear_eigen: seed must be nonnegative");
  std::vector<double> history;
  BlochSolution sol;
  sol.beta = beta;
  detail::FixedPointResult fp = detail::fixed_point(op, beta, seed, 1.0, s, history);
  sol.method = "fixed_point";
  if (!fp.ok) {
    fp = detail::fixed_point(op, beta, seed, 0.5, s, history);
    sol.method = "damped";
  }
  if (!fp.ok) {
    fp = detail::bracketed(op, beta, seed, s, history);
    sol.method = "bracketed";
  }
  if (!fp.ok)
    throw NonConvergenceError("Bloch solve did not converge from seed nu = " + std::to_string(seed), history);
  sol.nu = fp.nu;
  sol.iterations = static_cast<int>(history.size());
  sol.residual = fp.step;
  sol.converged = true;
  if (s.want_vector) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.assemble(sol.nu, beta));
    if (es.info() != Eigen::Success) throw NumericalError("Bloch eigensolve failed");
    const Eigen::Index k = detail::nearest_index(es.eigenvalues(), sol.nu);
    sol.self_consistency = std::abs(es.eigenvalues()[k] - sol.nu);
    sol.coefficients = es.eigenvectors().col(k);
  } else {
    const Eigen::VectorXd ev = op.eigenvalues(sol.nu, beta);
    sol.self_consistency = std::abs(ev[detail::nearest_index(ev, sol.nu)] - sol.nu);
  }
  return sol;
}

struct PwePoint {
  DispersionPoint point;  // source = "pwe"; nu is NaN when the seed failed
  double seed_nu = 0.0;
  int iterations = 0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::string method;
};

// One plane-wave solve per leading-order seed. Each seed is confined to its
// propagating interval and to scan_span around the seed; failures are kept as gaps.
inline std::vector<PwePoint> dispersion_points(const BlochOperator& op, const std::vector<DispersionPoint>& seeds,
                                               const std::array<double, 2>& khat, const BandReport& bands,
                                               BlochSettings s = {}, int threads = 1) {
  s.want_vector = false;
  std::vector<PwePoint> out(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t i) {
    const DispersionPoint& seed = seeds[i];
    PwePoint p;
    p.point = seed;
    p.point.source = "pwe";
    p.seed_nu = seed.nu;
    p.point.nu = std::numeric_limits<double>::quiet_NaN();
    BlochSettings local = s;
    if (seed.interval >= 0 && static_cast<std::size_t>(seed.interval) < bands.intervals.size()) {
      local.nu_lo = bands.intervals[seed.interval].nu_lo;
      local.nu_hi = bands.intervals[seed.interval].nu_hi;
    }
    const std::array<double, 2> beta{seed.dk * khat[0], seed.dk * khat[1]};
    try {
      const BlochSolution sol = solve_nonlinear_eigen(op, beta, seed.nu, local);
      p.point.nu = sol.nu;
      p.iterations = sol.iterations;
      p.residual = sol.residual;
      p.converged = true;
      p.method = sol.method;
    } catch (const NonConvergenceError& e) {
      p.iterations = static_cast<int>(e.history().size());
      p.method = "failed";
    }
    p.point.residual = p.residual;
    out[i] = std::move(p);
  });
  return out;
}

}  // namespace rodband
