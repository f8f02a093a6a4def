#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <complex>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rodband/config.hpp"
#include "rodband/errors.hpp"
#include "rodband/lattice_sums.hpp"

namespace rodband {


namespace detail {

// (l+m-1)! / (l! m!) as a double.
inline double multipole_factor(int l, int m) {
  if (l + m <= 60) {
    double v = 1.0;
    // (l+m-1)!/(l!(m-1)!) / m
    for (int k = 1; k <= l; ++k) v *= double(m - 1 + k) / double(k);
    return v / double(m);
  }
  return std::exp(std::lgamma(double(l + m)) - std::lgamma(double(l + 1)) - std::lgamma(double(m + 1)));
}

// S_2 enters only A_11; the table carries the summation convention for it.
inline double lattice_term(const LatticeSumTable& sums, int n) { return n == 2 ? sums.s2 : sums.at(n); }

// T_lm = (-1)^m C(m+l-1, l) S_{l+m}
inline double rayleigh_coupling(const LatticeSumTable& sums, int l, int m) {
  const double s = lattice_term(sums, l + m);
  if (s == 0.0) return 0.0;
  const double sign = (m % 2 == 0) ? 1.0 : -1.0;
  return sign * double(m) * multipole_factor(l, m) * s;
}

}  // namespace detail

struct RayleighMatrix {
  int N = 0;
  Eigen::MatrixXd raw;       // A_lm, rows/cols l,m = 1..N
  Eigen::MatrixXd balanced;  // W A W^{-1}, symmetric
  Eigen::VectorXd balance_weights;  // w_l = sqrt(l p_l q_l)
};

inline RayleighMatrix assemble_matrix(const CellGeometry& g, const LatticeSumTable& sums, int N) {
  if (N < 1) throw ConfigError("multipole order must be >= 1");
  if (2.0 * N * std::log(g.b / g.a) > std::log(1e300))
    throw NumericalError("Rayleigh matrix entries overflow: (b/a)^{2N} exceeds 1e300; reduce N");
  if (sums.max_order < 2 * N) throw NumericalError("lattice sum table does not reach order 2N");
  const double a = g.a, b = g.b;
  RayleighMatrix M;
  M.N = N;
  M.raw.resize(N, N);
  M.balanced.resize(N, N);
  M.balance_weights.resize(N);
  std::vector<double> p(N + 1), q(N + 1), ratio(N + 1);
  for (int l = 1; l <= N; ++l) {
    p[l] = std::pow(a, -2.0 * l) + std::pow(b, -2.0 * l);
    q[l] = std::pow(b / a, 2.0 * l) - 1.0;
    // q_l / p_l evaluated without the large intermediate powers
    ratio[l] = (std::pow(b, 2.0 * l) - std::pow(a, 2.0 * l)) / (1.0 + std::pow(a / b, 2.0 * l));
    M.balance_weights(l - 1) = std::sqrt(l * p[l] * q[l]);
  }
  for (int l = 1; l <= N; ++l) {
    for (int m = 1; m <= N; ++m) {
      const double diag = (l == m) ? std::pow(b, -2.0 * l) / p[l] : 0.0;
      const double t = detail::rayleigh_coupling(sums, l, m);
      M.raw(l - 1, m - 1) = diag - q[m] * t / (2.0 * p[l]);
      // symmetric kernel c_lm = -(-1)^m S_{l+m} (l+m-1)!/(l!m!) / 2
      const double c = -t / (2.0 * m);
      M.balanced(l - 1, m - 1) = diag + c * std::sqrt(double(l) * m * ratio[l] * ratio[m]);
    }
  }
  return M;
}

struct ElectrostaticMode {
  double lambda = 0.0;
  // Multipole and closure coefficients of the energy-normalized eigenpotential.
  std::vector<double> B, A_coef, C_coef, D_coef;
  double energy_norm = 0.0;  // energy of the unnormalized eigenvector
  double alpha1 = 0.0, alpha2 = 0.0;      // couplings for the configured direction
  double alpha1_x = 0.0, alpha2_x = 0.0;  // couplings for the x direction
  double residual = 0.0;                  // relative eigen-residual
  bool converged = false;
};

struct RejectedMode {
  double lambda = 0.0;
  std::string reason;
};

struct ElectrostaticSpectrum {
  int N = 0;
  RayleighSystem system = RayleighSystem::printed;
  std::vector<ElectrostaticMode> modes;  // descending |lambda|
  std::vector<RejectedMode> rejected;
  // Coupling weight of the lambda = -1/2 eigenspace (potentials confined to the
  // coating with vanishing trace on both circles). The multipole system does not
  // resolve it, so its closed form pi a^2 (b^2 - a^2)/(a^2 + b^2) is carried here.
  double coating_weight = 0.0;
};

inline double coating_eigenspace_weight(const CellGeometry& g) {
  const double a2 = g.a * g.a, b2 = g.b * g.b;
  return std::numbers::pi * a2 * (b2 - a2) / (a2 + b2);
}

struct Closure {
  std::vector<double> A, C, D;
};

inline Closure closure_coefficients(double lambda, const std::vector<double>& B, const CellGeometry& g) {
  if (std::abs(1.0 - 2.0 * lambda) < 1e-12) throw NumericalError("singular closure: lambda = 1/2");
  const double a = g.a, b = g.b;
  Closure c;
  const std::size_t n = B.size();
  c.A.resize(n);
  c.C.resize(n);
  c.D.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double l = double(i + 1);
    const double am = std::pow(a, -2.0 * l);
    c.A[i] = am * B[i];
    c.C[i] = (std::pow(a / b, 2.0 * l) - 2.0 * lambda) / (1.0 - 2.0 * lambda) * am * B[i];
    c.D[i] = (std::pow(b / a, 2.0 * l) - 2.0 * lambda) / (1.0 - 2.0 * lambda) * B[i];
  }
  return c;
}

// Dirichlet energy over the cell minus the core from the boundary-integral
// closed forms; periodic cell-boundary terms are dropped.
inline double energy_of(const std::vector<double>& A, const std::vector<double>& B, const std::vector<double>& C,
                        const std::vector<double>& D, const CellGeometry& g) {
  const double a = g.a, b = g.b, pi = std::numbers::pi;
  double e = 0.0;
  for (std::size_t i = 0; i < B.size(); ++i) {
    const double l = double(i + 1);
    const double bp = std::pow(b, 2.0 * l), bm = std::pow(b, -2.0 * l);
    const double ap = std::pow(a, 2.0 * l), am = std::pow(a, -2.0 * l);
    e += pi * l * ((A[i] * A[i] * bp - B[i] * B[i] * bm) - (A[i] * A[i] * ap - B[i] * B[i] * am));
    e -= pi * l * (C[i] * C[i] * bp - D[i] * D[i] * bm);
  }
  return e;
}

struct EnergyAlphas {
  double energy_norm = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
};

// Energy of the mode as given and the couplings of the normalized mode with the
// linear field khat . y: alpha2 over the coating, alpha1 over the host.
inline EnergyAlphas energy_norm_and_alphas(const std::vector<double>& A, const std::vector<double>& B,
                                           const std::vector<double>& C, const std::vector<double>& D,
                                           const CellGeometry& g, const std::array<double, 2>& khat) {
  EnergyAlphas r;
  r.energy_norm = energy_of(A, B, C, D, g);
  if (!(r.energy_norm > 0.0)) return r;
  const double s = 1.0 / std::sqrt(r.energy_norm), pi = std::numbers::pi;
  r.alpha2 = khat[0] * pi * A[0] * (g.b * g.b - g.a * g.a) * s;
  r.alpha1 = -khat[0] * pi * (C[0] * g.b * g.b + D[0]) * s;
  return r;
}

namespace detail {

struct RawEigenpair {
  double lambda;
  std::vector<double> B;
  double residual;
};

inline std::vector<RawEigenpair> eigenpairs_printed(const CellGeometry& g, const LatticeSumTable& sums, int N) {
  const RayleighMatrix M = assemble_matrix(g, sums, N);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.balanced);
  if (es.info() != Eigen::Success) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M.balanced);
    const auto& sv = svd.singularValues();
    std::ostringstream os;
    os << "Rayleigh eigensolver did not converge (balanced condition number "
       << sv(0) / sv(sv.size() - 1) << ")";
    throw NumericalError(os.str());
  }
  std::vector<RawEigenpair> out;
  for (int k = 0; k < N; ++k) {
    const double lam = es.eigenvalues()(k);
    const Eigen::VectorXd v = es.eigenvectors().col(k);
    const double res = (M.balanced * v - lam * v).norm() / v.norm();
    std::vector<double> B(N);
    for (int l = 0; l < N; ++l) B[l] = v(l) / M.balance_weights(l);
    out.push_back({lam, std::move(B), res});
  }
  return out;
}

inline std::vector<RawEigenpair> eigenpairs_periodic(const CellGeometry& g, const LatticeSumTable& sums, int N) {
  if (2.0 * N * std::log(g.b / g.a) > std::log(1e300))
    throw NumericalError("Rayleigh pencil entries overflow: (b/a)^{2N} exceeds 1e300; reduce N");
  if (sums.max_order < 2 * N) throw NumericalError("lattice sum table does not reach order 2N");
  const double a = g.a, b = g.b;
  // B_m = a^{2m} b^{-m} y_m and row l scaled by b^l keep the pencil entries O(1).
  Eigen::MatrixXd K(N, N), Mm(N, N);
  Eigen::VectorXd col(N);
  for (int m = 1; m <= N; ++m) col(m - 1) = std::pow(a, 2.0 * m) * std::pow(b, -double(m));
  for (int l = 1; l <= N; ++l) {
    for (int m = 1; m <= N; ++m) {
      const double t = detail::rayleigh_coupling(sums, l, m);
      const double row = std::pow(b, double(l));
      const double dK = (l == m) ? std::pow(b, -2.0 * l) : 0.0;
      const double dM = (l == m) ? std::pow(a, -2.0 * l) : 0.0;
      K(l - 1, m - 1) = row * (dK - t * std::pow(b / a, 2.0 * m)) * col(m - 1);
      Mm(l - 1, m - 1) = row * 2.0 * (dM - t) * col(m - 1);
    }
  }
  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges(K, Mm, true);
  if (ges.info() != Eigen::Success) throw NumericalError("Rayleigh pencil eigensolver did not converge");
  std::vector<RawEigenpair> out;
  const auto alphas = ges.alphas();
  const auto betas = ges.betas();
  for (int k = 0; k < N; ++k) {
    if (std::abs(betas(k)) < 1e-300) continue;
    const std::complex<double> lam = alphas(k) / betas(k);
    if (!std::isfinite(lam.real()) || std::abs(lam.imag()) > 1e-10 * (1.0 + std::abs(lam.real()))) continue;
    Eigen::VectorXd v = ges.eigenvectors().col(k).real();
    if (v.norm() == 0.0) continue;
    v /= v.norm();
    const double res = (K * v - lam.real() * Mm * v).norm() / (K.norm() + std::abs(lam.real()) * Mm.norm());
    std::vector<double> B(N);
    for (int l = 0; l < N; ++l) B[l] = col(l) * v(l);
    out.push_back({lam.real(), std::move(B), res});
  }
  return out;
}

}  // namespace detail

// Modes of one truncation order, sorted by descending |lambda|. Modes whose
// energy is not positive are reported as rejected.
inline ElectrostaticSpectrum solve_spectrum(const CellGeometry& g, const LatticeSumTable& sums, int N,
                                            const std::array<double, 2>& khat,
                                            RayleighSystem system = RayleighSystem::printed) {
  ElectrostaticSpectrum spec;
  spec.N = N;
  spec.system = system;
  spec.coating_weight = coating_eigenspace_weight(g);
  auto raw = system == RayleighSystem::printed ? detail::eigenpairs_printed(g, sums, N)
                                               : detail::eigenpairs_periodic(g, sums, N);
  for (auto& e : raw) {
    if (!(std::abs(e.lambda) < 0.5)) {
      spec.rejected.push_back({e.lambda, "eigenvalue outside (-1/2, 1/2)"});
      continue;
    }
    // Deterministic sign: the largest multipole component (in balanced scale) is positive.
    std::size_t imax = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < e.B.size(); ++i) {
      const double scaled = std::abs(e.B[i]) * std::pow(g.a, -double(i + 1));
      if (scaled > best * (1.0 + 1e-12)) {
        best = scaled;
        imax = i;
      }
    }
    if (e.B[imax] < 0.0)
      for (double& x : e.B) x = -x;
    Closure c = closure_coefficients(e.lambda, e.B, g);
    const double energy = energy_of(c.A, e.B, c.C, c.D, g);
    if (!(energy > 0.0)) {
      std::ostringstream os;
      os << "nonpositive energy norm " << energy << " (truncation artifact)";
      spec.rejected.push_back({e.lambda, os.str()});
      continue;
    }
    ElectrostaticMode mode;
    mode.lambda = e.lambda;
    mode.energy_norm = energy;
    mode.residual = e.residual;
    const double s = 1.0 / std::sqrt(energy);
    mode.B = e.B;
    mode.A_coef = c.A;
    mode.C_coef = c.C;
    mode.D_coef = c.D;
    for (auto* v : {&mode.B, &mode.A_coef, &mode.C_coef, &mode.D_coef})
      for (double& x : *v) x *= s;
    const double pi = std::numbers::pi;
    mode.alpha2_x = pi * mode.A_coef[0] * (g.b * g.b - g.a * g.a);
    mode.alpha1_x = -pi * (mode.C_coef[0] * g.b * g.b + mode.D_coef[0]);
    mode.alpha1 = khat[0] * mode.alpha1_x;
    mode.alpha2 = khat[0] * mode.alpha2_x;
    spec.modes.push_back(std::move(mode));
  }
  std::stable_sort(spec.modes.begin(), spec.modes.end(), [](const ElectrostaticMode& x, const ElectrostaticMode& y) {
    if (std::abs(x.lambda) != std::abs(y.lambda)) return std::abs(x.lambda) > std::abs(y.lambda);
    return x.lambda > y.lambda;
  });
  return spec;
}

// Spectrum at order N with each eigenvalue flagged converged when an eigenvalue
// of the order N+5 system lies within 1e-6 relative of it.
inline ElectrostaticSpectrum compute_spectrum(const CellGeometry& g, const LatticeSumTable& sums, int N,
                                              const std::array<double, 2>& khat,
                                              RayleighSystem system = RayleighSystem::printed) {
  ElectrostaticSpectrum spec = solve_spectrum(g, sums, N, khat, system);
  const ElectrostaticSpectrum ref = solve_spectrum(g, sums, N + 5, khat, system);
  for (auto& m : spec.modes) {
    double best = INFINITY;
    for (const auto& r : ref.modes) best = std::min(best, std::abs(r.lambda - m.lambda));
    m.converged = best < 1e-6 * std::abs(m.lambda);
  }
  return spec;
}

// Lattice sums sufficient for compute_spectrum at order N.
inline LatticeSumTable lattice_sums_for(int N, double radius) { return build_lattice_sums(2 * (N + 5), radius); }

// Potential of a mode at polar point (r, theta) outside the core: coating
// expansion for r <= b, local host expansion for r > b. The host expansion is
// meaningful up to r = 1 - b; beyond it *beyond_validity is set.
inline double evaluate_potential(const ElectrostaticMode& mode, double r, double theta, const CellGeometry& g,
                                 bool* beyond_validity = nullptr) {
  if (!(r > g.a)) throw DomainError("evaluate_potential: r must exceed the core radius");
  if (beyond_validity) *beyond_validity = r > 1.0 - g.b;
  const bool coat = r <= g.b;
  const auto& P = coat ? mode.A_coef : mode.C_coef;
  const auto& Q = coat ? mode.B : mode.D_coef;
  double u = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double l = double(i + 1);
    u += (P[i] * std::pow(r, l) + Q[i] * std::pow(r, -l)) * std::cos(l * theta);
  }
  return u;
}

// Radial derivative from the coating (inside = true) or host side.
inline double radial_derivative(const ElectrostaticMode& mode, double r, double theta, bool inside) {
  const auto& P = inside ? mode.A_coef : mode.C_coef;
  const auto& Q = inside ? mode.B : mode.D_coef;
  double d = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double l = double(i + 1);
    d += l * (P[i] * std::pow(r, l - 1.0) - Q[i] * std::pow(r, -l - 1.0)) * std::cos(l * theta);
  }
  return d;
}

// Surface charge density on r = b: jump of the radial derivative (coating minus host).
inline double surface_charge(const ElectrostaticMode& mode, double theta, const CellGeometry& g) {
  if (std::abs(1.0 - 2.0 * mode.lambda) < 1e-12) throw NumericalError("singular closure: lambda = 1/2");
  double q = 0.0;
  for (std::size_t i = 0; i < mode.B.size(); ++i) {
    const double l = double(i + 1);
    const double f = (std::pow(g.b, l - 1.0) * std::pow(g.a, -2.0 * l) - std::pow(g.b, -(l + 1.0))) /
                     (1.0 - 2.0 * mode.lambda);
    q += 2.0 * f * l * mode.B[i] * std::cos(l * theta);
  }
  return q;
}

}  // namespace rodband
