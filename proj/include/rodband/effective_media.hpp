#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rodband/config.hpp"
#include "rodband/dirichlet.hpp"
#include "rodband/electrostatics.hpp"
#include "rodband/errors.hpp"

namespace rodband {

enum class BandClass { double_negative, double_positive, single_negative_stop, pole_adjacent };

inline const char* to_string(BandClass c) {
  switch (c) {
    case BandClass::double_negative: return "double_negative";
    case BandClass::double_positive: return "double_positive";
    case BandClass::single_negative_stop: return "single_negative_stop";
    case BandClass::pole_adjacent: return "pole_adjacent";
  }
  return "unknown";
}

inline bool is_propagating(BandClass c) { return c == BandClass::double_negative || c == BandClass::double_positive; }

struct EffectiveResponse {
  double nu = 0.0;
  double mu_eff = 0.0;
  double inv_eps_kk = 0.0;
  double n_eff_sq = 0.0;
  double eps_P_inv = 0.0;  // nu/(nu-1)
  BandClass band_class = BandClass::pole_adjacent;
};

struct EnergyFlowReport {
  double nu = 0.0;
  double poynting_along_khat = 0.0;
  int phase_speed_sign = 1;  // positive-root convention for n_eff
  bool antiparallel = false;
};

// Resonance data entering the inverse permittivity: one entry per converged mode.
struct PermittivityResonance {
  double lambda = 0.0;
  double alpha1 = 0.0;  // host coupling, x direction
  double alpha2 = 0.0;  // coating coupling, x direction
};

// Leading-order constitutive functions of the coated-rod crystal.
class EffectiveModel {
 public:
  static constexpr double pole_exclusion = 1e-8;

  EffectiveModel(const CellGeometry& g, const MaterialSpec& mat, DirichletSpectrum dir,
                 std::vector<PermittivityResonance> resonances, double coating_weight,
                 PermittivityForm form = PermittivityForm::corrected)
      : g_(g), mat_(mat), dir_(std::move(dir)), res_(std::move(resonances)), coating_weight_(coating_weight),
        form_(form) {}

  // Only converged modes contribute. The square lattice makes the tensor
  // isotropic, so the x-direction couplings serve every unit direction.
  static EffectiveModel from_spectra(const CellGeometry& g, const MaterialSpec& mat, DirichletSpectrum dir,
                                     const ElectrostaticSpectrum& es,
                                     PermittivityForm form = PermittivityForm::corrected) {
    std::vector<PermittivityResonance> r;
    for (const auto& m : es.modes)
      if (m.converged) r.push_back({m.lambda, m.alpha1_x, m.alpha2_x});
    return EffectiveModel(g, mat, std::move(dir), std::move(r), es.coating_weight, form);
  }

  const CellGeometry& geometry() const { return g_; }
  const MaterialSpec& material() const { return mat_; }
  const DirichletSpectrum& dirichlet() const { return dir_; }
  const std::vector<PermittivityResonance>& resonances() const { return res_; }
  PermittivityForm form() const { return form_; }
  double coating_weight() const { return coating_weight_; }

  // Same medium with a different resonance set.
  EffectiveModel with_resonances(std::vector<PermittivityResonance> r) const {
    return EffectiveModel(g_, mat_, dir_, std::move(r), coating_weight_, form_);
  }

  // Poles mu_n rho^2 of the effective permeability below nu_max.
  std::vector<double> mu_poles(double nu_max) const {
    std::vector<double> p;
    const double rho2 = mat_.rho * mat_.rho;
    for (const auto& m : dir_.modes)
      if (m.mu * rho2 < nu_max) p.push_back(m.mu * rho2);
    return p;
  }

  // Poles lambda_h + 1/2 and the coating singularity nu = 1 below nu_max.
  std::vector<double> eps_poles(double nu_max) const {
    std::vector<double> p;
    for (const auto& r : res_)
      if (r.lambda + 0.5 < nu_max) p.push_back(r.lambda + 0.5);
    if (1.0 < nu_max) p.push_back(1.0);
    std::sort(p.begin(), p.end());
    return p;
  }

  double mu_eff(double nu) const {
    if (!(nu >= 0.0)) throw DomainError("mu_eff: nu must be nonnegative");
    const double rho2 = mat_.rho * mat_.rho;
    for (const auto& m : dir_.modes) {
      const double pole = m.mu * rho2;
      if (std::abs(nu - pole) <= pole_exclusion * pole)
        throw PoleProximityError("mu_eff: nu within pole exclusion of mu_n rho^2 = " + std::to_string(pole), pole);
    }
    const double xi0 = nu / rho2;
    double v = g_.theta_H + g_.theta_P + dir_.tail;
    for (const auto& m : dir_.modes) v += m.mu * m.mean_sq / (m.mu - xi0);
    return v;
  }

  double inv_eps_kk(double nu) const {
    if (!(nu >= 0.0)) throw DomainError("inv_eps_kk: nu must be nonnegative");
    if (std::abs(nu - 1.0) <= pole_exclusion)
      throw PoleProximityError("inv_eps_kk: nu within pole exclusion of the coating singularity nu = 1", 1.0);
    for (const auto& r : res_) {
      const double pole = r.lambda + 0.5;
      if (std::abs(nu - pole) <= pole_exclusion * pole)
        throw PoleProximityError("inv_eps_kk: nu within pole exclusion of lambda + 1/2 = " + std::to_string(pole),
                                 pole);
    }
    const double z = nu / (nu - 1.0);
    double v;
    if (form_ == PermittivityForm::corrected) {
      v = g_.theta_H + z * (g_.theta_P - coating_weight_);
      for (const auto& r : res_) {
        const double num = (nu - 1.0) * r.alpha1 + nu * r.alpha2;
        v -= num * num / ((nu - 1.0) * (nu - r.lambda - 0.5));
      }
    } else {
      v = g_.theta_H + z * g_.theta_P;
      for (const auto& r : res_) {
        const double num = (nu - 1.0) * (nu - 1.0) * r.alpha1 * r.alpha1 + 2.0 * (nu - 1.0) * r.alpha1 * r.alpha2 +
                           r.alpha2 * r.alpha2;
        v -= num / ((nu - r.lambda - 0.5) * (nu - 1.0));
      }
    }
    return v;
  }

  // Classification never throws on pole proximity; such points are pole_adjacent.
  EffectiveResponse classify(double nu) const {
    EffectiveResponse e;
    e.nu = nu;
    e.eps_P_inv = nu / (nu - 1.0);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    bool pole = false;
    try {
      e.mu_eff = mu_eff(nu);
    } catch (const PoleProximityError&) {
      e.mu_eff = nan;
      pole = true;
    }
    try {
      e.inv_eps_kk = inv_eps_kk(nu);
    } catch (const PoleProximityError&) {
      e.inv_eps_kk = nan;
      pole = true;
    }
    e.n_eff_sq = (!pole && e.inv_eps_kk != 0.0) ? e.mu_eff / e.inv_eps_kk : nan;
    if (pole)
      e.band_class = BandClass::pole_adjacent;
    else if (e.mu_eff > 0.0 && e.inv_eps_kk > 0.0)
      e.band_class = BandClass::double_positive;
    else if (e.mu_eff < 0.0 && e.inv_eps_kk < 0.0)
      e.band_class = BandClass::double_negative;
    else
      e.band_class = BandClass::single_negative_stop;
    return e;
  }

  // f(nu) = nu n_eff^2(nu), the right-hand side of the leading-order relation.
  double nu_n_sq(double nu) const { return nu * mu_eff(nu) / inv_eps_kk(nu); }

 private:
  CellGeometry g_;
  MaterialSpec mat_;
  DirichletSpectrum dir_;
  std::vector<PermittivityResonance> res_;
  double coating_weight_ = 0.0;
  PermittivityForm form_ = PermittivityForm::corrected;
};

// Homogenized energy flow along khat for unit amplitude.
inline EnergyFlowReport energy_flow(const EffectiveResponse& r) {
  if (!is_propagating(r.band_class) || !(r.n_eff_sq > 0.0))
    throw DomainError("energy_flow: response is not in a propagating band");
  EnergyFlowReport f;
  f.nu = r.nu;
  f.poynting_along_khat = 0.5 * std::sqrt(r.n_eff_sq) * r.inv_eps_kk;
  f.phase_speed_sign = 1;
  f.antiparallel = r.inv_eps_kk < 0.0;
  return f;
}

}  // namespace rodband
