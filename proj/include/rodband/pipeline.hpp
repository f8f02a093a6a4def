#pragma once

#include <memory>
#include <vector>

#include "rodband/config.hpp"
#include "rodband/dirichlet.hpp"
#include "rodband/dispersion.hpp"
#include "rodband/effective_media.hpp"
#include "rodband/electrostatics.hpp"
#include "rodband/lattice_sums.hpp"

namespace rodband {

// Everything downstream of a validated configuration, built once.
struct Pipeline {
  Config config;
  LatticeSumTable sums;
  ElectrostaticSpectrum spectrum;
  DirichletSpectrum dirichlet;
  std::unique_ptr<EffectiveModel> model;
  BandReport bands;
};

inline Pipeline build_pipeline(const Config& cfg, bool with_bands = true) {
  Pipeline p;
  p.config = cfg;
  p.sums = lattice_sums_for(cfg.trunc.N_multipole, cfg.trunc.lattice_radius);
  p.spectrum = compute_spectrum(cfg.geom, p.sums, cfg.trunc.N_multipole, cfg.prop.khat, cfg.model.rayleigh_system);
  p.dirichlet = dirichlet_spectrum(cfg.geom.a, cfg.trunc.N_dirichlet);
  p.model = std::make_unique<EffectiveModel>(
      EffectiveModel::from_spectra(cfg.geom, cfg.mat, p.dirichlet, p.spectrum, cfg.model.permittivity_form));
  if (with_bands) p.bands = band_edges(*p.model, cfg.output.nu_max);
  return p;
}

// Config for one of the two reference geometries with every other key at its default.
inline Config reference_config(double a, double b = 0.4, double eps_R = 285.0) {
  nlohmann::json j;
  j["geometry"] = {{"a", a}, {"b", b}};
  j["material"] = {{"eps_R", eps_R}};
  j["propagation"] = {{"khat", {1.0, 0.0}}};
  return validate_config(j);
}

}  // namespace rodband
