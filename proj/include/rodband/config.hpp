#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"
#include "rodband/errors.hpp"

namespace rodband {

// Unit-cell geometry: core radius a, coating outer radius b, both in cell lengths.
struct CellGeometry {
  double a = 0.0;
  double b = 0.0;
  double theta_R = 0.0;  // core area fraction
  double theta_P = 0.0;  // coating area fraction
  double theta_H = 0.0;  // host area fraction

  static CellGeometry make(double a, double b) {
    if (!(a > 0.0) || !(a < b) || !(b < 0.5))
      throw GeometryError("invalid geometry: need 0 < a < b < 0.5, got a=" + std::to_string(a) +
                          " b=" + std::to_string(b));
    CellGeometry g;
    g.a = a;
    g.b = b;
    const double pi = std::numbers::pi;
    g.theta_R = pi * a * a;
    g.theta_P = pi * (b * b - a * a);
    g.theta_H = 1.0 - pi * b * b;
    return g;
  }
};

struct MaterialSpec {
  double eps_R = 0.0;  // normalized core permittivity
  double rho = 0.0;    // eps_R^{-1/2}

  static MaterialSpec make(double eps_R) {
    if (!(eps_R > 1.0)) throw ConfigError("material.eps_R must exceed 1");
    return MaterialSpec{eps_R, 1.0 / std::sqrt(eps_R)};
  }
};

struct PropagationSpec {
  std::array<double, 2> khat{1.0, 0.0};
  std::vector<double> dk_grid;
  bool khat_renormalized = false;  // set when the input direction was not unit length
};

struct Truncation {
  int N_multipole = 20;
  int N_dirichlet = 500;
  double lattice_radius = 400.0;
  int G_max = 12;
};

struct SolverSettings {
  double tol = 1e-10;
  int max_iter = 100;
};

struct OutputSettings {
  double nu_max = 1.2;
  int nu_samples = 1201;  // frequency samples of the `effective` sweep on [0, nu_max]
};

// Which linear system determines the electrostatic resonances.
//  printed:  standard eigenproblem with the classical Rayleigh matrix.
//  periodic: pencil from inserting the closures into the Rayleigh identity.
enum class RayleighSystem { printed, periodic };

// Resonance expansion of the inverse effective permittivity.
//  corrected: coating term weighted by nu, plus the coating eigenspace weight.
//  printed:   the classical expansion with the (nu-1)^2, 2(nu-1), 1 numerator.
enum class PermittivityForm { corrected, printed };

inline const char* to_string(RayleighSystem s) { return s == RayleighSystem::printed ? "printed" : "periodic"; }
inline const char* to_string(PermittivityForm f) { return f == PermittivityForm::corrected ? "corrected" : "printed"; }

inline RayleighSystem rayleigh_system_from_string(const std::string& s) {
  if (s == "printed") return RayleighSystem::printed;
  if (s == "periodic") return RayleighSystem::periodic;
  throw ConfigError("model.rayleigh_system must be 'printed' or 'periodic', got '" + s + "'");
}

inline PermittivityForm permittivity_form_from_string(const std::string& s) {
  if (s == "corrected") return PermittivityForm::corrected;
  if (s == "printed") return PermittivityForm::printed;
  throw ConfigError("model.permittivity_form must be 'corrected' or 'printed', got '" + s + "'");
}

struct ModelSettings {
  RayleighSystem rayleigh_system = RayleighSystem::printed;
  PermittivityForm permittivity_form = PermittivityForm::corrected;
};

struct Config {
  CellGeometry geom;
  MaterialSpec mat;
  PropagationSpec prop;
  Truncation trunc;
  SolverSettings solver;
  OutputSettings output;
  ModelSettings model;
};

// Normalized frequency helpers. nu = (omega0/omega_p)^2 is the working variable.
inline double xi0_from_nu(double nu, const MaterialSpec& mat) { return nu / (mat.rho * mat.rho); }
inline double nu_from_xi0(double xi0, const MaterialSpec& mat) { return xi0 * mat.rho * mat.rho; }
// Inverse coating permittivity 1/eps_P = nu/(nu-1).
inline double coating_inverse_permittivity(double nu) { return nu / (nu - 1.0); }

inline std::vector<double> default_dk_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 10; ++i) g.push_back(0.1 * i);
  return g;
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j, const char* section, const char* key) {
  const std::string name = std::string(section) + "." + key;
  if (!j.contains(section) || !j.at(section).is_object() || !j.at(section).contains(key))
    throw ConfigError("missing required key: " + name);
  return j.at(section).at(key);
}

inline const nlohmann::json* optional(const nlohmann::json& j, const char* section, const char* key) {
  if (!j.contains(section) || !j.at(section).is_object()) return nullptr;
  auto it = j.at(section).find(key);
  return it == j.at(section).end() ? nullptr : &*it;
}

template <class T>
T as(const nlohmann::json& v, const std::string& name) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("wrong type for key: " + name);
  }
}

}  // namespace detail

inline Config validate_config(const nlohmann::json& raw) {
  using detail::as;
  if (!raw.is_object()) throw ConfigError("configuration root must be an object");
  Config c;
  const double a = as<double>(detail::require(raw, "geometry", "a"), "geometry.a");
  const double b = as<double>(detail::require(raw, "geometry", "b"), "geometry.b");
  const double eps = as<double>(detail::require(raw, "material", "eps_R"), "material.eps_R");
  auto kh = as<std::vector<double>>(detail::require(raw, "propagation", "khat"), "propagation.khat");
  c.geom = CellGeometry::make(a, b);
  c.mat = MaterialSpec::make(eps);

  if (kh.size() != 2) throw ConfigError("propagation.khat must have two components");
  const double norm = std::hypot(kh[0], kh[1]);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw ConfigError("propagation.khat must be nonzero");
  if (std::abs(norm - 1.0) > 1e-12) {
    c.prop.khat_renormalized = true;
    kh[0] /= norm;
    kh[1] /= norm;
  }
  c.prop.khat = {kh[0], kh[1]};

  if (auto* v = detail::optional(raw, "propagation", "dk_grid"))
    c.prop.dk_grid = as<std::vector<double>>(*v, "propagation.dk_grid");
  else
    c.prop.dk_grid = default_dk_grid();
  const double two_pi = 2.0 * std::numbers::pi;
  for (double dk : c.prop.dk_grid) {
    if (!(dk >= 0.0)) throw ConfigError("propagation.dk_grid entries must be nonnegative");
    if (std::abs(dk * c.prop.khat[0]) > two_pi)
      throw ConfigError("propagation.dk_grid entry outside the first Brillouin range");
  }

  if (auto* v = detail::optional(raw, "truncation", "N_multipole"))
    c.trunc.N_multipole = as<int>(*v, "truncation.N_multipole");
  if (auto* v = detail::optional(raw, "truncation", "N_dirichlet"))
    c.trunc.N_dirichlet = as<int>(*v, "truncation.N_dirichlet");
  if (auto* v = detail::optional(raw, "truncation", "lattice_radius"))
    c.trunc.lattice_radius = as<double>(*v, "truncation.lattice_radius");
  if (auto* v = detail::optional(raw, "truncation", "G_max"))
    c.trunc.G_max = as<int>(*v, "truncation.G_max");
  if (auto* v = detail::optional(raw, "solver", "tol")) c.solver.tol = as<double>(*v, "solver.tol");
  if (auto* v = detail::optional(raw, "solver", "max_iter"))
    c.solver.max_iter = as<int>(*v, "solver.max_iter");
  if (auto* v = detail::optional(raw, "output", "nu_max")) c.output.nu_max = as<double>(*v, "output.nu_max");
  if (auto* v = detail::optional(raw, "output", "nu_samples"))
    c.output.nu_samples = as<int>(*v, "output.nu_samples");
  if (auto* v = detail::optional(raw, "model", "rayleigh_system"))
    c.model.rayleigh_system = rayleigh_system_from_string(as<std::string>(*v, "model.rayleigh_system"));
  if (auto* v = detail::optional(raw, "model", "permittivity_form"))
    c.model.permittivity_form = permittivity_form_from_string(as<std::string>(*v, "model.permittivity_form"));

  if (c.trunc.N_multipole < 1) throw ConfigError("truncation.N_multipole must be >= 1");
  if (c.trunc.N_dirichlet < 1) throw ConfigError("truncation.N_dirichlet must be >= 1");
  if (!(c.trunc.lattice_radius >= 4.0)) throw ConfigError("truncation.lattice_radius must be >= 4");
  if (c.trunc.G_max < 1) throw ConfigError("truncation.G_max must be >= 1");
  if (!(c.solver.tol > 0.0)) throw ConfigError("solver.tol must be positive");
  if (c.solver.max_iter < 1) throw ConfigError("solver.max_iter must be >= 1");
  if (!(c.output.nu_max > 0.0)) throw ConfigError("output.nu_max must be positive");
  if (c.output.nu_samples < 2) throw ConfigError("output.nu_samples must be >= 2");
  return c;
}

// Serialized form; validate_config(to_json(c)) reproduces c exactly.
inline nlohmann::json to_json(const Config& c) {
  nlohmann::json j;
  j["geometry"] = {{"a", c.geom.a}, {"b", c.geom.b}};
  j["material"] = {{"eps_R", c.mat.eps_R}};
  j["propagation"] = {{"khat", {c.prop.khat[0], c.prop.khat[1]}}, {"dk_grid", c.prop.dk_grid}};
  j["truncation"] = {{"N_multipole", c.trunc.N_multipole},
                     {"N_dirichlet", c.trunc.N_dirichlet},
                     {"lattice_radius", c.trunc.lattice_radius},
                     {"G_max", c.trunc.G_max}};
  j["solver"] = {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}};
  j["output"] = {{"nu_max", c.output.nu_max}, {"nu_samples", c.output.nu_samples}};
  j["model"] = {{"rayleigh_system", to_string(c.model.rayleigh_system)},
                {"permittivity_form", to_string(c.model.permittivity_form)}};
  return j;
}

}  // namespace rodband
