#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rodband/rodband.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rodband;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir = "out";
  std::string seed_from;
  int threads = 0;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
}

Config load_config(const Options& o) {
  if (!o.seed_from.empty()) {
    const json m = read_json(o.seed_from);
    if (!m.contains("config")) throw ConfigError("manifest " + o.seed_from + " has no config echo");
    return validate_config(m.at("config"));
  }
  if (o.config_path.empty()) throw ConfigError("no configuration given (use -c or --seed-from)");
  return validate_config(read_json(o.config_path));
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Writes `body` to <out>/<name> and a manifest next to it.
void emit(const Options& o, const Config& cfg, const std::string& command, const std::string& name,
          const std::string& body, const json& extra = json::object()) {
  fs::create_directories(o.out_dir);
  const fs::path out = fs::path(o.out_dir) / name;
  {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + out.string());
    f << body;
  }
  json m;
  m["command"] = command;
  m["config"] = to_json(cfg);
  m["truncation"] = {{"N_multipole", cfg.trunc.N_multipole},
                     {"N_dirichlet", cfg.trunc.N_dirichlet},
                     {"lattice_radius", cfg.trunc.lattice_radius},
                     {"G_max", cfg.trunc.G_max}};
  m["khat_renormalized"] = cfg.prop.khat_renormalized;
  m["timestamp"] = utc_timestamp();
  m["outputs"] = {out.string()};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  const fs::path mp = fs::path(o.out_dir) / (command + ".manifest.json");
  std::ofstream mf(mp);
  mf << m.dump(2) << '\n';
  std::cout << out.string() << '\n';
  if (cfg.prop.khat_renormalized) std::cerr << "warning: propagation.khat was not unit length and was normalized\n";
}

std::string str(double v) { return format_number(v); }

int cmd_lattice_sums(const Options& o) {
  const Config cfg = load_config(o);
  const int top = 2 * cfg.trunc.N_multipole;
  const LatticeSumTable t = build_lattice_sums(top, cfg.trunc.lattice_radius);
  std::ostringstream os;
  CsvWriter w(os, {"n", "S_n"});
  for (int n = 3; n <= top; ++n) w.row({std::to_string(n), str(t.at(n))});
  emit(o, cfg, "lattice-sums", "lattice-sums.csv", os.str());
  return 0;
}

int cmd_resonances(const Options& o) {
  const Config cfg = load_config(o);
  const auto sums = lattice_sums_for(cfg.trunc.N_multipole, cfg.trunc.lattice_radius);
  const auto es = compute_spectrum(cfg.geom, sums, cfg.trunc.N_multipole, cfg.prop.khat, cfg.model.rayleigh_system);
  std::ostringstream os;
  CsvWriter w(os, {"rank", "lambda", "converged", "alpha1", "alpha2"});
  int rank = 1;
  for (const auto& m : es.modes)
    w.row({std::to_string(rank++), str(m.lambda), m.converged ? "1" : "0", str(m.alpha1), str(m.alpha2)});
  json rejected = json::array();
  for (const auto& r : es.rejected) rejected.push_back({{"lambda", r.lambda}, {"reason", r.reason}});
  emit(o, cfg, "resonances", "resonances.csv", os.str(), {{"rejected_modes", rejected}});
  return 0;
}

int cmd_dirichlet(const Options& o) {
  const Config cfg = load_config(o);
  const auto s = dirichlet_spectrum(cfg.geom.a, cfg.trunc.N_dirichlet);
  std::ostringstream os;
  CsvWriter w(os, {"n", "j0n", "mu_n", "mean_sq"});
  for (const auto& m : s.modes) w.row({std::to_string(m.index), str(m.zero), str(m.mu), str(m.mean_sq)});
  emit(o, cfg, "dirichlet", "dirichlet.csv", os.str(), {{"tail", s.tail}});
  return 0;
}

int cmd_effective(const Options& o) {
  const Config cfg = load_config(o);
  const Pipeline p = build_pipeline(cfg, false);
  std::ostringstream os;
  CsvWriter w(os, {"omega_ratio", "nu", "mu_eff", "inv_eps_kk", "n_eff_sq", "band_class"});
  const int n = cfg.output.nu_samples;
  for (int i = 0; i < n; ++i) {
    const double nu = cfg.output.nu_max * i / (n - 1);
    const EffectiveResponse r = p.model->classify(nu);
    w.row({str(std::sqrt(nu)), str(nu), str(r.mu_eff), str(r.inv_eps_kk), str(r.n_eff_sq), to_string(r.band_class)});
  }
  emit(o, cfg, "effective", "effective.csv", os.str());
  return 0;
}

int cmd_bands(const Options& o) {
  const Config cfg = load_config(o);
  const Pipeline p = build_pipeline(cfg);
  json bands = json::array();
  for (const auto& iv : p.bands.intervals)
    bands.push_back({{"nu_lo", iv.nu_lo}, {"nu_hi", iv.nu_hi}, {"class", to_string(iv.band_class)}});
  json crit = json::array();
  for (const auto& c : p.bands.critical) crit.push_back({{"nu", c.nu}, {"kind", to_string(c.kind)}});
  emit(o, cfg, "bands", "bands.json", bands.dump(2) + "\n", {{"critical_points", crit}});
  return 0;
}

int cmd_dispersion(const Options& o) {
  const Config cfg = load_config(o);
  const Pipeline p = build_pipeline(cfg);
  const auto pts = trace_branches(*p.model, p.bands, cfg.prop.dk_grid, resolve_threads(o.threads));
  std::ostringstream os;
  CsvWriter w(os, {"dk", "omega_ratio", "branch_id", "band_class", "source"});
  for (const auto& q : pts)
    w.row({str(q.dk), str(q.omega_ratio()), std::to_string(q.branch_id), to_string(q.band_class), q.source});
  emit(o, cfg, "dispersion", "dispersion.csv", os.str());
  return 0;
}

struct PweRun {
  std::vector<DispersionPoint> seeds;
  std::vector<PwePoint> points;
};

PweRun run_pwe(const Pipeline& p, int threads) {
  const Config& cfg = p.config;
  PweRun r;
  r.seeds = trace_branches(*p.model, p.bands, cfg.prop.dk_grid, threads);
  BlochOperator op(cfg.geom, cfg.mat, cfg.trunc.G_max);
  BlochSettings s;
  s.tol = cfg.solver.tol;
  s.max_iter = cfg.solver.max_iter;
  r.points = dispersion_points(op, r.seeds, cfg.prop.khat, p.bands, s, threads);
  std::size_t ok = 0;
  for (const auto& q : r.points) ok += q.converged;
  if (!r.seeds.empty() && ok == 0) throw NumericalError("no plane-wave seed converged");
  return r;
}

int cmd_bloch(const Options& o) {
  const Config cfg = load_config(o);
  const Pipeline p = build_pipeline(cfg);
  const PweRun r = run_pwe(p, resolve_threads(o.threads));
  std::ostringstream os;
  CsvWriter w(os, {"dk", "omega_ratio", "branch_id", "iterations", "residual", "converged"});
  std::size_t ok = 0;
  for (const auto& q : r.points) {
    ok += q.converged;
    w.row({str(q.point.dk), str(q.point.omega_ratio()), std::to_string(q.point.branch_id),
           std::to_string(q.iterations), str(q.residual), q.converged ? "1" : "0"});
  }
  emit(o, cfg, "bloch", "bloch.csv", os.str(), {{"seeds", r.points.size()}, {"converged_seeds", ok}});
  return 0;
}

int cmd_compare(const Options& o) {
  const Config cfg = load_config(o);
  const Pipeline p = build_pipeline(cfg);
  const PweRun r = run_pwe(p, resolve_threads(o.threads));
  std::ostringstream os;
  CsvWriter w(os, {"dk", "branch_id", "band_class", "nu_leading", "nu_pwe", "omega_ratio_leading",
                   "omega_ratio_pwe", "rel_dev_nu", "rel_dev_omega", "converged"});
  double worst = 0.0;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const DispersionPoint& lo = r.seeds[i];
    const PwePoint& pw = r.points[i];
    const double nu_p = pw.point.nu;
    const double dev_nu = pw.converged && nu_p != 0.0 ? (lo.nu - nu_p) / nu_p : std::nan("");
    const double dev_om = pw.converged && nu_p != 0.0 ? (lo.omega_ratio() - pw.point.omega_ratio()) / pw.point.omega_ratio()
                                                      : std::nan("");
    if (pw.converged && lo.dk <= 1.0 && std::abs(dev_nu) > worst) worst = std::abs(dev_nu);
    w.row({str(lo.dk), std::to_string(lo.branch_id), to_string(lo.band_class), str(lo.nu), str(nu_p),
           str(lo.omega_ratio()), str(pw.point.omega_ratio()), str(dev_nu), str(dev_om), pw.converged ? "1" : "0"});
  }
  emit(o, cfg, "compare", "compare.csv", os.str(), {{"max_rel_dev_nu_dk_le_1", worst}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective properties and Bloch dispersion of coated-rod crystals"};
  app.require_subcommand(1);
  Options o;
  const std::map<std::string, int (*)(const Options&)> commands{
      {"lattice-sums", cmd_lattice_sums}, {"resonances", cmd_resonances}, {"dirichlet", cmd_dirichlet},
      {"effective", cmd_effective},       {"dispersion", cmd_dispersion}, {"bloch", cmd_bloch},
      {"compare", cmd_compare},           {"bands", cmd_bands}};
  const std::map<std::string, std::string> help{
      {"lattice-sums", "square-lattice sums S_n"},
      {"resonances", "electrostatic resonances and couplings"},
      {"dirichlet", "core Dirichlet spectrum"},
      {"effective", "effective permeability and permittivity sweep"},
      {"dispersion", "leading-order dispersion branches"},
      {"bloch", "plane-wave Bloch solutions seeded from the leading order"},
      {"compare", "leading order against plane-wave solutions"},
      {"bands", "band intervals as JSON"}};
  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("-c,--config", o.config_path, "configuration file (JSON)");
    sub->add_option("-o,--out", o.out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", o.threads, "worker threads (default: RODBAND_THREADS or 1)");
    sub->add_option("--seed-from", o.seed_from, "reuse the configuration recorded in a manifest");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::config_error);
  }
  for (const auto& [name, fn] : commands) {
    if (!app.got_subcommand(name)) continue;
    try {
      return fn(o);
    } catch (const Error& e) {
      std::cerr << "rodband " << name << ": " << e.what() << '\n';
      return static_cast<int>(e.code());
    } catch (const std::exception& e) {
      std::cerr << "rodband " << name << ": " << e.what() << '\n';
      return static_cast<int>(ExitCode::numerical_failure);
    }
  }
  return 0;
}
