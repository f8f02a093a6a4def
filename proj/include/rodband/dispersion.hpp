#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rodband/effective_media.hpp"
#include "rodband/errors.hpp"
#include "rodband/parallel.hpp"

namespace rodband {

enum class CriticalKind { mu_pole, eps_pole, mu_zero, eps_zero };

inline const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::mu_pole: return "mu_pole";
    case CriticalKind::eps_pole: return "eps_pole";
    case CriticalKind::mu_zero: return "mu_zero";
    case CriticalKind::eps_zero: return "eps_zero";
  }
  return "unknown";
}

struct CriticalPoint {
  double nu = 0.0;
  CriticalKind kind = CriticalKind::mu_pole;
};

struct BandInterval {
  double nu_lo = 0.0;
  double nu_hi = 0.0;
  BandClass band_class = BandClass::single_negative_stop;
};

struct BandReport {
  std::vector<BandInterval> intervals;  // sorted, disjoint, covering [0, nu_max]
  std::vector<CriticalPoint> critical;  // sorted
  double nu_max = 0.0;

  double total_length(BandClass c) const {
    double s = 0.0;
    for (const auto& i : intervals)
      if (i.band_class == c) s += i.nu_hi - i.nu_lo;
    return s;
  }
  // Indices into `intervals` of the propagating intervals, in frequency order.
  std::vector<std::size_t> propagating() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < intervals.size(); ++i)
      if (is_propagating(intervals[i].band_class)) idx.push_back(i);
    return idx;
  }
};

struct DispersionPoint {
  double dk = 0.0;
  double nu = 0.0;
  int branch_id = 0;
  BandClass band_class = BandClass::double_positive;
  std::string source = "leading_order";
  double residual = 0.0;  // |dk^2 - nu n_eff^2(nu)| for leading-order points
  int interval = -1;      // index into BandReport::intervals
  double omega_ratio() const { return std::sqrt(nu); }
};

namespace detail {

// Bisection on a sign change of f within [lo, hi]; stops when the bracket is
// below `width` or cannot be split further.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, double flo, double width) {
  for (int it = 0; it < 200 && hi - lo > width; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Sample abscissae strictly inside (lo, hi): a uniform grid of `count` points
// plus geometric clusters toward both ends.
inline std::vector<double> sample_points(double lo, double hi, int count) {
  std::vector<double> x;
  const double w = hi - lo;
  for (int k = 12; k >= 4; --k) x.push_back(lo + w * std::pow(10.0, -k));
  for (int i = 0; i < count; ++i) x.push_back(lo + w * (i + 0.5) / count);
  for (int k = 4; k <= 12; ++k) x.push_back(hi - w * std::pow(10.0, -k));
  std::sort(x.begin(), x.end());
  x.erase(std::unique(x.begin(), x.end()), x.end());
  x.erase(std::remove_if(x.begin(), x.end(), [&](double v) { return !(v > lo && v < hi); }), x.end());
  return x;
}

// Zeros of f on (lo, hi), where f is continuous, located by sampling and bisection.
inline std::vector<double> zeros_on(const std::function<double(double)>& f, double lo, double hi, int samples,
                                    double width) {
  std::vector<double> out;
  const auto xs = sample_points(lo, hi, samples);
  double px = 0.0, pf = 0.0;
  bool have = false;
  for (double x : xs) {
    double fx;
    try {
      fx = f(x);
    } catch (const PoleProximityError&) {
      have = false;
      continue;
    }
    if (have && ((pf < 0.0 && fx > 0.0) || (pf > 0.0 && fx < 0.0))) out.push_back(bisect(f, px, x, pf, width));
    if (fx == 0.0) out.push_back(x);
    px = x;
    pf = fx;
    have = true;
  }
  return out;
}

// Refine an analytically known pole p of f by bisecting the sign flip across it;
// the bracket shrinks until it enters the pole exclusion radius.
inline double refine_pole(const std::function<double(double)>& f, double p) {
  double lo = p * (1.0 - 1e-6), hi = p * (1.0 + 1e-6);
  double flo, fhi;
  try {
    flo = f(lo);
    fhi = f(hi);
  } catch (const PoleProximityError&) {
    return p;
  }
  if ((flo > 0.0) == (fhi > 0.0)) return p;  // no sign flip (even-order or cancelled pole)
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double fm;
    try {
      fm = f(mid);
    } catch (const PoleProximityError&) {
      return mid;
    }
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Poles and zeros of the constitutive functions on (0, nu_max) and the
// classified intervals between consecutive critical points.
inline BandReport band_edges(const EffectiveModel& model, double nu_max, int samples = 2048) {
  BandReport rep;
  rep.nu_max = nu_max;
  auto mu = [&](double x) { return model.mu_eff(x); };
  auto ie = [&](double x) { return model.inv_eps_kk(x); };
  std::vector<CriticalPoint> poles;
  for (double p : model.mu_poles(nu_max)) poles.push_back({detail::refine_pole(mu, p), CriticalKind::mu_pole});
  for (double p : model.eps_poles(nu_max)) poles.push_back({detail::refine_pole(ie, p), CriticalKind::eps_pole});
  std::sort(poles.begin(), poles.end(), [](const auto& x, const auto& y) { return x.nu < y.nu; });

  std::vector<double> cuts{0.0};
  for (const auto& p : poles) cuts.push_back(p.nu);
  cuts.push_back(nu_max);
  rep.critical = poles;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double lo = cuts[s], hi = cuts[s + 1];
    if (!(hi > lo)) continue;
    const double width = 1e-13 * std::max(1.0, hi);
    for (double z : detail::zeros_on(mu, lo, hi, samples, width)) rep.critical.push_back({z, CriticalKind::mu_zero});
    for (double z : detail::zeros_on(ie, lo, hi, samples, width)) rep.critical.push_back({z, CriticalKind::eps_zero});
  }
  std::sort(rep.critical.begin(), rep.critical.end(), [](const auto& x, const auto& y) {
    if (x.nu != y.nu) return x.nu < y.nu;
    return static_cast<int>(x.kind) < static_cast<int>(y.kind);
  });

  std::vector<double> edges{0.0};
  for (const auto& c : rep.critical)
    if (c.nu > edges.back()) edges.push_back(c.nu);
  if (nu_max > edges.back()) edges.push_back(nu_max);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double mid = 0.5 * (edges[i] + edges[i + 1]);
    rep.intervals.push_back({edges[i], edges[i + 1], model.classify(mid).band_class});
  }
  return rep;
}

// Roots nu of dk^2 = nu n_eff^2(nu) in every propagating interval. branch_id is
// the position of the interval among the propagating intervals.
inline std::vector<DispersionPoint> solve_leading_order(const EffectiveModel& model, const BandReport& rep, double dk,
                                                        int samples = 2048) {
  if (!(dk >= 0.0)) throw DomainError("solve_leading_order: dk must be nonnegative");
  const double target = dk * dk;
  auto f = [&](double x) { return target - model.nu_n_sq(x); };
  std::vector<DispersionPoint> out;
  const auto prop = rep.propagating();
  for (std::size_t b = 0; b < prop.size(); ++b) {
    const auto& iv = rep.intervals[prop[b]];
    std::vector<double> roots;
    if (iv.nu_lo == 0.0 && dk == 0.0) roots.push_back(0.0);
    const double width = 4.0 * std::numeric_limits<double>::epsilon() * std::max(iv.nu_hi, 1e-300);
    // Sign flips across a pole of f bisect to a point with a huge residual; drop them.
    for (double r : detail::zeros_on(f, iv.nu_lo, iv.nu_hi, samples, width)) {
      double res;
      try {
        res = std::abs(f(r));
      } catch (const PoleProximityError&) {
        continue;
      }
      if (res <= 1e-9 * (1.0 + target)) roots.push_back(r);
    }
    for (double r : roots) {
      DispersionPoint p;
      p.dk = dk;
      p.nu = r;
      p.branch_id = static_cast<int>(b);
      p.band_class = iv.band_class;
      p.source = "leading_order";
      p.residual = r == 0.0 ? target : std::abs(f(r));
      p.interval = static_cast<int>(prop[b]);
      out.push_back(p);
    }
  }
  return out;
}

// Leading-order points over a dk grid, assembled into continuous branches. A
// step larger than ten times the secant prediction from the two previous points
// of a branch starts a new branch id.
inline std::vector<DispersionPoint> trace_branches(const EffectiveModel& model, const BandReport& rep,
                                                   const std::vector<double>& dk_grid, int threads = 1,
                                                   int samples = 2048) {
  for (std::size_t i = 1; i < dk_grid.size(); ++i)
    if (!(dk_grid[i] > dk_grid[i - 1])) throw ConfigError("dk grid must be strictly increasing");
  std::vector<std::vector<DispersionPoint>> per(dk_grid.size());
  parallel_for(dk_grid.size(), threads,
               [&](std::size_t i) { per[i] = solve_leading_order(model, rep, dk_grid[i], samples); });

  const int base = static_cast<int>(rep.propagating().size());
  int next_id = base;
  struct Track {
    int id;
    int interval;
    std::vector<DispersionPoint*> pts;
  };
  std::vector<Track> tracks;
  std::vector<DispersionPoint> all;
  std::size_t total = 0;
  for (const auto& v : per) total += v.size();
  all.reserve(total);
  for (auto& v : per)
    for (auto& p : v) all.push_back(p);

  std::size_t offset = 0;
  for (std::size_t i = 0; i < per.size(); ++i) {
    std::vector<bool> used(tracks.size(), false);
    for (std::size_t k = 0; k < per[i].size(); ++k) {
      DispersionPoint* p = &all[offset + k];
      int best = -1;
      double best_step = INFINITY;
      for (std::size_t t = 0; t < tracks.size(); ++t) {
        auto& tr = tracks[t];
        if (used[t] || tr.interval != p->interval) continue;
        const DispersionPoint* last = tr.pts.back();
        const double step = std::abs(p->nu - last->nu);
        bool ok = true;
        if (tr.pts.size() >= 2) {
          const DispersionPoint* prev = tr.pts[tr.pts.size() - 2];
          const double slope = (last->nu - prev->nu) / (last->dk - prev->dk);
          const double pred = std::abs(slope * (p->dk - last->dk));
          ok = step <= 10.0 * pred + 1e-9;
        }
        if (ok && step < best_step) {
          best_step = step;
          best = static_cast<int>(t);
        }
      }
      if (best < 0) {
        const bool first_on_interval = std::none_of(tracks.begin(), tracks.end(),
                                                    [&](const Track& t) { return t.interval == p->interval; });
        Track tr{first_on_interval ? p->branch_id : next_id++, p->interval, {}};
        tracks.push_back(tr);
        used.push_back(false);
        best = static_cast<int>(tracks.size() - 1);
      }
      used[best] = true;
      tracks[best].pts.push_back(p);
      p->branch_id = tracks[best].id;
    }
    offset += per[i].size();
  }
  std::stable_sort(all.begin(), all.end(), [](const DispersionPoint& x, const DispersionPoint& y) {
    if (x.branch_id != y.branch_id) return x.branch_id < y.branch_id;
    return x.dk < y.dk;
  });
  return all;
}

struct ResonanceSensitivity {
  std::size_t modes_total = 0;
  std::size_t modes_kept = 0;
  double max_shift = 0.0;           // largest |delta nu| over matched points
  double max_relative_shift = 0.0;  // largest |delta nu| / nu
  std::size_t unmatched = 0;        // points of the full model without a partner
};

// Shift of the leading-order points when the smaller-|lambda| half of the
// resonances is dropped. Points are matched to the nearest root at the same dk.
inline ResonanceSensitivity resonance_sensitivity(const EffectiveModel& model, const std::vector<double>& dk_grid,
                                                  double nu_max, int samples = 2048) {
  ResonanceSensitivity out;
  auto res = model.resonances();
  out.modes_total = res.size();
  std::stable_sort(res.begin(), res.end(), [](const PermittivityResonance& x, const PermittivityResonance& y) {
    return std::abs(x.lambda) > std::abs(y.lambda);
  });
  res.resize((res.size() + 1) / 2);
  out.modes_kept = res.size();
  const EffectiveModel reduced = model.with_resonances(res);
  const BandReport full_bands = band_edges(model, nu_max, samples);
  const BandReport reduced_bands = band_edges(reduced, nu_max, samples);
  for (double dk : dk_grid) {
    const auto ref = solve_leading_order(model, full_bands, dk, samples);
    const auto cmp = solve_leading_order(reduced, reduced_bands, dk, samples);
    for (const auto& p : ref) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : cmp) best = std::min(best, std::abs(q.nu - p.nu));
      if (!std::isfinite(best)) {
        ++out.unmatched;
        continue;
      }
      out.max_shift = std::max(out.max_shift, best);
      if (p.nu > 0.0) out.max_relative_shift = std::max(out.max_relative_shift, best / p.nu);
    }
  }
  return out;
}

}  // namespace rodband
