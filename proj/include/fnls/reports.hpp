#pragma once

#include <string>
#include <vector>

#include "fnls/analysis.hpp"
#include "fnls/barycenter.hpp"
#include "fnls/io.hpp"

namespace fnls::io {

inline Table concentration_table(const std::vector<ConcentrationRow>& rows) {
  Table t({"eps", "peak_x", "peak_y", "peak_z", "dist_to_K", "barycenter_x", "barycenter_y", "barycenter_z", "penalty",
           "penalty_zero", "converged", "profile_step"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    const Point b = r.barycenter.value_or(Point{nan, nan, nan});
    t.add({r.eps, r.peak[0], r.peak[1], r.peak[2], r.dist_to_K, b[0], b[1], b[2], r.penalty,
           r.penalty_zero ? 1.0 : 0.0, r.converged ? 1.0 : 0.0, r.profile_step});
  }
  return t;
}

inline Table sandwich_table(const SandwichReport& rep) {
  Table t({"t", "p_x", "p_y", "p_z", "J", "bound", "margin", "half_margin", "deviation", "boundary", "passed"});
  for (const auto& r : rep.rows)
    t.add({r.t, r.p[0], r.p[1], r.p[2], r.J, r.bound, r.margin, r.half_margin, r.deviation, r.boundary ? 1.0 : 0.0,
           r.passed ? 1.0 : 0.0});
  return t;
}

inline json to_json(const SandwichReport& rep) {
  return json{{"E", rep.E},        {"delta_hat", rep.delta_hat},     {"sigma0", rep.sigma0},
              {"eps", rep.eps},    {"interior_ok", rep.interior_ok}, {"boundary_ok", rep.boundary_ok},
              {"consistent", rep.consistent}, {"passed", rep.passed()}};
}

/// One row per solution with its class label; the quotient label is -1 when no quotient was requested.
inline Table cluster_table(const std::vector<SolveResult>& results, const ClusterReport& raw,
                           const ClusterReport* quotient = nullptr) {
  Table t({"index", "seed_tag", "converged", "energy", "barycenter_x", "barycenter_y", "barycenter_z", "class",
           "quotient_class"});
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    t.add({static_cast<double>(i), r.seed_tag, r.converged ? 1.0 : 0.0, r.energy.total, r.barycenter[0],
           r.barycenter[1], r.barycenter[2], static_cast<double>(raw.label[i]),
           quotient ? static_cast<double>(quotient->label[i]) : -1.0});
  }
  return t;
}

/// Shell maxima of a decay fit, for the log-log plot.
inline Table decay_table(const DecayFit& f) {
  Table t({"radius", "shell_max"});
  for (std::size_t i = 0; i < f.radius.size(); ++i) t.add({f.radius[i], f.profile[i]});
  return t;
}

inline json to_json(const DecayFit& f) {
  return json{{"slope", f.slope},           {"intercept", f.intercept},       {"r_squared", f.r_squared},
              {"core_radius", f.core_radius}, {"inner_slope", f.inner_slope}, {"outer_slope", f.outer_slope},
              {"shells", f.shells},         {"flagged", f.flagged},           {"reason", f.reason}};
}

inline Table dictionary_table(const SolutionDictionary& d) {
  Table t({"index", "a", "energy", "hs_norm", "pohozaev", "residual", "iterations"});
  for (std::size_t i = 0; i < d.entries.size(); ++i) {
    const auto& e = d.entries[i];
    t.add({static_cast<double>(i), e.a, e.result.energy.total, e.hs_norm, e.result.pohozaev, e.result.residual,
           static_cast<double>(e.result.iterations)});
  }
  return t;
}

/// (q, density) dump of a barycenter density map; zero-density points are kept so the lattice is complete.
inline Table density_table(const DensityMap& d) {
  Table t({"q_x", "q_y", "q_z", "density", "distance"});
  for (std::size_t k = 0; k < d.values.size(); ++k) {
    const Point q = d.q(k);
    t.add({q[0], q[1], q[2], d.values[k], d.distance[k]});
  }
  return t;
}

} // namespace fnls::io
