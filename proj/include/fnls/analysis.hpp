#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fnls/barycenter.hpp"
#include "fnls/dictionary.hpp"
#include "fnls/functionals.hpp"
#include "fnls/solvers.hpp"

namespace fnls {

// ---------------------------------------------------------------- decay

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double core_radius = 0.0;
  double inner_slope = 0.0;  // fits over the inner and outer halves of the annulus
  double outer_slope = 0.0;
  std::size_t shells = 0;
  bool flagged = false;
  std::string reason;
  std::vector<double> radius;  // shell centers
  std::vector<double> profile; // shell max of |u|
};

/// Radius around `center` containing the given fraction of ||u||_2^2.
inline double core_radius(const Field& u, const Point& center, double fraction = 0.9) {
  const GridSpec& g = u.grid;
  std::vector<std::pair<double, double>> rm(u.size());
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    rm[i] = {norm(g.periodic_delta(center, g.position(i))), u.values[i] * u.values[i]};
    total += rm[i].second;
  }
  if (!(total > 0.0)) return 0.0;
  std::sort(rm.begin(), rm.end());
  double acc = 0.0;
  for (const auto& [r, m] : rm) {
    acc += m;
    if (acc >= fraction * total) return r;
  }
  return rm.back().first;
}

namespace detail {

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

} // namespace detail

/// Least-squares slope of log(shell max |u|) against log r over r_min <= r <= r_max around the maximum.
inline DecayFit fit_decay_exponent(const Field& u, double r_min, double r_max, std::optional<Point> center = std::nullopt) {
  const GridSpec& g = u.grid;
  require_finite(u, "fit_decay_exponent");
  if (!(r_min > 0.0) || !(r_max > r_min)) throw ValidationError("decay fit needs 0 < r_min < r_max");
  if (r_max > 0.6 * g.half_width)
    throw ValidationError("decay fit: r_max exceeds 0.6 L, periodic images contaminate the tail");
  const Point c = center ? *center : refined_peak(u);
  DecayFit fit;
  fit.core_radius = core_radius(u, c);
  if (r_min < 3.0 * fit.core_radius)
    throw ValidationError("decay fit: r_min is below three core radii (" + std::to_string(fit.core_radius) + ")");
  const double h = g.spacing();
  const std::size_t nbins = static_cast<std::size_t>(std::ceil((r_max - r_min) / h));
  std::vector<double> shell(nbins, -1.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = norm(g.periodic_delta(c, g.position(i)));
    if (r < r_min || r > r_max) continue;
    const std::size_t b = std::min(nbins - 1, static_cast<std::size_t>((r - r_min) / h));
    shell[b] = std::max(shell[b], std::abs(u.values[i]));
  }
  std::vector<double> lx, ly;
  bool tiny = false;
  for (std::size_t b = 0; b < nbins; ++b) {
    if (shell[b] < 0.0) continue;
    if (shell[b] < 1e-14) {
      tiny = true;
      continue;
    }
    const double r = r_min + (b + 0.5) * h;
    fit.radius.push_back(r);
    fit.profile.push_back(shell[b]);
    lx.push_back(std::log(r));
    ly.push_back(std::log(shell[b]));
  }
  if (fit.radius.empty() && !tiny) throw ValidationError("decay fit: annulus contains no grid points");
  fit.shells = lx.size();
  if (fit.shells < 4) {
    fit.flagged = true;
    fit.reason = tiny ? "field below 1e-14 in the annulus" : "too few shells";
    return fit;
  }
  const auto all = detail::least_squares(lx, ly);
  fit.slope = all.slope;
  fit.intercept = all.intercept;
  fit.r_squared = all.r2;
  const std::size_t half = lx.size() / 2;
  fit.inner_slope = detail::least_squares({lx.begin(), lx.begin() + half}, {ly.begin(), ly.begin() + half}).slope;
  fit.outer_slope = detail::least_squares({lx.begin() + half, lx.end()}, {ly.begin() + half, ly.end()}).slope;
  if (tiny) {
    fit.flagged = true;
    fit.reason = "field below 1e-14 in part of the annulus";
  } else if (fit.r_squared < 0.95) {
    fit.flagged = true;
    fit.reason = "poor power-law fit (r^2 < 0.95)";
  } else if (fit.outer_slope < 1.25 * fit.inner_slope) {
    fit.flagged = true;
    fit.reason = "slope steepens across the annulus: not a power law";
  }
  return fit;
}

// ---------------------------------------------------------------- tail

/// Tail(u; x0, R) = (1 - s) R^{2s} int_{|x - x0| > R} |u(x)| / |x - x0|^{N + 2s} dx, minimum-image distances.
inline double tail(const Field& u, const Point& x0, double R) {
  const GridSpec& g = u.grid;
  if (!(R > 0.0)) throw ValidationError("tail needs R > 0");
  for (int a = 0; a < g.dim; ++a)
    if (x0[a] - R < -g.half_width || x0[a] + R > g.half_width)
      throw GeometryError("tail: B_R(x0) must lie inside the box");
  const double e = g.dim + 2.0 * g.s;
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = norm(g.periodic_delta(x0, g.position(i)));
    if (r > R) acc += std::abs(u.values[i]) / std::pow(r, e);
  }
  return (1.0 - g.s) * std::pow(R, 2.0 * g.s) * acc * g.cell_volume();
}

// ---------------------------------------------------------------- concentration

struct ConcentrationRow {
  double eps = 0.0;
  Point peak{0, 0, 0};           // x_eps in original coordinates
  double dist_to_K = 0.0;
  std::optional<Point> barycenter;  // eps Upsilon(u_eps), when a barycenter is supplied and defined
  double penalty = 0.0;
  bool penalty_zero = true;
  bool converged = false;
  double profile_step = std::numeric_limits<double>::quiet_NaN();  // L^2 distance to the previous rescaled profile
};

/// Profile u_eps(eps . + x_eps) in the rescaled frame: the solution translated so its refined peak is the origin.
inline Field rescaled_profile(const Field& u) { return shift(u, -1.0 * refined_peak(u)); }

inline std::vector<ConcentrationRow> concentration_report(const std::vector<SolveResult>& results,
                                                          const std::vector<double>& schedule, const ModelSpec& model,
                                                          const Barycenter* bary = nullptr) {
  if (results.size() > schedule.size()) throw ValidationError("concentration_report: more results than eps values");
  std::vector<ConcentrationRow> rows;
  std::optional<Field> prev;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    ConcentrationRow row;
    row.eps = schedule[i];
    row.converged = r.converged;
    row.peak = schedule[i] * refined_peak(r.field);
    row.dist_to_K = model.potential.dist_to_K ? model.potential.dist_to_K(row.peak) : 0.0;
    if (bary) {
      try {
        row.barycenter = schedule[i] * bary->upsilon(r.field);
      } catch (const OutOfTubeError&) {
        row.barycenter.reset();
      }
    }
    row.penalty = r.penalty;
    row.penalty_zero = r.penalty_zero;
    Field prof = rescaled_profile(r.field);
    if (prev) row.profile_step = l2_norm(prof - *prev);
    prev = std::move(prof);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------- sandwich

struct SandwichRow {
  double t = 1.0;
  Point p{0, 0, 0};
  double J = 0.0;
  double bound = 0.0;       // E + delta_hat at interior t, E - delta_hat at t = 1 +- sigma0
  double margin = 0.0;      // bound - J, positive when the inequality holds
  double half_margin = 0.0; // E + delta_hat / 2 - J at t = 1
  double deviation = 0.0;   // |J - g(t) E|
  bool boundary = false;
  bool passed = false;
};

struct SandwichReport {
  double E = 0.0;
  double delta_hat = 0.0;
  double sigma0 = 0.0;
  double eps = 0.0;
  std::vector<SandwichRow> rows;
  bool interior_ok = true;
  bool boundary_ok = true;
  bool consistent = true;  // min interior J - max boundary J >= 2 delta_hat whenever both pass

  bool passed() const { return interior_ok && boundary_ok; }
};

/// Admissible delta_hat is below (1 - g(1 +- sigma0)) / 2 * E for both signs.
inline double max_delta_hat(double E, double sigma0, int N, double s) {
  return 0.5 * E * std::min(1.0 - g_of(1.0 - sigma0, N, s), 1.0 - g_of(1.0 + sigma0, N, s));
}

inline SandwichReport sandwich_check(const Field& U0, const ModelSpec& model, const ProofParams& params, double eps,
                                     double E, const std::vector<std::pair<double, Point>>& samples) {
  const GridSpec& g = model.grid;
  const double sigma0 = params.sigma0;
  const double dmax = max_delta_hat(E, sigma0, g.dim, g.s);
  if (!(params.delta_hat > 0.0 && params.delta_hat < dmax))
    throw ValidationError("sandwich: delta_hat = " + std::to_string(params.delta_hat) + " is not admissible (needs < " +
                          std::to_string(dmax) + ")");
  const Functional J = Functional::eps(model, eps, params);
  SandwichReport rep{E, params.delta_hat, sigma0, eps, {}, true, true, true};
  double min_interior = std::numeric_limits<double>::infinity(), max_boundary = -min_interior;
  for (const auto& [t, p] : samples) {
    SandwichRow row;
    row.t = t;
    row.p = p;
    row.J = J.energy(phi_eps(t, p, U0, eps)).total;
    row.boundary = std::abs(std::abs(t - 1.0) - sigma0) < 1e-12;
    row.bound = row.boundary ? E - params.delta_hat : E + params.delta_hat;
    row.margin = row.bound - row.J;
    row.half_margin = E + 0.5 * params.delta_hat - row.J;
    row.deviation = std::abs(row.J - g_of(t, g.dim, g.s) * E);
    row.passed = row.margin > 0.0;
    if (row.boundary) {
      rep.boundary_ok = rep.boundary_ok && row.passed;
      max_boundary = std::max(max_boundary, row.J);
    } else if (t == 1.0) {
      rep.interior_ok = rep.interior_ok && row.passed;
      min_interior = std::min(min_interior, row.J);
    }
    rep.rows.push_back(row);
  }
  if (rep.passed() && std::isfinite(min_interior) && std::isfinite(max_boundary))
    rep.consistent = min_interior - max_boundary >= 2.0 * params.delta_hat;
  return rep;
}

// ---------------------------------------------------------------- clustering

struct ClusterOptions {
  double tol_energy = 1e-3;    // relative
  double tol_distance = 0.25;  // translation-minimized H^s distance, relative to the larger H^s norm
  double tol_location = 1.0;   // barycenter distance in the rescaled frame
  bool symmetry_quotient = false;
  Symmetry symmetry = Symmetry::none;
};

struct ClusterReport {
  std::vector<std::vector<std::size_t>> classes;
  std::vector<int> label;
  std::size_t raw_count() const { return classes.size(); }
};

/// Translation-minimized H^s distance min_y ||u - v(. - y)||.
inline double translation_distance(const Field& u, const Field& v) {
  SolutionDictionary d;
  d.grid = v.grid;
  d.entries.push_back({0.0, SolveResult{}, 0.0});
  d.entries.back().result.field = v;
  return minimal_radius(u, d);
}

/// Location used for clustering, reduced modulo the declared symmetry when the quotient is on.
inline Point quotient_location(const Point& x, Symmetry sym, bool quotient) {
  if (!quotient) return x;
  switch (sym) {
    case Symmetry::rotation: return {norm(x), 0.0, 0.0};
    case Symmetry::reflection: return {std::abs(x[0]), x[1], x[2]};
    case Symmetry::none: return x;
  }
  return x;
}

/// Partition into classes: same energy, same shape up to translation, same (quotient) location.
/// Comparisons are strict, so zero tolerances give singletons.
inline ClusterReport cluster_solutions(const std::vector<SolveResult>& results, const ClusterOptions& opts) {
  const std::size_t n = results.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = hs_norm(results[i].field);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (find(i) == find(j)) continue;
      const double Ei = results[i].energy.total, Ej = results[j].energy.total;
      const double scale = std::max({std::abs(Ei), std::abs(Ej), 1e-300});
      if (!(std::abs(Ei - Ej) < opts.tol_energy * scale)) continue;
      const Point xi = quotient_location(results[i].barycenter, opts.symmetry, opts.symmetry_quotient);
      const Point xj = quotient_location(results[j].barycenter, opts.symmetry, opts.symmetry_quotient);
      if (!(distance(xi, xj) < opts.tol_location)) continue;
      const double d = translation_distance(results[i].field, results[j].field);
      if (!(d < opts.tol_distance * std::max(norms[i], norms[j]))) continue;
      parent[find(j)] = find(i);
    }
  ClusterReport rep;
  rep.label.assign(n, -1);
  std::vector<int> root_label(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (root_label[r] < 0) {
      root_label[r] = static_cast<int>(rep.classes.size());
      rep.classes.emplace_back();
    }
    rep.label[i] = root_label[r];
    rep.classes[root_label[r]].push_back(i);
  }
  return rep;
}

// ---------------------------------------------------------------- topology table

struct TopologyBounds {
  int cupl_plus_one = 0;
  int category = 0;
};

/// cupl(K) + 1 and cat(K) for standard shapes. Cup-length counts products of classes of degree >= 1, so two
/// points have cupl = 0 while their category is 2.
inline TopologyBounds topology_bounds(ShapeKind shape, int N) {
  switch (shape) {
    case ShapeKind::point:
    case ShapeKind::contractible: return {1, 1};
    case ShapeKind::sphere: return {2, 2};
    case ShapeKind::torus:
      if (N < 1) throw ValidationError("torus dimension must be positive");
      return {N + 1, N + 1};
    case ShapeKind::two_points: return {1, 2};
  }
  throw ValidationError("unknown shape");
}

inline int cupl_plus_one(ShapeKind shape, int N = 1) { return topology_bounds(shape, N).cupl_plus_one; }

} // namespace fnls
