#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fnls/functionals.hpp"
#include "fnls/model.hpp"
#include "fnls/spectral.hpp"

namespace fnls {

enum class StepRule { fixed, backtracking };

/// Search direction: preconditioned steepest descent, or Polak-Ribiere+ conjugate directions in the same metric.
enum class Direction { steepest, conjugate };

/// How iterates are pulled back onto the constraint set after each step.
enum class Projection {
  automatic,  // pohozaev when N > 2s, nehari otherwise
  pohozaev,   // u <- u(sigma x) with sigma = P_a(u)
  nehari,     // u <- lambda u at the maximum along the ray
};

struct SolveOptions {
  int max_iters = 3000;
  StepRule step_rule = StepRule::backtracking;
  Direction direction = Direction::steepest;
  double step = 1.0;
  double step_max = 1.3;
  double armijo = 1e-4;
  double tol_residual = 1e-6;
  double tol_pohozaev = 1e-10;  // exactness of each Pohozaev rescale
  bool precondition = true;
  double precondition_shift = 0.0;  // c in (|xi|^{2s} + c)^{-1}; 0 selects inf V
  bool recenter = true;
  Projection projection = Projection::automatic;
  double divergence_guard = -1e6;

  void validate() const {
    if (max_iters < 0) throw ValidationError("max_iters must be nonnegative");
    if (!(tol_residual > 0.0) || !(tol_pohozaev > 0.0)) throw ValidationError("tolerances must be positive");
    if (!(armijo > 0.0 && armijo <= 0.5)) throw ValidationError("Armijo constant must lie in (0, 1/2]");
    if (!(step > 0.0) || !(step_max >= step)) throw ValidationError("bad step sizes");
  }
};

struct IterateRecord {
  int iter = 0;
  double energy = 0.0;
  double residual = 0.0;
  double pohozaev = 0.0;
  double penalty = 0.0;
  double step_size = 0.0;
  int phase = 0;
};

struct SolveResult {
  Field field;
  EnergyBreakdown energy;
  double residual = 0.0;
  double pohozaev = 0.0;
  Point barycenter{0, 0, 0};
  int iterations = 0;
  bool converged = false;
  bool stagnated = false;
  std::string seed_tag;
  std::vector<IterateRecord> log;
  double negative_mass = 0.0;
  bool negative_flag = false;
  double penalty = 0.0;
  bool penalty_zero = true;
  std::string message;
};

/// Mass-weighted center of u^2, unwrapped around the maximum.
inline Point mass_center(const Field& u) {
  const GridSpec& g = u.grid;
  const Point peak = g.position(argmax(u));
  Point c{0, 0, 0};
  double w = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double m = u.values[i] * u.values[i];
    const Point d = g.periodic_delta(peak, g.position(i));
    for (int a = 0; a < g.dim; ++a) c[a] += m * d[a];
    w += m;
  }
  if (!(w > 0.0)) return peak;
  return g.wrap(peak + (1.0 / w) * c);
}

/// Pohozaev projection u <- u(x / t) with P_a(u(x / t)) = 1, secant on t.
inline Field pohozaev_project(const Field& u, double a, const Nonlinearity& nl, double tol = 1e-10,
                              double* p_out = nullptr) {
  const auto p0 = pohozaev(u, a, nl);
  if (p0.clamped || !(p0.value > 0.0))
    throw ValidationError("Pohozaev bracket inactive (P_a = 0): increase the seed amplitude");
  // P_a(u(./t)) = t P_a(u) in the continuum; the secant absorbs the discrete defect.
  double t1 = 1.0 / p0.value;
  Field v = dilate(u, t1);
  double f1 = pohozaev(v, a, nl).value - 1.0;
  double t0 = 1.0, f0 = p0.value - 1.0;
  for (int it = 0; it < 40 && std::abs(f1) > tol; ++it) {
    if (f1 == f0) break;
    const double t2 = t1 - f1 * (t1 - t0) / (f1 - f0);
    if (!(t2 > 0.0) || !std::isfinite(t2)) throw NumericError("Pohozaev projection diverged");
    t0 = t1;
    f0 = f1;
    t1 = t2;
    v = dilate(u, t1);
    f1 = pohozaev(v, a, nl).value - 1.0;
  }
  if (std::abs(f1) > tol) throw NumericError("Pohozaev projection did not reach tolerance");
  if (p_out) *p_out = f1 + 1.0;
  return v;
}

/// Gradient of P_a^{2s} = B / T with B = c (int F(u) - a/2 ||u||^2), T = ||(-Delta)^{s/2} u||^2.
/// `grad` is the L_a gradient at u, reused for (-Delta)^s u = grad - a u + f(u).
inline Field pohozaev_gradient(const Field& u, const Field& grad, double a, const Nonlinearity& nl) {
  const GridSpec& g = u.grid;
  const double c = 2.0 * g.dim / (g.dim - 2.0 * g.s);
  const double dv = g.cell_volume();
  double T = 0.0, B = 0.0;
  Field lap(g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double v = u.values[i];
    lap.values[i] = grad.values[i] - a * v + nl.f(v);
    T += v * lap.values[i];
    B += nl.F(v) - 0.5 * a * v * v;
  }
  T *= dv;
  B *= c * dv;
  Field out(g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double v = u.values[i];
    out.values[i] = c * (nl.f(v) - a * v) / T - 2.0 * B / (T * T) * lap.values[i];
  }
  return out;
}

/// Amplitude lambda with P_a(lambda u) = 1, so that the subsequent dilation stays close to the identity.
inline double pohozaev_amplitude(const Field& u, double a, const Nonlinearity& nl) {
  auto P = [&](double lam) {
    Field v = u;
    v *= lam;
    return pohozaev(v, a, nl).value;
  };
  double lo = 1.0, hi = 1.0;
  for (int it = 0; P(hi) < 1.0; ++it) {
    hi *= 2.0;
    if (it > 200) throw ValidationError("Pohozaev bracket stays inactive under amplitude scaling");
  }
  for (int it = 0; P(lo) > 1.0; ++it) {
    lo *= 0.5;
    if (it > 200) throw NumericError("Pohozaev amplitude: lower bracket not found");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (P(mid) < 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Scales u onto the Nehari set of the given functional.
inline Field nehari_project(const Field& u, const Functional& F) {
  const double lam = F.nehari_scale(u);
  Field v = u;
  v *= lam;
  return v;
}

namespace detail {

inline Field precondition(const Field& g, double shift, bool enabled) {
  if (!enabled) return g;
  const auto& sym = *cached_symbol(g.grid);
  Spectrum gh = fft::forward(g);
  for (std::size_t k = 0; k < gh.size(); ++k) gh[k] /= (sym[k] + shift);
  return fft::inverse_real(g.grid, gh);
}

struct DescentSetup {
  const Functional* F = nullptr;
  std::function<Field(const Field&)> retract;
  std::function<double(const Field&)> report_pohozaev;
  // Gradient of the constraint; when set, the direction is made tangent to its level set.
  std::function<Field(const Field&, const Field&)> constraint_gradient;
  double shift = 1.0;
};

inline SolveResult descend(const DescentSetup& S, const Field& seed, const SolveOptions& opts,
                           const std::string& tag) {
  opts.validate();
  const Functional& F = *S.F;
  SolveResult r;
  r.seed_tag = tag;
  Field u = S.retract(seed);
  auto [E, g] = F.evaluate(u);
  double tau = opts.step;
  const double round_off = 4.0 * std::numeric_limits<double>::epsilon();
  int it = 0;
  Field g_prev, pg_prev, d_prev;
  for (;; ++it) {
    const double res = dual_norm(g);
    const double P = S.report_pohozaev(u);
    r.log.push_back({it, E.total, res, P, E.penalty, it == 0 ? 0.0 : tau});
    if (res <= opts.tol_residual) {
      r.converged = true;
      break;
    }
    if (it >= opts.max_iters) {
      r.message = "iteration limit reached";
      break;
    }
    const Field pg = precondition(g, S.shift, opts.precondition);
    std::optional<Field> c, pc;
    if (S.constraint_gradient) {
      Field cg = S.constraint_gradient(u, g);
      Field p = precondition(cg, S.shift, opts.precondition);
      if (l2_inner(cg, p) > 0.0) {
        c = std::move(cg);
        pc = std::move(p);
      }
    }
    // Tangent part in the preconditioned metric: remove the component along the constraint gradient.
    const double cpc = c ? l2_inner(*c, *pc) : 1.0;
    auto tangent = [&](Field d) {
      if (c) {
        const double beta = l2_inner(*c, d) / cpc;
        for (std::size_t i = 0; i < d.size(); ++i) d.values[i] -= beta * pc->values[i];
      }
      return d;
    };
    const Field sd = tangent(-1.0 * pg);
    Field d = sd;
    bool conjugate = false;
    if (opts.direction == Direction::conjugate && !d_prev.values.empty()) {
      const double den = l2_inner(g_prev, pg_prev);
      const double beta = den > 0.0 ? std::max(0.0, (l2_inner(g, pg) - l2_inner(g_prev, pg)) / den) : 0.0;
      if (beta > 0.0) {
        Field cg = d;
        for (std::size_t i = 0; i < cg.size(); ++i) cg.values[i] += beta * d_prev.values[i];
        cg = tangent(std::move(cg));
        if (l2_inner(g, cg) < 0.0) {
          d = std::move(cg);
          conjugate = true;
        }
      }
    }
    Field v;
    EnergyBreakdown Ev;
    bool within_round_off = false;
    auto line_search = [&](const Field& dir, double slope) {
      double trial = opts.step_rule == StepRule::fixed ? opts.step : std::min(2.0 * tau, opts.step_max);
      for (int bt = 0; bt < 60; ++bt) {
        Field cand = u;
        for (std::size_t i = 0; i < cand.size(); ++i) cand.values[i] += trial * dir.values[i];
        try {
          v = S.retract(cand);
          Ev = F.energy(v);
        } catch (const NumericError&) {
          trial *= 0.5;
          continue;
        } catch (const ValidationError&) {
          trial *= 0.5;
          continue;
        }
        if (opts.step_rule == StepRule::fixed) return trial;
        const double armijo_bound = E.total + opts.armijo * trial * slope;
        if (Ev.total <= armijo_bound + round_off * std::abs(E.total)) {
          within_round_off = Ev.total > armijo_bound;
          return trial;
        }
        trial *= 0.5;
        if (trial < 1e-14) break;
      }
      return 0.0;
    };
    double slope = l2_inner(g, d);
    if (!(slope < 0.0)) {
      r.message = "direction is not a descent direction";
      break;
    }
    double trial = line_search(d, slope);
    // A conjugate direction that admits no step is dropped for steepest descent before giving up.
    if (trial == 0.0 && conjugate) {
      d = sd;
      slope = l2_inner(g, d);
      if (slope < 0.0) trial = line_search(d, slope);
    }
    if (trial == 0.0) {
      r.message = "stagnation: no Armijo step found at iteration " + std::to_string(it);
      r.stagnated = true;
      break;
    }
    if (Ev.total < opts.divergence_guard) throw NumericError("energy fell below the divergence guard");
    tau = trial;
    if (opts.direction == Direction::conjugate) {
      g_prev = g;
      pg_prev = pg;
      d_prev = d;
    }
    // A step accepted only inside the round-off slack says nothing about the scale; start over.
    if (within_round_off) {
      tau = 0.5 * opts.step;
      d_prev = Field();
    }
    u = std::move(v);
    std::tie(E, g) = F.evaluate(u);
  }
  r.iterations = it;
  r.residual = dual_norm(g);
  r.pohozaev = S.report_pohozaev(u);
  // Clip tiny negative round-off, flag genuine negative mass.
  double neg = 0.0;
  for (double v : u.values)
    if (v < 0.0) neg += v * v;
  r.negative_mass = std::sqrt(neg * u.grid.cell_volume());
  r.negative_flag = r.negative_mass > 1e-8 * l2_norm(u);
  for (double& v : u.values) v = std::max(v, -1e-10);
  if (opts.recenter) u = recenter(u);
  r.energy = F.energy(u);
  r.penalty = r.energy.penalty;
  r.penalty_zero = r.energy.penalty == 0.0;
  r.barycenter = mass_center(u);
  r.field = std::move(u);
  return r;
}

} // namespace detail

inline Projection resolve_projection(Projection p, const GridSpec& g) {
  if (p != Projection::automatic) return p;
  return g.dim > 2.0 * g.s ? Projection::pohozaev : Projection::nehari;
}

/// Least-energy solution of (-Delta)^s U + a U = f(U): descent on L_a over the Pohozaev (or Nehari) set.
inline SolveResult solve_ground_state(double a, const ModelSpec& model, const SolveOptions& opts, const Field& seed,
                                      const std::string& tag = "seed") {
  require_same_grid(seed.grid, model.grid, "solve_ground_state");
  require_finite(seed, "solve_ground_state seed");
  const Functional F = Functional::limit(model.grid, model.nonlinearity, a);
  const Projection proj = resolve_projection(opts.projection, model.grid);
  if (proj == Projection::pohozaev && !(model.grid.dim > 2.0 * model.grid.s))
    throw ValidationError("Pohozaev projection needs N > 2s");
  detail::DescentSetup S;
  S.F = &F;
  S.shift = opts.precondition_shift > 0.0 ? opts.precondition_shift : a;
  const Nonlinearity& nl = model.nonlinearity;
  if (proj == Projection::pohozaev) {
    // Phase 0: descent on {P_a = 1}. The discrete Pohozaev identity holds only up to discretization error, so
    // the constrained minimizer is not a discrete critical point; phase 1 releases the constraint and polishes
    // along Nehari rays. P_a of the result is then a measurement, not an imposed value.
    detail::DescentSetup C = S;
    const double tol_p = opts.tol_pohozaev;
    C.retract = [&, tol_p](const Field& u) { return pohozaev_project(u, a, nl, tol_p); };
    C.report_pohozaev = [&](const Field& u) { return pohozaev(u, a, nl).value; };
    C.constraint_gradient = [&](const Field& u, const Field& grad) { return pohozaev_gradient(u, grad, a, nl); };
    Field scaled = seed;
    scaled *= pohozaev_amplitude(seed, a, nl);
    SolveOptions o0 = opts;
    o0.recenter = false;
    SolveResult r0 = detail::descend(C, scaled, o0, tag);
    if (r0.converged) {
      if (opts.recenter) r0.field = recenter(r0.field);
      return r0;
    }
    S.retract = [&](const Field& u) { return nehari_project(u, F); };
    S.report_pohozaev = C.report_pohozaev;
    SolveOptions o1 = opts;
    o1.max_iters = std::max(0, opts.max_iters - r0.iterations);
    SolveResult r1 = detail::descend(S, r0.field, o1, tag);
    std::vector<IterateRecord> log = std::move(r0.log);
    for (auto rec : r1.log) {
      rec.iter += r0.iterations + 1;
      rec.phase = 1;
      log.push_back(rec);
    }
    r1.log = std::move(log);
    r1.iterations += r0.iterations + 1;
    if (!r1.converged && r1.message.empty()) r1.message = r0.message;
    return r1;
  } else {
    S.retract = [&](const Field& u) { return nehari_project(u, F); };
    const bool has_p = model.grid.dim > 2.0 * model.grid.s;
    S.report_pohozaev = [&, has_p](const Field& u) {
      return has_p ? pohozaev(u, a, nl).value : std::numeric_limits<double>::quiet_NaN();
    };
  }
  return detail::descend(S, seed, opts, tag);
}

/// Critical point of J_eps near the seed: Nehari-retracted preconditioned descent.
inline SolveResult solve_penalized(double eps, const Field& seed, const ModelSpec& model, const ProofParams& params,
                                   const SolveOptions& opts, const std::string& tag = "seed") {
  require_same_grid(seed.grid, model.grid, "solve_penalized");
  require_finite(seed, "solve_penalized seed");
  const Functional F = Functional::eps(model, eps, params);
  detail::DescentSetup S;
  S.F = &F;
  S.shift = opts.precondition_shift > 0.0 ? opts.precondition_shift : model.potential.v_min;
  S.retract = [&](const Field& u) { return nehari_project(u, F); };
  const bool has_p = model.grid.dim > 2.0 * model.grid.s;
  const double m0 = model.potential.m0;
  S.report_pohozaev = [&, has_p, m0](const Field& u) {
    return has_p ? pohozaev(u, m0, model.nonlinearity).value : std::numeric_limits<double>::quiet_NaN();
  };
  SolveOptions o = opts;
  o.recenter = false;  // the location is the observable here
  return detail::descend(S, seed, o, tag);
}

/// Independent solves over a worker pool; results in input order. Per-seed failures are recorded, not rethrown.
inline std::vector<SolveResult> run_pool(std::size_t n, int jobs, const std::function<SolveResult(std::size_t)>& task) {
  std::vector<SolveResult> out(n);
  if (n == 0) return out;
  const int workers = std::max(1, std::min<int>(jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency()),
                                                static_cast<int>(n)));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = task(i);
      } catch (const std::exception& e) {
        out[i].converged = false;
        out[i].message = e.what();
      }
    }
  };
  if (workers == 1) {
    work();
    return out;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return out;
}

inline std::vector<SolveResult> multistart(double eps, const std::vector<Field>& seeds,
                                           const std::vector<std::string>& tags, const ModelSpec& model,
                                           const ProofParams& params, const SolveOptions& opts, int jobs = 0) {
  return run_pool(seeds.size(), jobs, [&](std::size_t i) {
    auto r = solve_penalized(eps, seeds[i], model, params, opts, i < tags.size() ? tags[i] : "seed");
    return r;
  });
}

/// Position of the maximum in original coordinates is kept fixed between frames: the profile is translated.
inline Field reframe(const Field& u, double eps_old, double eps_new) {
  const Point peak = refined_peak(u);
  const Point target = (eps_old / eps_new) * peak;
  return shift(u, target - peak);
}

/// Successive penalized solves over a decreasing schedule, each seeded by the previous one.
inline std::vector<SolveResult> continuation(const std::vector<double>& schedule, const Field& seed,
                                             const ModelSpec& model, const ProofParams& params,
                                             const SolveOptions& opts) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0)) throw ValidationError("eps schedule must be positive");
    if (i > 0 && !(schedule[i] < schedule[i - 1])) throw ValidationError("eps schedule must strictly decrease");
  }
  std::vector<SolveResult> out;
  Field current = seed;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (i > 0) current = reframe(out.back().field, schedule[i - 1], schedule[i]);
    SolveResult r;
    try {
      r = solve_penalized(schedule[i], current, model, params, opts, "eps=" + std::to_string(schedule[i]));
    } catch (const std::exception& e) {
      r.converged = false;
      r.message = std::string("continuation stopped: ") + e.what();
      out.push_back(std::move(r));
      break;
    }
    out.push_back(std::move(r));
    if (!out.back().converged) break;
  }
  return out;
}

/// Gaussian bump, the default seed shape.
inline Field gaussian_seed(const GridSpec& g, double amplitude, double width, const Point& center = {0, 0, 0}) {
  return Field::from_function(g, [&](const Point& x) {
    const double r = distance(x, center);
    return amplitude * std::exp(-r * r / (width * width));
  });
}

} // namespace fnls
