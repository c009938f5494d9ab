#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fnls/solvers.hpp"

namespace fnls {

struct DictionaryEntry {
  double a = 0.0;
  SolveResult result;
  double hs_norm = 0.0;

  const Field& profile() const { return result.field; }
};

/// Sampled set of almost ground states over a in [m0, m0 + nu0].
struct SolutionDictionary {
  GridSpec grid;
  std::vector<DictionaryEntry> entries;
  double r_star = 0.0;  // min H^s norm over entries
  double R0 = 0.0;      // tail restricted norm below r_star / 8 outside B_{R0}

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

/// Smallest R (to a quarter cell) with ||U||_{box minus B_R} < r_star / 8 for every profile.
inline double fit_tail_radius(const std::vector<Field>& profiles, double r_star) {
  if (profiles.empty()) throw ValidationError("fit_tail_radius: no profiles");
  const GridSpec& g = profiles.front().grid;
  auto ok = [&](double R) {
    const Region out = Region::complement(Region::ball({0, 0, 0}, R));
    for (const auto& U : profiles)
      if (!(restricted_norm(U, out) < r_star / 8.0)) return false;
    return true;
  };
  const double far = g.half_width * std::sqrt(static_cast<double>(g.dim));
  if (!ok(far)) throw NumericError("tail radius: restricted norm stays above r*/8 on the whole box");
  double lo = 0.0, hi = far;
  if (ok(lo)) return 0.0;
  while (hi - lo > 0.25 * g.spacing()) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

/// Recomputes r_star and R0 from the entries.
inline void finalize_dictionary(SolutionDictionary& d) {
  if (d.entries.empty()) throw ValidationError("empty dictionary");
  std::vector<Field> profiles;
  d.r_star = std::numeric_limits<double>::infinity();
  for (auto& e : d.entries) {
    e.hs_norm = hs_norm(e.profile());
    d.r_star = std::min(d.r_star, e.hs_norm);
    profiles.push_back(e.profile());
  }
  if (!(d.r_star > 0.0)) throw NumericError("dictionary contains a zero profile");
  d.R0 = fit_tail_radius(profiles, d.r_star);
}

/// Dictionary from already computed profiles (each recentered on the origin).
inline SolutionDictionary make_dictionary(const std::vector<std::pair<double, SolveResult>>& solved) {
  SolutionDictionary d;
  if (solved.empty()) throw ValidationError("empty dictionary");
  d.grid = solved.front().second.field.grid;
  for (const auto& [a, r] : solved) {
    require_same_grid(r.field.grid, d.grid, "make_dictionary");
    d.entries.push_back({a, r, 0.0});
    d.entries.back().result.field = recenter(r.field);
  }
  finalize_dictionary(d);
  return d;
}

/// Ground states at a = m0 + j nu0 / (n - 1). A single sample requires nu0 = 0.
inline SolutionDictionary build_dictionary(const ModelSpec& model, double nu0, int n_samples, const SolveOptions& opts,
                                           const Field& seed, int jobs = 0) {
  if (n_samples < 1) throw ValidationError("build_dictionary needs at least one sample");
  if (n_samples == 1 && nu0 != 0.0) throw ValidationError("a single dictionary sample needs nu0 = 0");
  if (!(nu0 >= 0.0)) throw ValidationError("nu0 must be nonnegative");
  const double m0 = model.potential.m0;
  std::vector<double> as(n_samples);
  for (int j = 0; j < n_samples; ++j) as[j] = n_samples == 1 ? m0 : m0 + j * nu0 / (n_samples - 1);
  SolveOptions o = opts;
  o.recenter = true;
  auto results = run_pool(as.size(), jobs, [&](std::size_t j) {
    return solve_ground_state(as[j], model, o, seed, "a=" + std::to_string(as[j]));
  });
  std::vector<std::pair<double, SolveResult>> solved;
  for (std::size_t j = 0; j < as.size(); ++j) {
    if (!results[j].converged)
      throw NumericError("dictionary sample a=" + std::to_string(as[j]) + " did not converge: " + results[j].message);
    solved.emplace_back(as[j], std::move(results[j]));
  }
  return make_dictionary(solved);
}

struct RadiusMatch {
  double value = 0.0;
  std::size_t entry = 0;
  Point shift{0, 0, 0};  // u is closest to U(. - shift)
};

namespace detail {

// Pairing scale * Re sum_k P_k conj(phase_k(y)), phase as in shift(): exp(-i xi y), cosine on Nyquist modes.
inline double shifted_pairing(const GridSpec& g, const Spectrum& P, const Point& y) {
  std::vector<std::vector<cplx>> ph(g.dim, std::vector<cplx>(g.points));
  for (int a = 0; a < g.dim; ++a)
    for (long j = 0; j < g.points; ++j) {
      const double arg = g.frequency(j) * y[a];
      ph[a][j] = g.is_nyquist(j) ? cplx(std::cos(arg), 0.0) : std::polar(1.0, arg);
    }
  const std::size_t M = g.points;
  double acc = 0.0;
  if (g.dim == 1) {
    for (std::size_t k = 0; k < M; ++k) acc += (P[k] * ph[0][k]).real();
  } else if (g.dim == 2) {
    for (std::size_t i = 0; i < M; ++i) {
      cplx row = 0.0;
      for (std::size_t j = 0; j < M; ++j) row += P[i * M + j] * ph[1][j];
      acc += (row * ph[0][i]).real();
    }
  } else {
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < M; ++j) {
        cplx row = 0.0;
        for (std::size_t l = 0; l < M; ++l) row += P[(i * M + j) * M + l] * ph[2][l];
        acc += (row * ph[0][i] * ph[1][j]).real();
      }
  }
  return acc;
}

} // namespace detail

/// rho(u) = min over entries U and translations y of ||u - U(. - y)||_{H^s}.
/// Lattice translations via one weighted correlation, then an exhaustive search of the +-2 cell window
/// around the best lattice shift at 1/subdiv cell resolution.
inline RadiusMatch minimal_radius_match(const Field& u, const SolutionDictionary& dict, int subdiv = 0) {
  if (dict.empty()) throw ValidationError("minimal_radius: empty dictionary");
  require_same_grid(u.grid, dict.grid, "minimal_radius");
  const GridSpec& g = u.grid;
  if (subdiv <= 0) subdiv = g.dim == 3 ? 2 : 8;
  const auto& w = *hs_weight(g);
  const double scale = g.cell_volume() / static_cast<double>(g.total());
  const Spectrum uh = fft::forward(u);
  double uu = 0.0;
  for (std::size_t k = 0; k < uh.size(); ++k) uu += w[k] * std::norm(uh[k]);
  uu *= scale;

  // Modes touching a Nyquist index: the only ones whose modulus a fractional shift changes.
  std::vector<std::size_t> nyq;
  for (std::size_t k = 0; k < uh.size(); ++k) {
    const auto kx = g.unflatten(k);
    for (int a = 0; a < g.dim; ++a)
      if (g.is_nyquist(kx[a])) {
        nyq.push_back(k);
        break;
      }
  }
  const long reach = 2L * subdiv;
  const double step = g.spacing() / subdiv;

  RadiusMatch best;
  best.value = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < dict.entries.size(); ++e) {
    const Spectrum Uh = fft::forward(dict.entries[e].profile());
    Spectrum P(uh.size());
    double UU = 0.0;
    for (std::size_t k = 0; k < uh.size(); ++k) {
      P[k] = w[k] * uh[k] * std::conj(Uh[k]);
      UU += w[k] * std::norm(Uh[k]);
    }
    UU *= scale;
    // forward transform of P evaluates the lattice pairing at y = -x_j
    const Spectrum c = fft::forward_complex(g, P);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < c.size(); ++j)
      if (c[j].real() > c[arg].real()) arg = j;
    const auto ix = g.unflatten(arg);
    Point y0{0, 0, 0};
    for (int a = 0; a < g.dim; ++a) y0[a] = -static_cast<double>(g.signed_mode(ix[a])) * g.spacing();

    Offset hi{0, 0, 0};
    for (int a = 0; a < g.dim; ++a) hi[a] = reach;
    for (long i0 = -hi[0]; i0 <= hi[0]; ++i0)
      for (long i1 = -hi[1]; i1 <= hi[1]; ++i1)
        for (long i2 = -hi[2]; i2 <= hi[2]; ++i2) {
          const Point y = y0 + Point{i0 * step, i1 * step, i2 * step};
          double Uy = UU;
          if (i0 % subdiv != 0 || i1 % subdiv != 0 || i2 % subdiv != 0) {
            double lost = 0.0;
            for (std::size_t k : nyq) {
              const auto kx = g.unflatten(k);
              double f = 1.0;
              for (int a = 0; a < g.dim; ++a)
                if (g.is_nyquist(kx[a])) f *= std::pow(std::cos(g.frequency(kx[a]) * y[a]), 2);
              lost += w[k] * std::norm(Uh[k]) * (1.0 - f);
            }
            Uy -= lost * scale;
          }
          const double pair = scale * detail::shifted_pairing(g, P, y);
          const double d = std::sqrt(std::max(0.0, uu + Uy - 2.0 * pair));
          if (d < best.value) {
            best.value = d;
            best.entry = e;
            best.shift = g.wrap(y);
          }
        }
  }
  return best;
}

inline double minimal_radius(const Field& u, const SolutionDictionary& dict) {
  return minimal_radius_match(u, dict).value;
}

} // namespace fnls
