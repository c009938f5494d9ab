#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fnls/model.hpp"
#include "fnls/spectral.hpp"

namespace fnls {

struct EnergyBreakdown {
  double kinetic = 0.0;         // 1/2 ||(-Delta)^{s/2} u||^2
  double mass = 0.0;            // 1/2 int V u^2
  double potential_term = 0.0;  // int F(u)
  double penalty = 0.0;
  double total = 0.0;
};

/// User-supplied proof constants. Their existence is all the theory provides.
struct ProofParams {
  double nu0 = 0.2;
  double nu1 = 0.1;
  double delta_hat = 0.0;
  double sigma0 = 0.3;
  double rho0 = 0.2;
  double rho1 = 0.1;
  double alpha = 0.25;
  double h0 = 0.25;
  double R0 = 0.0;
  double r_star = 0.0;
  double l0 = 0.0;
  double l0_prime = 0.0;

  void validate(double s) const {
    if (!(0.0 < nu1 && nu1 < nu0)) throw ValidationError("need 0 < nu1 < nu0");
    if (!(0.0 < rho1 && rho1 < rho0)) throw ValidationError("need 0 < rho1 < rho0");
    if (!(0.0 < alpha && alpha < std::min(0.5, s))) throw ValidationError("need 0 < alpha < min(1/2, s)");
    if (!(0.0 < sigma0 && sigma0 < 1.0)) throw ValidationError("need sigma0 in (0, 1)");
    if (!(h0 > 0.0)) throw ValidationError("need h0 > 0");
  }

  std::map<std::string, double> as_map() const {
    return {{"nu0", nu0},     {"nu1", nu1},   {"delta_hat", delta_hat}, {"sigma0", sigma0},
            {"rho0", rho0},   {"rho1", rho1}, {"alpha", alpha},         {"h0", h0},
            {"R0", R0},       {"r_star", r_star}, {"l0", l0},           {"l0_prime", l0_prime}};
  }

  void set(const std::string& key, double v) {
    if (key == "nu0") nu0 = v;
    else if (key == "nu1") nu1 = v;
    else if (key == "delta_hat") delta_hat = v;
    else if (key == "sigma0") sigma0 = v;
    else if (key == "rho0") rho0 = v;
    else if (key == "rho1") rho1 = v;
    else if (key == "alpha") alpha = v;
    else if (key == "h0") h0 = v;
    else if (key == "R0") R0 = v;
    else if (key == "r_star") r_star = v;
    else if (key == "l0") l0 = v;
    else if (key == "l0_prime") l0_prime = v;
    else throw FormatError("unknown proof parameter: " + key);
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    for (const auto& [k, v] : as_map()) os << k << " = " << v << "\n";
    return os.str();
  }

  static ProofParams parse(const std::string& text) {
    ProofParams p;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
      if (eq == std::string::npos) throw FormatError("expected key = value: " + line);
      const std::string key = detail::trim(line.substr(0, eq));
      try {
        p.set(key, std::stod(line.substr(eq + 1)));
      } catch (const std::invalid_argument&) {
        throw FormatError("bad number for " + key);
      }
    }
    return p;
  }
};

/// Warning text when l0 is outside (E_{m0+nu0}, 2 E_{m0}); empty when the bracket holds.
inline std::string check_l0(double l0, double E_top, double E_m0) {
  if (l0 > E_top && l0 < 2.0 * E_m0) return "";
  std::ostringstream os;
  os << "l0=" << l0 << " outside (" << E_top << ", " << 2.0 * E_m0 << ")";
  return os.str();
}

/// g(t) = (N t^{N-2s} - (N-2s) t^N) / (2s).
inline double g_of(double t, int N, double s) {
  if (t == 1.0) return 1.0;
  return (N * std::pow(t, N - 2.0 * s) - (N - 2.0 * s) * std::pow(t, N)) / (2.0 * s);
}

/// Pohozaev value with a flag telling clamped zeros from genuine ones.
struct PohozaevValue {
  double value = 0.0;
  bool clamped = false;
  operator double() const { return value; }
};

/// Region outside Omega_{2h0}/eps, checked against the box.
inline Region penalty_outside_region(const PotentialSpec& pot, double h0, double eps, const GridSpec& g) {
  if (pot.constant()) return Region::complement(Region::whole());
  const Region scaled = pot.omega.dilated(2.0 * h0).scaled(1.0 / eps);
  if (!(scaled.bounding_radius() < g.half_width))
    throw GeometryError("scaled well Omega_{2h0}/eps exceeds the box: enlarge L or increase eps");
  if (scaled.count(g) == 0) throw GeometryError("scaled well contains no grid point: refine the grid");
  return Region::complement(scaled);
}

/// Energy functional of the form 1/2 T + 1/2 int W u^2 - int F(u) + Q(u), W sampled on the grid.
class Functional {
public:
  /// Limiting functional L_a.
  static Functional limit(const GridSpec& g, const Nonlinearity& nl, double a) {
    if (!(a > 0.0)) throw ValidationError("limit functional needs a > 0");
    Functional F(g, nl);
    F.constant_ = a;
    return F;
  }

  /// I_eps, optionally with the penalization Q_eps added (J_eps).
  static Functional eps(const ModelSpec& m, double eps, std::optional<ProofParams> params = std::nullopt) {
    if (!(eps > 0.0)) throw ValidationError("need eps > 0");
    Functional F(m.grid, m.nonlinearity);
    if (m.potential.constant()) {
      F.constant_ = m.potential.m0;
    } else {
      F.weight_ = potential_field(m.potential, m.grid, eps).values;
    }
    if (params) {
      F.penalized_ = true;
      F.alpha_ = params->alpha;
      F.eps_ = eps;
      F.out_mask_ = penalty_outside_region(m.potential, params->h0, eps, m.grid).mask(m.grid);
    }
    return F;
  }

  const GridSpec& grid() const { return grid_; }
  const Nonlinearity& nonlinearity() const { return nl_; }
  bool penalized() const { return penalized_; }
  const std::vector<unsigned char>& outside_mask() const { return out_mask_; }
  double weight(std::size_t i) const { return weight_.empty() ? constant_ : weight_[i]; }
  std::optional<double> constant_weight() const {
    return weight_.empty() ? std::optional<double>(constant_) : std::nullopt;
  }

  /// L^2 mass outside Omega_{2h0}/eps.
  double outside_mass(const Field& u) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (out_mask_[i]) acc += u.values[i] * u.values[i];
    return acc * grid_.cell_volume();
  }

  double penalty(const Field& u) const {
    if (!penalized_) return 0.0;
    const double x = outside_mass(u) / std::pow(eps_, alpha_) - 1.0;
    return x > 0.0 ? std::pow(x, 0.5 * (nl_.p() + 1.0)) : 0.0;
  }

  Field penalty_gradient(const Field& u) const {
    Field g(grid_);
    if (!penalized_) return g;
    const double x = outside_mass(u) / std::pow(eps_, alpha_) - 1.0;
    if (!(x > 0.0)) return g;
    const double c = (nl_.p() + 1.0) / std::pow(eps_, alpha_) * std::pow(x, 0.5 * (nl_.p() - 1.0));
    for (std::size_t i = 0; i < u.size(); ++i)
      if (out_mask_[i]) g.values[i] = c * u.values[i];
    return g;
  }

  /// lambda > 0 with d/dlambda F(lambda u) = 0, the maximum along the ray through u.
  double nehari_scale(const Field& u) const {
    const double dv = grid_.cell_volume();
    const double T = spectral_quadratic(u, *symbol_);
    double wm = 0.0, up = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      wm += weight(i) * u.values[i] * u.values[i];
      if (u.values[i] > 0.0) up += std::pow(u.values[i], nl_.p() + 1.0);
    }
    const double quad = T + wm * dv;
    const double m_out = penalized_ ? outside_mass(u) : 0.0;
    const double ea = std::pow(eps_, alpha_);
    // h(lambda) = d/dlambda F(lambda u) / lambda changes sign from + to - at the ray maximum.
    auto h = [&](double lam) {
      double nonlin = 0.0;
      for (double v : u.values)
        if (v > 0.0) nonlin += nl_.f(lam * v) * v;
      double r = quad - nonlin * dv / lam;
      if (penalized_) {
        const double x = lam * lam * m_out / ea - 1.0;
        if (x > 0.0) r += (nl_.p() + 1.0) / ea * std::pow(x, 0.5 * (nl_.p() - 1.0)) * m_out;
      }
      return r;
    };
    if (!(up > 0.0)) throw ValidationError("ray through the seed has no maximum: the seed has no positive part");
    double guess = std::pow(quad / (up * dv), 1.0 / (nl_.p() - 1.0));
    if (!std::isfinite(guess) || !(guess > 0.0)) guess = 1.0;
    if (nl_.homogeneous() && (!penalized_ || guess * guess * m_out <= ea)) return guess;
    double lo = guess, hi = guess;
    int expand = 0;
    while (h(lo) <= 0.0) {
      lo *= 0.5;
      if (++expand > 200) throw NumericError("ray maximum: lower bracket not found");
    }
    expand = 0;
    while (h(hi) > 0.0) {
      hi *= 2.0;
      if (++expand > 200) throw ValidationError("ray through the seed has no maximum");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (h(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  EnergyBreakdown energy(const Field& u) const {
    require_same_grid(u.grid, grid_, "energy");
    require_finite(u, "energy");
    EnergyBreakdown e;
    e.kinetic = 0.5 * spectral_quadratic(u, *symbol_);
    const double dv = grid_.cell_volume();
    double m = 0.0, f = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double v = u.values[i];
      m += weight(i) * v * v;
      f += nl_.F(v);
    }
    e.mass = 0.5 * m * dv;
    e.potential_term = f * dv;
    e.penalty = penalty(u);
    e.total = e.kinetic + e.mass - e.potential_term + e.penalty;
    if (!std::isfinite(e.total)) throw NumericError("energy is not finite");
    return e;
  }

  /// L^2 gradient (-Delta)^s u + W u - f(u) (+ Q'(u)).
  Field gradient(const Field& u) const {
    require_same_grid(u.grid, grid_, "gradient");
    Field g = apply_symbol(u, *symbol_);
    for (std::size_t i = 0; i < u.size(); ++i) g.values[i] += weight(i) * u.values[i] - nl_.f(u.values[i]);
    if (penalized_) g += penalty_gradient(u);
    require_finite(g, "gradient");
    return g;
  }

  /// Energy and gradient sharing one forward transform.
  std::pair<EnergyBreakdown, Field> evaluate(const Field& u) const {
    require_same_grid(u.grid, grid_, "evaluate");
    require_finite(u, "evaluate");
    Spectrum uh = fft::forward(u);
    const auto& sym = *symbol_;
    double kin = 0.0;
    for (std::size_t k = 0; k < uh.size(); ++k) {
      kin += sym[k] * std::norm(uh[k]);
      uh[k] *= sym[k];
    }
    Field g = fft::inverse_real(grid_, uh);
    EnergyBreakdown e;
    const double dv = grid_.cell_volume();
    e.kinetic = 0.5 * kin * dv / static_cast<double>(u.size());
    double m = 0.0, f = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double v = u.values[i];
      const double w = weight(i);
      m += w * v * v;
      f += nl_.F(v);
      g.values[i] += w * v - nl_.f(v);
    }
    e.mass = 0.5 * m * dv;
    e.potential_term = f * dv;
    e.penalty = penalty(u);
    if (penalized_) g += penalty_gradient(u);
    e.total = e.kinetic + e.mass - e.potential_term + e.penalty;
    if (!std::isfinite(e.total)) throw NumericError("energy is not finite");
    require_finite(g, "gradient");
    return {e, std::move(g)};
  }

private:
  Functional(const GridSpec& g, const Nonlinearity& nl) : grid_(g), nl_(nl), symbol_(cached_symbol(g)) {
    g.validate();
  }

  GridSpec grid_;
  Nonlinearity nl_;
  std::shared_ptr<const std::vector<double>> symbol_;
  double constant_ = 1.0;
  std::vector<double> weight_;
  bool penalized_ = false;
  double alpha_ = 0.25;
  double eps_ = 1.0;
  std::vector<unsigned char> out_mask_;
};

/// L_a(u) = 1/2 ||(-Delta)^{s/2} u||^2 + a/2 ||u||^2 - int F(u).
inline EnergyBreakdown energy_limit(const Field& u, double a, const Nonlinearity& nl) {
  return Functional::limit(u.grid, nl, a).energy(u);
}

inline Field grad_energy_limit(const Field& u, double a, const Nonlinearity& nl) {
  return Functional::limit(u.grid, nl, a).gradient(u);
}

/// P_a(u) = ((2N / (N - 2s)) (int F(u) - a/2 ||u||^2) / ||(-Delta)^{s/2} u||^2)_+^{1/(2s)}.
inline PohozaevValue pohozaev(const Field& u, double a, const Nonlinearity& nl) {
  const GridSpec& g = u.grid;
  if (!(g.dim > 2.0 * g.s)) throw ValidationError("Pohozaev functional needs N > 2s");
  const double T = 2.0 * Functional::limit(g, nl, a).energy(u).kinetic;
  double m = 0.0, f = 0.0;
  for (double v : u.values) {
    m += v * v;
    f += nl.F(v);
  }
  if (m == 0.0) throw NumericError("Pohozaev functional of the zero field");
  if (T < 1e-14) throw NumericError("Pohozaev functional: kinetic term below 1e-14");
  const double dv = g.cell_volume();
  const double bracket = 2.0 * g.dim / (g.dim - 2.0 * g.s) * (f * dv - 0.5 * a * m * dv) / T;
  if (!(bracket > 0.0)) return {0.0, true};
  return {std::pow(bracket, 1.0 / (2.0 * g.s)), false};
}

inline EnergyBreakdown energy_eps(const Field& u, double eps, const ModelSpec& m) {
  return Functional::eps(m, eps).energy(u);
}

inline Field grad_energy_eps(const Field& u, double eps, const ModelSpec& m) {
  return Functional::eps(m, eps).gradient(u);
}

/// Q_eps(u) = ((1/eps^alpha) ||u||^2_{L^2(outside Omega_{2h0}/eps)} - 1)_+^{(p+1)/2}.
inline double penalty(const Field& u, double eps, const ProofParams& params, const ModelSpec& m) {
  return Functional::eps(m, eps, params).penalty(u);
}

inline Field grad_penalty(const Field& u, double eps, const ProofParams& params, const ModelSpec& m) {
  return Functional::eps(m, eps, params).penalty_gradient(u);
}

/// J_eps = I_eps + Q_eps.
inline EnergyBreakdown energy_penalized(const Field& u, double eps, const ProofParams& params, const ModelSpec& m) {
  return Functional::eps(m, eps, params).energy(u);
}

inline Field grad_energy_penalized(const Field& u, double eps, const ProofParams& params, const ModelSpec& m) {
  return Functional::eps(m, eps, params).gradient(u);
}

/// C_min = (m0 - inf V) / 2.
inline double c_min(const PotentialSpec& pot) { return 0.5 * (pot.m0 - pot.v_min); }

/// Dual norm sqrt(dv / M^N sum |gh|^2 / (1 + |xi|^{2s})) of an L^2 gradient.
inline double dual_norm(const Field& grad) {
  const auto& sym = *cached_symbol(grad.grid);
  const Spectrum gh = fft::forward(grad);
  double acc = 0.0;
  for (std::size_t k = 0; k < gh.size(); ++k) acc += std::norm(gh[k]) / (1.0 + sym[k]);
  return std::sqrt(acc * grad.grid.cell_volume() / static_cast<double>(grad.size()));
}

} // namespace fnls
