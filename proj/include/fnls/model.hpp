#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fnls/errors.hpp"
#include "fnls/grid.hpp"

namespace fnls {

/// 2N / (N - 2s). Requires N > 2s.
inline double sobolev_critical(int N, double s) {
  if (!(N > 2.0 * s)) throw ValidationError("Sobolev critical exponent needs N > 2s");
  return 2.0 * N / (N - 2.0 * s);
}

/// Upper end of the admissible growth range: 2*_s - 1, or +inf when N <= 2s.
inline double max_subcritical_power(int N, double s) {
  if (!(N > 2.0 * s)) return std::numeric_limits<double>::infinity();
  return sobolev_critical(N, s) - 1.0;
}

/// Nonlinearity f with primitive F. Every evaluator returns 0 for t <= 0.
class Nonlinearity {
public:
  enum class Kind { power, tabulated, custom };

  static Nonlinearity power(double p, double t0 = 10.0) {
    if (!(p > 0.0)) throw ValidationError("power nonlinearity needs p > 0");
    Nonlinearity n;
    n.kind_ = Kind::power;
    n.p_ = p;
    n.t0_ = t0;
    return n;
  }

  /// Piecewise-linear f through (t_i, f_i), t_i >= 0 increasing, linear from the origin below the first node
  /// and continued as f_n (t / t_n)^p beyond the last one.
  static Nonlinearity tabulated(std::vector<double> t, std::vector<double> f, double p, double t0) {
    if (t.size() != f.size() || t.size() < 2) throw ValidationError("table needs at least two (t, f) rows");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!std::isfinite(t[i]) || !std::isfinite(f[i])) throw ValidationError("table contains non-finite values");
      if (t[i] < 0.0) throw ValidationError("table abscissae must be nonnegative");
      if (i > 0 && !(t[i] > t[i - 1])) throw ValidationError("table abscissae must be strictly increasing");
    }
    if (t.front() == 0.0 && f.front() != 0.0) throw ValidationError("tabulated f must vanish at 0");
    Nonlinearity n;
    n.kind_ = Kind::tabulated;
    n.p_ = p;
    n.t0_ = t0;
    if (t.front() > 0.0) {
      t.insert(t.begin(), 0.0);
      f.insert(f.begin(), 0.0);
    }
    n.tt_ = std::move(t);
    n.tf_ = std::move(f);
    n.tF_.assign(n.tt_.size(), 0.0);
    for (std::size_t i = 1; i < n.tt_.size(); ++i)
      n.tF_[i] = n.tF_[i - 1] + 0.5 * (n.tf_[i] + n.tf_[i - 1]) * (n.tt_[i] - n.tt_[i - 1]);
    return n;
  }

  /// Two-column CSV (t, f); an optional non-numeric header line is skipped.
  static Nonlinearity from_csv(const std::string& path, double p, double t0) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open nonlinearity table: " + path);
    std::vector<double> t, f;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      double a, b;
      if (!(ss >> a >> b)) {
        if (first) {
          first = false;
          continue;
        }
        throw FormatError("bad row in nonlinearity table: " + line);
      }
      first = false;
      t.push_back(a);
      f.push_back(b);
    }
    auto n = tabulated(std::move(t), std::move(f), p, t0);
    n.source_ = path;
    return n;
  }

  /// User evaluators; clamping to t > 0 is applied around them.
  static Nonlinearity custom(std::function<double(double)> f, std::function<double(double)> F, double p, double t0) {
    Nonlinearity n;
    n.kind_ = Kind::custom;
    n.p_ = p;
    n.t0_ = t0;
    n.cf_ = std::move(f);
    n.cF_ = std::move(F);
    return n;
  }

  Kind kind() const { return kind_; }
  double p() const { return p_; }
  double t0() const { return t0_; }
  const std::string& source() const { return source_; }
  const std::vector<double>& table_t() const { return tt_; }
  const std::vector<double>& table_f() const { return tf_; }

  double f(double t) const {
    if (!(t > 0.0)) return 0.0;
    switch (kind_) {
      case Kind::power: return std::pow(t, p_);
      case Kind::tabulated: {
        const std::size_t n = tt_.size();
        if (t >= tt_[n - 1]) return tf_[n - 1] * std::pow(t / tt_[n - 1], p_);
        const std::size_t i = locate(t);
        const double w = (t - tt_[i]) / (tt_[i + 1] - tt_[i]);
        return tf_[i] + w * (tf_[i + 1] - tf_[i]);
      }
      case Kind::custom: return cf_(t);
    }
    return 0.0;
  }

  double F(double t) const {
    if (!(t > 0.0)) return 0.0;
    switch (kind_) {
      case Kind::power: return std::pow(t, p_ + 1.0) / (p_ + 1.0);
      case Kind::tabulated: {
        const std::size_t n = tt_.size();
        if (t >= tt_[n - 1]) {
          const double tn = tt_[n - 1];
          return tF_[n - 1] + tf_[n - 1] * tn / (p_ + 1.0) * (std::pow(t / tn, p_ + 1.0) - 1.0);
        }
        const std::size_t i = locate(t);
        const double d = t - tt_[i];
        const double slope = (tf_[i + 1] - tf_[i]) / (tt_[i + 1] - tt_[i]);
        return tF_[i] + tf_[i] * d + 0.5 * slope * d * d;
      }
      case Kind::custom: return cF_(t);
    }
    return 0.0;
  }

  /// True when f(lambda t) = lambda^p f(t) holds exactly.
  bool homogeneous() const { return kind_ == Kind::power; }

private:
  std::size_t locate(double t) const {
    auto it = std::upper_bound(tt_.begin(), tt_.end(), t);
    return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - tt_.begin()) - 1));
  }

  Kind kind_ = Kind::power;
  double p_ = 3.0;
  double t0_ = 10.0;
  std::vector<double> tt_, tf_, tF_;
  std::function<double(double)> cf_, cF_;
  std::string source_;
};

/// Outcome of one sampled check.
struct CheckItem {
  std::string name;
  bool passed = false;
  double value = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckItem> items;

  bool passed() const {
    return std::all_of(items.begin(), items.end(), [](const CheckItem& c) { return c.passed; });
  }
  const CheckItem* find(const std::string& name) const {
    for (const auto& c : items)
      if (c.name == name) return &c;
    return nullptr;
  }
  bool passed(const std::string& name) const {
    const auto* c = find(name);
    return c && c->passed;
  }
  std::string failures() const {
    std::string out;
    for (const auto& c : items)
      if (!c.passed) out += (out.empty() ? "" : "; ") + c.name + ": " + c.detail;
    return out;
  }
};

/// Sampling tolerances for the nonlinearity checks.
struct NonlinearityChecks {
  double continuity_tol = 1e-6;
  double vanishing_ratio = 0.5;  // last / first sampled quotient must fall below this
  double holder_growth = 1.5;    // allowed growth of the Hoelder quotient under refinement
  double sample_max = 10.0;
};

inline ValidationReport validate_nonlinearity(const Nonlinearity& nl, double a, int N, double s,
                                              const NonlinearityChecks& tol = {}) {
  if (!(a > 0.0)) throw ValidationError("validate_nonlinearity needs a > 0");
  ValidationReport rep;
  auto finite_or_throw = [](double v) {
    if (!std::isfinite(v)) throw NumericError("nonlinearity evaluator returned a non-finite value");
    return v;
  };

  {
    // (f1.1) continuity: compare values across tiny separations on a lattice.
    double fmax = 0.0, jump = 0.0;
    const int n = 20000;
    for (int i = 0; i <= n; ++i) {
      const double t = -tol.sample_max + 2.0 * tol.sample_max * i / n;
      const double step = 1e-9 * std::max(1.0, std::abs(t));
      const double v0 = finite_or_throw(nl.f(t)), v1 = finite_or_throw(nl.f(t + step));
      fmax = std::max(fmax, std::abs(v0));
      jump = std::max(jump, std::abs(v1 - v0));
    }
    const bool ok = jump <= tol.continuity_tol * (1.0 + fmax);
    rep.items.push_back({"f1.1", ok, jump, ok ? "no jumps detected" : "discontinuity detected on sample"});
  }
  {
    // (f1.2) f(t)/t -> 0 as t -> 0+.
    std::vector<double> r;
    for (int k = 1; k <= 8; ++k) {
      const double t = std::pow(10.0, -k);
      r.push_back(std::abs(finite_or_throw(nl.f(t))) / t);
    }
    const bool ok = r.back() <= 1e-12 || r.back() <= tol.vanishing_ratio * r.front();
    std::ostringstream os;
    os << "f(t)/t at t=1e-1: " << r.front() << ", at t=1e-8: " << r.back();
    rep.items.push_back({"f1.2", ok, r.back(), os.str()});
  }
  {
    // (f1.3) 1 < p < 2*_s - 1 and f(t)/t^p' -> 0 for some admissible p' above p.
    const double pmax = max_subcritical_power(N, s);
    const double p = nl.p();
    bool ok = p > 1.0 && p < pmax;
    std::ostringstream os;
    if (!ok) {
      os << "growth exponent p=" << p << " outside (1, " << pmax << ")";
    } else {
      const double pp = std::isfinite(pmax) ? 0.5 * (p + pmax) : p + 1.0;
      std::vector<double> q;
      for (int k = 0; k <= 6; ++k) {
        const double t = std::pow(10.0, k);
        q.push_back(std::abs(finite_or_throw(nl.f(t))) / std::pow(t, pp));
      }
      const double qmax = *std::max_element(q.begin(), q.end());
      ok = q.back() <= 1e-12 || q.back() <= tol.vanishing_ratio * qmax;
      os << "f(t)/t^" << pp << " at t=1e6: " << q.back();
    }
    rep.items.push_back({"f1.3", ok, p, os.str()});
  }
  {
    const double t0 = nl.t0();
    const double lhs = finite_or_throw(nl.F(t0)), rhs = 0.5 * a * t0 * t0;
    const bool ok = t0 > 0.0 && lhs > rhs;
    std::ostringstream os;
    os << "F(t0)=" << lhs << " vs a t0^2/2=" << rhs;
    rep.items.push_back({"f1.4", ok, lhs - rhs, os.str()});
  }
  {
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double t = -tol.sample_max * i / 1000.0;
      worst = std::max({worst, std::abs(nl.f(t)), std::abs(nl.F(t))});
    }
    const bool ok = worst == 0.0;
    rep.items.push_back({"f2", ok, worst, ok ? "f and F vanish for t <= 0" : "nonzero values for t <= 0"});
  }
  if (s <= 0.5) {
    // (f3) sampled Hoelder quotient with gamma in the middle of (1 - 2s, 1).
    const double gamma = 0.5 * ((1.0 - 2.0 * s) + 1.0);
    auto quotient = [&](double delta) {
      double q = 0.0;
      const int n = 4000;
      for (int i = 0; i <= n; ++i) {
        const double t = -tol.sample_max + 2.0 * tol.sample_max * i / n;
        q = std::max(q, std::abs(nl.f(t + delta) - nl.f(t)) / std::pow(delta, gamma));
      }
      return q;
    };
    const double coarse = quotient(1e-3), fine = quotient(1e-6);
    const bool ok = std::isfinite(fine) && fine <= tol.holder_growth * std::max(coarse, 1e-300);
    std::ostringstream os;
    os << "gamma=" << gamma << " quotient " << coarse << " -> " << fine;
    rep.items.push_back({"f3", ok, fine, os.str()});
  }
  return rep;
}

/// Smallest C with |f(t)| <= beta |t| + C |t|^q on a logarithmic sample.
inline double growth_bound_check(const Nonlinearity& nl, double beta, double q, double t_max = 1e6) {
  if (!(beta > 0.0)) throw ValidationError("growth_bound_check needs beta > 0");
  if (!(q >= nl.p())) throw ValidationError("growth_bound_check needs q >= p");
  const int per_decade = 200;
  const double t_min = 1e-6;
  const int n = static_cast<int>(std::ceil(std::log10(t_max / t_min) * per_decade));
  double best = 0.0, at_top = 0.0, at_tenth = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = t_min * std::pow(10.0, static_cast<double>(i) / per_decade);
    const double v = std::abs(nl.f(t));
    if (!std::isfinite(v)) throw NumericError("growth_bound_check: non-finite f");
    const double c = std::max(0.0, v - beta * t) / std::pow(t, q);
    best = std::max(best, c);
    if (i == n) at_top = c;
    if (i == n - per_decade) at_tenth = c;
  }
  if (at_top > 0.0 && at_top > 1.5 * at_tenth) throw NumericError("growth quotient diverges: (f1.3) violated");
  return best;
}

enum class Symmetry { none, rotation, reflection };
enum class ShapeKind { point, contractible, sphere, torus, two_points };

inline std::string to_string(Symmetry s) {
  switch (s) {
    case Symmetry::none: return "none";
    case Symmetry::rotation: return "rotation";
    case Symmetry::reflection: return "reflection";
  }
  return "none";
}

inline Symmetry parse_symmetry(const std::string& s) {
  if (s == "none") return Symmetry::none;
  if (s == "rotation") return Symmetry::rotation;
  if (s == "reflection") return Symmetry::reflection;
  throw FormatError("unknown symmetry: " + s);
}

/// Bounded positive potential with a well: Omega, m0 = inf_Omega V, minimizer set K, margin h0.
struct PotentialSpec {
  std::string kind = "constant";
  std::map<std::string, double> params;
  std::function<double(const Point&)> V;
  std::function<double(const Point&)> dist_to_K;
  double v_min = 1.0;
  double v_max = 1.0;
  double m0 = 1.0;
  double h0 = 0.1;
  Region omega = Region::whole();
  std::vector<Point> K;
  ShapeKind shape = ShapeKind::point;
  Symmetry symmetry = Symmetry::none;

  double operator()(const Point& x) const { return V(x); }
  bool constant() const { return kind == "constant"; }
};

inline PotentialSpec make_constant_potential(double m0) {
  if (!(m0 > 0.0)) throw ValidationError("potential level must be positive");
  PotentialSpec p;
  p.kind = "constant";
  p.params = {{"m0", m0}};
  p.V = [m0](const Point&) { return m0; };
  p.dist_to_K = [](const Point&) { return 0.0; };
  p.v_min = p.v_max = p.m0 = m0;
  p.h0 = 0.0;
  p.omega = Region::whole();
  p.shape = ShapeKind::contractible;
  p.symmetry = Symmetry::none;
  return p;
}

/// V = m0 + depth min(1, (|x| - radius)^2 / width^2), capped. K is the sphere |x| = radius.
inline PotentialSpec make_ring_potential(double m0, double depth, double radius, double cap, int dim = 2,
                                         double width = 1.0, double h0 = 0.25, int k_samples = 64) {
  if (!(m0 > 0.0) || !(depth > 0.0)) throw ValidationError("ring potential needs m0 > 0 and depth > 0");
  if (!(cap >= m0 + depth)) throw ValidationError("ring potential needs cap >= m0 + depth");
  if (!(radius > 0.0) || !(width > 0.0)) throw ValidationError("ring potential needs positive radius and width");
  PotentialSpec p;
  p.kind = "ring";
  p.params = {{"m0", m0}, {"depth", depth}, {"radius", radius}, {"cap", cap}, {"width", width}, {"h0", h0}};
  p.V = [=](const Point& x) {
    const double d = norm(x) - radius;
    return std::min(cap, m0 + depth * std::min(1.0, d * d / (width * width)));
  };
  p.dist_to_K = [=](const Point& x) { return std::abs(norm(x) - radius); };
  p.v_min = m0;
  p.v_max = m0 + depth;
  p.m0 = m0;
  p.h0 = h0;
  const double half = width / std::sqrt(2.0);
  p.omega = radius > half ? Region::annulus({0, 0, 0}, radius - half, radius + half)
                          : Region::ball({0, 0, 0}, radius + half);
  if (dim == 1) {
    p.K = {{radius, 0, 0}, {-radius, 0, 0}};
    p.shape = ShapeKind::two_points;
    p.symmetry = Symmetry::reflection;
  } else if (dim == 2) {
    for (int i = 0; i < k_samples; ++i) {
      const double t = 2.0 * std::numbers::pi * i / k_samples;
      p.K.push_back({radius * std::cos(t), radius * std::sin(t), 0});
    }
    p.shape = ShapeKind::sphere;
    p.symmetry = Symmetry::rotation;
  } else {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < k_samples; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / k_samples;
      const double r = std::sqrt(1.0 - z * z);
      p.K.push_back({radius * r * std::cos(golden * i), radius * r * std::sin(golden * i), radius * z});
    }
    p.shape = ShapeKind::sphere;
    p.symmetry = Symmetry::rotation;
  }
  return p;
}

/// Two quadratic wells at +-separation e1: V = m0 + depth min(1, d(x, K)^2 / width^2), capped.
inline PotentialSpec make_double_well(double m0, double depth, double separation, double cap, double width = 0.8,
                                      double h0 = 0.1) {
  if (!(m0 > 0.0) || !(depth > 0.0)) throw ValidationError("double well needs m0 > 0 and depth > 0");
  if (!(cap >= m0 + depth)) throw ValidationError("double well needs cap >= m0 + depth");
  const double half = width / std::sqrt(2.0);
  if (!(half < separation)) throw ValidationError("double well: wells overlap, reduce width");
  PotentialSpec p;
  p.kind = "double_well";
  p.params = {{"m0", m0}, {"depth", depth}, {"separation", separation}, {"cap", cap}, {"width", width}, {"h0", h0}};
  const Point c1{separation, 0, 0}, c2{-separation, 0, 0};
  p.dist_to_K = [=](const Point& x) { return std::min(distance(x, c1), distance(x, c2)); };
  p.V = [=](const Point& x) {
    const double d = std::min(distance(x, c1), distance(x, c2));
    return std::min(cap, m0 + depth * std::min(1.0, d * d / (width * width)));
  };
  p.v_min = m0;
  p.v_max = m0 + depth;
  p.m0 = m0;
  p.h0 = h0;
  p.omega = Region::unite({Region::ball(c1, half), Region::ball(c2, half)});
  p.K = {c1, c2};
  p.shape = ShapeKind::two_points;
  p.symmetry = Symmetry::reflection;
  return p;
}

/// Checks (V1), (V2), K and the h0 margin by sampling the grid and the boundary of Omega.
inline ValidationReport validate_potential(const PotentialSpec& pot, const GridSpec& g, double tol_K = 1e-9) {
  ValidationReport rep;
  double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
  bool finite = true;
  for (std::size_t i = 0; i < g.total(); ++i) {
    const double v = pot.V(g.position(i));
    if (!std::isfinite(v)) finite = false;
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  {
    const bool ok = finite && vmin > 0.0 && vmin >= pot.v_min - 1e-12 && vmax <= pot.v_max + 1e-12;
    std::ostringstream os;
    os << "sampled V in [" << vmin << ", " << vmax << "], declared [" << pot.v_min << ", " << pot.v_max << "]";
    rep.items.push_back({"V1", ok, vmin, os.str()});
  }
  if (pot.constant()) {
    rep.items.push_back({"V2", true, 0.0, "constant potential: Omega is the whole space"});
    return rep;
  }
  {
    const auto samples = pot.omega.boundary_samples(g.dim, 256);
    double inf_boundary = std::numeric_limits<double>::infinity();
    for (const auto& x : samples) inf_boundary = std::min(inf_boundary, pot.V(x));
    const double margin = inf_boundary - pot.m0;
    const bool ok = !samples.empty() && margin > 0.0;
    std::ostringstream os;
    os << "inf over boundary samples " << inf_boundary << ", m0 " << pot.m0 << ", margin " << margin;
    rep.items.push_back({"V2", ok, margin, os.str()});
  }
  {
    double worst = 0.0;
    bool inside = true;
    for (const auto& k : pot.K) {
      worst = std::max(worst, std::abs(pot.V(k) - pot.m0));
      if (!pot.omega.contains(k)) inside = false;
    }
    const bool ok = !pot.K.empty() && inside && worst <= tol_K;
    rep.items.push_back({"K", ok, worst, ok ? "K samples lie in Omega at level m0" : "K samples off level or outside"});
  }
  {
    // Omega_{2h0} \ Omega must carry V > m0 and fit inside the box.
    const Region outer = pot.omega.dilated(2.0 * pot.h0);
    bool ok = outer.bounding_radius() < g.half_width;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.total(); ++i) {
      const Point x = g.position(i);
      if (outer.contains(x) && !pot.omega.contains(x)) worst = std::min(worst, pot.V(x) - pot.m0);
    }
    if (std::isfinite(worst) && !(worst > 0.0)) ok = false;
    std::ostringstream os;
    os << "min of V - m0 on the 2h0 collar " << worst;
    rep.items.push_back({"h0", ok, worst, os.str()});
  }
  return rep;
}

/// Samples V(eps x) on the grid.
inline Field potential_field(const PotentialSpec& pot, const GridSpec& g, double eps) {
  return Field::from_function(g, [&](const Point& x) { return pot.V(eps * x); });
}

struct ModelSpec {
  GridSpec grid;
  Nonlinearity nonlinearity = Nonlinearity::power(3.0);
  PotentialSpec potential = make_constant_potential(1.0);
};

/// Combined report: grid, nonlinearity against m0 and the potential fixture.
inline ValidationReport validate_model(const ModelSpec& m) {
  ValidationReport rep;
  try {
    m.grid.validate();
    rep.items.push_back({"grid", true, 0.0, m.grid.describe()});
  } catch (const Error& e) {
    rep.items.push_back({"grid", false, 0.0, e.what()});
    return rep;
  }
  auto nl = validate_nonlinearity(m.nonlinearity, m.potential.m0, m.grid.dim, m.grid.s);
  auto pv = validate_potential(m.potential, m.grid);
  rep.items.insert(rep.items.end(), nl.items.begin(), nl.items.end());
  rep.items.insert(rep.items.end(), pv.items.begin(), pv.items.end());
  return rep;
}

} // namespace fnls
