#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fnls/errors.hpp"

namespace fnls {

/// A point of R^N stored in three slots; unused trailing slots are zero.
using Point = std::array<double, 3>;
/// Integer lattice offsets, one per axis.
using Offset = std::array<long, 3>;

inline double norm(const Point& p) { return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]); }

inline Point operator+(const Point& a, const Point& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Point operator-(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Point operator*(double c, const Point& a) { return {c * a[0], c * a[1], c * a[2]}; }

inline double distance(const Point& a, const Point& b) { return norm(a - b); }

/// Periodic box [-L, L)^N sampled with M points per axis.
struct GridSpec {
  int dim = 2;
  double s = 0.5;
  double half_width = 20.0;
  int points = 128;

  void validate() const {
    if (dim < 1 || dim > 3) throw GridError("grid dimension must be 1, 2 or 3");
    if (points < 8 || (points & (points - 1)) != 0)
      throw GridError("points per axis must be a power of two and at least 8");
    if (!(half_width > 0.0) || !std::isfinite(half_width)) throw GridError("box half-width must be positive");
    if (!(s > 0.0 && s <= 1.0)) throw GridError("fractional order must lie in (0, 1]");
    if (dim >= 2 && s < 1.0 && !(dim > 2.0 * s)) throw GridError("N > 2s is required");
  }

  std::size_t total() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(points);
    return n;
  }
  double spacing() const { return 2.0 * half_width / points; }
  double cell_volume() const { return std::pow(spacing(), dim); }
  double coordinate(long j) const { return -half_width + static_cast<double>(j) * spacing(); }
  /// Index of x = 0 along every axis.
  long origin_index() const { return points / 2; }

  /// Signed wavenumber for FFT-ordered index j: j for j < M/2, j - M otherwise.
  long signed_mode(long j) const { return j < points / 2 ? j : j - points; }
  double frequency(long j) const { return std::numbers::pi * static_cast<double>(signed_mode(j)) / half_width; }
  bool is_nyquist(long j) const { return j == points / 2; }

  std::array<long, 3> unflatten(std::size_t idx) const {
    std::array<long, 3> ix{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      ix[a] = static_cast<long>(idx % points);
      idx /= points;
    }
    return ix;
  }
  std::size_t flatten(const std::array<long, 3>& ix) const {
    std::size_t idx = 0;
    for (int a = 0; a < dim; ++a) {
      long j = ((ix[a] % points) + points) % points;
      idx = idx * points + static_cast<std::size_t>(j);
    }
    return idx;
  }
  Point position(std::size_t idx) const {
    auto ix = unflatten(idx);
    Point p{0, 0, 0};
    for (int a = 0; a < dim; ++a) p[a] = coordinate(ix[a]);
    return p;
  }
  /// Minimum-image displacement between two grid points, in length units.
  Point periodic_delta(const Point& from, const Point& to) const {
    Point d{0, 0, 0};
    const double period = 2.0 * half_width;
    for (int a = 0; a < dim; ++a) {
      double v = to[a] - from[a];
      v -= period * std::round(v / period);
      d[a] = v;
    }
    return d;
  }
  /// Reduce a point into [-L, L)^N.
  Point wrap(const Point& p) const {
    Point w = p;
    const double period = 2.0 * half_width;
    for (int a = 0; a < dim; ++a) {
      w[a] = p[a] - period * std::floor((p[a] + half_width) / period);
    }
    return w;
  }
  std::string describe() const {
    std::ostringstream os;
    os << "N=" << dim << " M=" << points << " L=" << half_width << " s=" << s;
    return os.str();
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b)) throw GridError(std::string(what) + ": grid mismatch (" + a.describe() + " vs " + b.describe() + ")");
}

/// Real samples on a GridSpec in row-major order (last axis fastest).
struct Field {
  GridSpec grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(const GridSpec& g) : grid(g), values(g.total(), 0.0) { g.validate(); }
  Field(const GridSpec& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    g.validate();
    if (values.size() != g.total()) throw GridError("field payload does not match grid size");
  }

  template <class Fn>
  static Field from_function(const GridSpec& g, Fn&& fn) {
    Field f(g);
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = fn(g.position(i));
    return f;
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::span<const double> view() const { return values; }

  Field& operator+=(const Field& o) {
    require_same_grid(grid, o.grid, "field addition");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    require_same_grid(grid, o.grid, "field subtraction");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
  }
  Field& operator*=(double c) {
    for (double& v : values) v *= c;
    return *this;
  }
};

inline Field operator+(Field a, const Field& b) { return a += b; }
inline Field operator-(Field a, const Field& b) { return a -= b; }
inline Field operator*(double c, Field a) { return a *= c; }

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void require_finite(const Field& u, const char* what) {
  if (!all_finite(u.values)) throw NumericError(std::string(what) + ": non-finite field values");
}

/// v(x) = u(x - k h): translation by whole cells with periodic wrap.
inline Field shift_lattice(const Field& u, const Offset& k) {
  const GridSpec& g = u.grid;
  Field out(g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    auto ix = g.unflatten(i);
    for (int a = 0; a < g.dim; ++a) ix[a] += k[a];
    out.values[g.flatten(ix)] = u.values[i];
  }
  return out;
}

/// Index of the largest sample; ties resolve to the lowest index.
inline std::size_t argmax(const Field& u) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < u.size(); ++i)
    if (u.values[i] > u.values[best]) best = i;
  return best;
}

/// Rolls the field so that its maximum sits on the origin grid point.
inline Field recenter(const Field& u) {
  const GridSpec& g = u.grid;
  auto ix = g.unflatten(argmax(u));
  Offset k{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) k[a] = g.origin_index() - ix[a];
  return shift_lattice(u, k);
}

/// Maximum point refined by a per-axis three-point parabola through the peak sample.
inline Point refined_peak(const Field& u) {
  const GridSpec& g = u.grid;
  const std::size_t i = argmax(u);
  auto ix = g.unflatten(i);
  Point p = g.position(i);
  const double h = g.spacing();
  for (int a = 0; a < g.dim; ++a) {
    auto lo = ix, hi = ix;
    lo[a] -= 1;
    hi[a] += 1;
    const double fm = u.values[g.flatten(lo)], f0 = u.values[i], fp = u.values[g.flatten(hi)];
    const double denom = fm - 2.0 * f0 + fp;
    if (denom < 0.0) {
      double off = 0.5 * (fm - fp) / denom;
      if (off > 0.5) off = 0.5;
      if (off < -0.5) off = -0.5;
      p[a] += off * h;
    }
  }
  return g.wrap(p);
}

/// Indicator set on grid points. Membership uses Euclidean geometry in box coordinates.
class Region {
public:
  enum class Kind { whole, ball, annulus, box, union_of, complement };

  static Region whole() { return Region(Kind::whole); }
  static Region ball(const Point& center, double radius) {
    Region r(Kind::ball);
    r.center_ = center;
    r.a_ = radius;
    return r;
  }
  static Region annulus(const Point& center, double inner, double outer) {
    Region r(Kind::annulus);
    r.center_ = center;
    r.a_ = inner;
    r.b_ = outer;
    return r;
  }
  static Region box(const Point& lo, const Point& hi) {
    Region r(Kind::box);
    r.center_ = lo;
    r.hi_ = hi;
    return r;
  }
  static Region unite(std::vector<Region> parts) {
    Region r(Kind::union_of);
    r.children_ = std::move(parts);
    return r;
  }
  static Region complement(const Region& inner) {
    Region r(Kind::complement);
    r.children_ = {inner};
    return r;
  }

  Kind kind() const { return kind_; }
  const Point& center() const { return center_; }
  double radius() const { return a_; }
  double inner() const { return a_; }
  double outer() const { return b_; }
  const Point& hi() const { return hi_; }
  const std::vector<Region>& children() const { return children_; }

  bool contains(const Point& x) const {
    switch (kind_) {
      case Kind::whole: return true;
      case Kind::ball: return distance(x, center_) <= a_;
      case Kind::annulus: {
        const double r = distance(x, center_);
        return r >= a_ && r <= b_;
      }
      case Kind::box: {
        Point q{0, 0, 0};
        for (int a = 0; a < 3; ++a) q[a] = std::max({center_[a] - x[a], 0.0, x[a] - hi_[a]});
        return norm(q) <= margin_ || (margin_ < 0 && inside_eroded_box(x));
      }
      case Kind::union_of:
        for (const auto& c : children_)
          if (c.contains(x)) return true;
        return false;
      case Kind::complement: return !children_.front().contains(x);
    }
    return false;
  }

  std::vector<unsigned char> mask(const GridSpec& g) const {
    std::vector<unsigned char> m(g.total());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = contains(g.position(i)) ? 1 : 0;
    return m;
  }
  std::size_t count(const GridSpec& g) const {
    std::size_t n = 0;
    for (auto c : mask(g)) n += c;
    return n;
  }
  /// Cell count times cell volume.
  double measure(const GridSpec& g) const { return static_cast<double>(count(g)) * g.cell_volume(); }

  /// The closed delta-neighbourhood {x : d(x, A) <= delta}; negative delta erodes.
  Region dilated(double delta) const {
    Region r = *this;
    switch (kind_) {
      case Kind::whole: break;
      case Kind::ball: r.a_ = std::max(0.0, a_ + delta); break;
      case Kind::annulus:
        r.a_ = std::max(0.0, a_ - delta);
        r.b_ = std::max(r.a_, b_ + delta);
        break;
      case Kind::box: r.margin_ = margin_ + delta; break;
      case Kind::union_of:
        for (auto& c : r.children_) c = c.dilated(delta);
        break;
      case Kind::complement: r.children_.front() = children_.front().dilated(-delta); break;
    }
    return r;
  }

  /// Image of the region under x -> factor * x.
  Region scaled(double factor) const {
    Region r = *this;
    r.center_ = factor * center_;
    r.hi_ = factor * hi_;
    r.a_ = factor * a_;
    r.b_ = factor * b_;
    r.margin_ = factor * margin_;
    for (auto& c : r.children_) c = c.scaled(factor);
    return r;
  }

  /// Largest |x| over the region (infinite for unbounded kinds).
  double bounding_radius() const {
    switch (kind_) {
      case Kind::whole:
      case Kind::complement: return std::numeric_limits<double>::infinity();
      case Kind::ball: return norm(center_) + a_;
      case Kind::annulus: return norm(center_) + b_;
      case Kind::box: {
        Point far{0, 0, 0};
        for (int a = 0; a < 3; ++a) far[a] = std::max(std::abs(center_[a]), std::abs(hi_[a]));
        return norm(far) + std::max(0.0, margin_);
      }
      case Kind::union_of: {
        double r = 0;
        for (const auto& c : children_) r = std::max(r, c.bounding_radius());
        return r;
      }
    }
    return 0;
  }

  /// Points on the topological boundary; n controls angular resolution.
  std::vector<Point> boundary_samples(int dim, int n) const {
    std::vector<Point> out;
    auto sphere = [&](const Point& c, double r) {
      if (r <= 0) return;
      for (const auto& d : unit_directions(dim, n)) out.push_back(c + r * d);
    };
    switch (kind_) {
      case Kind::ball: sphere(center_, a_); break;
      case Kind::annulus:
        sphere(center_, a_);
        sphere(center_, b_);
        break;
      case Kind::union_of:
        for (const auto& c : children_)
          for (const auto& p : c.boundary_samples(dim, n)) {
            bool interior = false;
            for (const auto& other : children_)
              if (&other != &c && other.contains(p) && !on_boundary_of(other, p)) interior = true;
            if (!interior) out.push_back(p);
          }
        break;
      case Kind::complement: return children_.front().boundary_samples(dim, n);
      case Kind::box: {
        const int k = std::max(2, n / 4);
        for (int i = 0; i <= k; ++i)
          for (int j = 0; j <= k; ++j) {
            if (dim == 1) {
              out.push_back({center_[0] - margin_, 0, 0});
              out.push_back({hi_[0] + margin_, 0, 0});
              return out;
            }
            const double t = static_cast<double>(i) / k, u = static_cast<double>(j) / k;
            for (int face = 0; face < dim; ++face) {
              Point lo{0, 0, 0}, hi{0, 0, 0};
              int other = 0;
              for (int a = 0; a < dim; ++a) {
                if (a == face) continue;
                const double frac = (other++ == 0) ? t : u;
                lo[a] = hi[a] = center_[a] + frac * (hi_[a] - center_[a]);
              }
              lo[face] = center_[face];
              hi[face] = hi_[face];
              out.push_back(lo);
              out.push_back(hi);
            }
          }
        break;
      }
      case Kind::whole: break;
    }
    return out;
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    auto pt = [&](const Point& p) { os << p[0] << ',' << p[1] << ',' << p[2]; };
    switch (kind_) {
      case Kind::whole: os << "whole"; break;
      case Kind::ball:
        os << "ball center=";
        pt(center_);
        os << " radius=" << a_;
        break;
      case Kind::annulus:
        os << "annulus center=";
        pt(center_);
        os << " inner=" << a_ << " outer=" << b_;
        break;
      case Kind::box:
        os << "box lo=";
        pt(center_);
        os << " hi=";
        pt(hi_);
        os << " margin=" << margin_;
        break;
      case Kind::union_of:
        os << "union(";
        for (std::size_t i = 0; i < children_.size(); ++i) os << (i ? ";" : "") << children_[i].to_text();
        os << ")";
        break;
      case Kind::complement: os << "complement(" << children_.front().to_text() << ")"; break;
    }
    return os.str();
  }

  static Region parse(const std::string& text);

private:
  explicit Region(Kind k) : kind_(k) {}

  static bool on_boundary_of(const Region& r, const Point& p) {
    if (r.kind_ == Kind::ball) return std::abs(distance(p, r.center_) - r.a_) < 1e-12 * (1 + r.a_);
    return false;
  }
  bool inside_eroded_box(const Point& x) const {
    for (int a = 0; a < 3; ++a) {
      if (center_[a] == hi_[a]) continue;
      if (x[a] < center_[a] - margin_ || x[a] > hi_[a] + margin_) return false;
    }
    return true;
  }

  static std::vector<Point> unit_directions(int dim, int n) {
    std::vector<Point> d;
    if (dim == 1) return {{1, 0, 0}, {-1, 0, 0}};
    if (dim == 2) {
      for (int i = 0; i < n; ++i) {
        const double t = 2 * std::numbers::pi * i / n;
        d.push_back({std::cos(t), std::sin(t), 0});
      }
      return d;
    }
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const int total = n * n / 4 + 2;
    for (int i = 0; i < total; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / total;
      const double r = std::sqrt(std::max(0.0, 1 - z * z));
      d.push_back({r * std::cos(golden * i), r * std::sin(golden * i), z});
    }
    return d;
  }

  Kind kind_;
  Point center_{0, 0, 0};
  Point hi_{0, 0, 0};
  double a_ = 0, b_ = 0, margin_ = 0;
  std::vector<Region> children_;
};

namespace detail {

inline Point parse_point(const std::string& s) {
  Point p{0, 0, 0};
  std::stringstream ss(s);
  std::string item;
  int a = 0;
  while (std::getline(ss, item, ',')) {
    if (a >= 3) throw FormatError("region point has more than three coordinates");
    try {
      p[a++] = std::stod(item);
    } catch (const std::exception&) {
      throw FormatError("bad coordinate in region text: " + item);
    }
  }
  return p;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

} // namespace detail

inline Region Region::parse(const std::string& raw) {
  const std::string text = detail::trim(raw);
  auto inside_parens = [&](const std::string& head) {
    if (text.size() < head.size() + 2 || text.back() != ')') throw FormatError("unbalanced region text: " + text);
    return text.substr(head.size() + 1, text.size() - head.size() - 2);
  };
  if (text == "whole") return whole();
  if (text.rfind("complement(", 0) == 0) return complement(parse(inside_parens("complement")));
  if (text.rfind("union(", 0) == 0) {
    const std::string body = inside_parens("union");
    std::vector<Region> parts;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
      if (i == body.size() || (body[i] == ';' && depth == 0)) {
        parts.push_back(parse(body.substr(start, i - start)));
        start = i + 1;
      } else if (body[i] == '(') {
        ++depth;
      } else if (body[i] == ')') {
        --depth;
      }
    }
    return unite(std::move(parts));
  }
  std::stringstream ss(text);
  std::string kind;
  ss >> kind;
  std::string tok;
  Point center{0, 0, 0}, hi{0, 0, 0};
  double radius = 0, inner = 0, outer = 0, margin = 0;
  bool have_center = false;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError("expected key=value in region text: " + tok);
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    try {
      if (key == "center" || key == "lo") {
        center = detail::parse_point(val);
        have_center = true;
      } else if (key == "hi") {
        hi = detail::parse_point(val);
      } else if (key == "radius") {
        radius = std::stod(val);
      } else if (key == "inner") {
        inner = std::stod(val);
      } else if (key == "outer") {
        outer = std::stod(val);
      } else if (key == "margin") {
        margin = std::stod(val);
      } else {
        throw FormatError("unknown region key: " + key);
      }
    } catch (const std::invalid_argument&) {
      throw FormatError("bad number in region text: " + val);
    }
  }
  if (kind == "ball") return ball(center, radius);
  if (kind == "annulus") return annulus(center, inner, outer);
  if (kind == "box") {
    if (!have_center) throw FormatError("box needs lo=");
    Region r = box(center, hi);
    r.margin_ = margin;
    return r;
  }
  throw FormatError("unknown region kind: " + kind);
}

} // namespace fnls
