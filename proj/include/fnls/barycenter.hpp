#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "fnls/dictionary.hpp"
#include "fnls/functionals.hpp"

namespace fnls {

struct BarycenterConfig {
  double R0 = 0.0;
  double r_star = 0.0;
  int stride = 1;  // q-lattice stride in cells

  static BarycenterConfig from(const SolutionDictionary& d, int stride = 1) { return {d.R0, d.r_star, stride}; }

  void validate() const {
    if (!(R0 > 0.0)) throw ValidationError("barycenter needs R0 > 0");
    if (!(r_star > 0.0)) throw ValidationError("barycenter needs r* > 0");
    if (stride < 1) throw ValidationError("barycenter stride must be at least 1");
  }
};

/// psi with [0, r*/4] < psi < [r*/2, inf): 1, then a C^1 smoothstep down to 0.
inline double cutoff(double t, double r_star) {
  const double lo = 0.25 * r_star, hi = 0.5 * r_star;
  if (t <= lo) return 1.0;
  if (t >= hi) return 0.0;
  const double x = (t - lo) / (hi - lo);
  return 1.0 - x * x * (3.0 - 2.0 * x);
}

/// Density d(q, u) on the q-lattice, which is the grid itself: values[k] belongs to q = position(k).
struct DensityMap {
  GridSpec grid;
  std::vector<double> values;
  std::vector<double> distance;  // inf over entries of ||u - U(. - q)||_{B_R0(q)}

  Point q(std::size_t k) const { return grid.position(k); }
  std::size_t index(const Point& p) const {
    std::array<long, 3> ix{0, 0, 0};
    for (int a = 0; a < grid.dim; ++a) ix[a] = std::lround((p[a] + grid.half_width) / grid.spacing());
    return grid.flatten(ix);
  }
  double at(const Point& p) const { return values[index(p)]; }
};

/// Evaluates the density for all lattice q at once.
///
/// With w = u - U(. - q) and b the indicator of B_R0(0), the squared restricted norm expands into
/// cross-correlations of u, u^2, K*u and u K*u against fixed templates built from U, b and K*b:
///   ||w||^2_{B_R0(q)} = dv sum_{B} w^2 + dv^2 sum_{x in B} sum_y K(x - y) (w(x) - w(y))^2.
/// This is exact, including the full mixed term against the whole box.
class Barycenter {
public:
  Barycenter(const SolutionDictionary& dict, BarycenterConfig cfg) : cfg_(cfg), grid_(dict.grid) {
    if (dict.empty()) throw ValidationError("barycenter: empty dictionary");
    cfg_.validate();
    const GridSpec& g = grid_;
    const std::size_t n = g.total();
    kernel_ = gagliardo_kernel(g);
    const double dv = g.cell_volume();
    const double kbar = kernel_->total;
    std::vector<double> b(n);
    for (std::size_t k = 0; k < n; ++k) b[k] = norm(displacement(k)) <= cfg_.R0 ? 1.0 : 0.0;
    const auto chi = convolve_spectrum(g, kernel_->spectrum, b);
    const double c1 = dv + dv * dv * kbar, c2 = dv * dv;
    for (const auto& e : dict.entries) {
      // template ordering: origin at index 0
      Offset roll{0, 0, 0};
      for (int a = 0; a < g.dim; ++a) roll[a] = -g.points / 2;
      const std::vector<double> U = shift_lattice(e.profile(), roll).values;
      const auto KU = convolve_spectrum(g, kernel_->spectrum, U);
      std::vector<double> Ta(n), Tb(n), Tc(n), Td(n);
      double cst = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        Ta[k] = c1 * b[k] + c2 * chi[k];
        Tb[k] = -2.0 * c1 * b[k] * U[k] - 2.0 * c2 * chi[k] * U[k] + 2.0 * c2 * b[k] * KU[k];
        Tc[k] = -2.0 * c2 * b[k];
        Td[k] = 2.0 * c2 * b[k] * U[k];
        cst += c1 * b[k] * U[k] * U[k] + c2 * chi[k] * U[k] * U[k] - 2.0 * c2 * b[k] * U[k] * KU[k];
      }
      Templates t;
      t.a = conj_spectrum(Ta);
      t.b = conj_spectrum(Tb);
      t.c = conj_spectrum(Tc);
      t.d = conj_spectrum(Td);
      t.constant = cst;
      templates_.push_back(std::move(t));
    }
  }

  const BarycenterConfig& config() const { return cfg_; }

  DensityMap density_map(const Field& u) const {
    require_same_grid(u.grid, grid_, "density");
    require_finite(u, "density");
    const GridSpec& g = grid_;
    const std::size_t n = g.total();
    std::vector<double> u2(n), Ku, uKu(n);
    for (std::size_t i = 0; i < n; ++i) u2[i] = u.values[i] * u.values[i];
    Ku = convolve_spectrum(g, kernel_->spectrum, u.values);
    for (std::size_t i = 0; i < n; ++i) uKu[i] = u.values[i] * Ku[i];
    const Spectrum fa = fft::forward(g, u2), fb = fft::forward(g, u.values), fc = fft::forward(g, uKu),
                   fd = fft::forward(g, Ku);
    DensityMap out{g, std::vector<double>(n, 0.0), std::vector<double>(n, std::numeric_limits<double>::infinity())};
    for (const auto& t : templates_) {
      Spectrum acc(n);
      for (std::size_t k = 0; k < n; ++k) acc[k] = t.a[k] * fa[k] + t.b[k] * fb[k] + t.c[k] * fc[k] + t.d[k] * fd[k];
      const auto corr = fft::inverse_real(g, acc).values;
      for (std::size_t k = 0; k < n; ++k)
        out.distance[k] = std::min(out.distance[k], std::sqrt(std::max(0.0, corr[k] + t.constant)));
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!on_stride(k)) {
        out.distance[k] = std::numeric_limits<double>::infinity();
        continue;
      }
      out.values[k] = cutoff(out.distance[k], cfg_.r_star);
    }
    return out;
  }

  double density(const Point& q, const Field& u) const { return density_map(u).at(q); }

  /// Upsilon(u) = sum q d(q, u) / sum d(q, u). Throws OutOfTubeError when the density vanishes.
  Point upsilon(const Field& u) const { return upsilon(density_map(u)); }

  Point upsilon(const DensityMap& d) const {
    Point num{0, 0, 0};
    double den = 0.0;
    for (std::size_t k = 0; k < d.values.size(); ++k) {
      const double v = d.values[k];
      if (v == 0.0) continue;
      num = num + v * d.q(k);
      den += v;
    }
    if (!(den > 0.0)) throw OutOfTubeError("barycenter density vanishes: field is outside the dictionary tube");
    return (1.0 / den) * num;
  }

private:
  struct Templates {
    Spectrum a, b, c, d;
    double constant = 0.0;
  };

  Point displacement(std::size_t k) const {
    const auto ix = grid_.unflatten(k);
    Point p{0, 0, 0};
    for (int a = 0; a < grid_.dim; ++a) p[a] = static_cast<double>(grid_.signed_mode(ix[a])) * grid_.spacing();
    return p;
  }

  bool on_stride(std::size_t k) const {
    if (cfg_.stride == 1) return true;
    const auto ix = grid_.unflatten(k);
    for (int a = 0; a < grid_.dim; ++a)
      if ((ix[a] - grid_.points / 2) % cfg_.stride != 0) return false;
    return true;
  }

  // corr(T, f)(q) = sum_x T(x) f(x + q) has spectrum conj(That) fhat.
  Spectrum conj_spectrum(const std::vector<double>& T) const {
    Spectrum s = fft::forward(grid_, T);
    for (auto& v : s) v = std::conj(v);
    return s;
  }

  BarycenterConfig cfg_;
  GridSpec grid_;
  std::shared_ptr<const GagliardoKernel> kernel_;
  std::vector<Templates> templates_;
};

inline double density(const Point& q, const Field& u, const SolutionDictionary& dict, const BarycenterConfig& cfg) {
  return Barycenter(dict, cfg).density(q, u);
}

inline Point upsilon(const Field& u, const SolutionDictionary& dict, const BarycenterConfig& cfg) {
  return Barycenter(dict, cfg).upsilon(u);
}

/// Phi_eps(t, p) = U0((. - p / eps) / t): band-limited dilation, then a Fourier shift.
inline Field phi_eps(double t, const Point& p, const Field& U0, double eps) {
  if (!(eps > 0.0)) throw ValidationError("phi_eps needs eps > 0");
  if (!(t > 0.0)) throw ValidationError("phi_eps needs t > 0");
  const GridSpec& g = U0.grid;
  const Point c = (1.0 / eps) * p;
  for (int a = 0; a < g.dim; ++a)
    if (std::abs(c[a]) >= g.half_width)
      throw GeometryError("phi_eps: p / eps lies outside the box; use a larger L or a larger eps");
  Field v = dilate(U0, t);
  if (norm(c) == 0.0) return v;
  return shift(v, c);
}

/// Truncation T(P) = clamp(P, 1 - sigma0, 1 + sigma0).
inline double truncate_pohozaev(double P, double sigma0) {
  if (!(sigma0 > 0.0 && sigma0 < 1.0)) throw ValidationError("sigma0 must lie in (0, 1)");
  return std::clamp(P, 1.0 - sigma0, 1.0 + sigma0);
}

/// Psi_eps(u) = (T(P_{m0}(u)), eps Upsilon(u)).
inline std::pair<double, Point> psi_eps(const Field& u, double eps, double m0, const Barycenter& bary,
                                        double sigma0, const Nonlinearity& nl) {
  if (!(eps > 0.0)) throw ValidationError("psi_eps needs eps > 0");
  const double P = pohozaev(u, m0, nl).value;
  return {truncate_pohozaev(P, sigma0), eps * bary.upsilon(u)};
}

} // namespace fnls
