#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <tuple>
#include <vector>

#include "fnls/fft.hpp"
#include "fnls/grid.hpp"

namespace fnls {

using fft::cplx;
using fft::Spectrum;

/// Multiplies the spectrum of u by a real symbol given on the FFT-ordered lattice.
inline Field apply_symbol(const Field& u, const std::vector<double>& symbol) {
  if (symbol.size() != u.size()) throw GridError("symbol size does not match field");
  Spectrum uh = fft::forward(u);
  for (std::size_t k = 0; k < uh.size(); ++k) uh[k] *= symbol[k];
  return fft::inverse_real(u.grid, uh);
}

/// (-Delta)^order u as the Fourier multiplier |xi|^{2 order}. The order defaults to the grid's s.
inline Field frac_laplacian(const Field& u, std::optional<double> order = std::nullopt) {
  const double s = order.value_or(u.grid.s);
  if (!(s > 0.0 && s <= 1.0)) throw GridError("fractional order must lie in (0, 1]");
  require_finite(u, "frac_laplacian");
  Spectrum uh = fft::forward(u);
  const auto sym = fft::fractional_symbol(u.grid, s);
  double in2 = 0.0;
  for (std::size_t k = 0; k < uh.size(); ++k) {
    uh[k] *= sym[k];
    in2 += std::norm(uh[k]);
  }
  double residue = 0.0;
  Field out = fft::inverse_real(u.grid, uh, &residue);
  // Parseval in index space: sum |out|^2 = sum |uh|^2 / M^N.
  const double out_norm = std::sqrt(in2 / static_cast<double>(u.size()));
  if (residue > 1e-12 * std::max(out_norm, 1e-300) && residue > 1e-300)
    throw NumericError("frac_laplacian: imaginary residue above tolerance");
  return out;
}

inline double l2_inner(const Field& u, const Field& v) {
  require_same_grid(u.grid, v.grid, "l2_inner");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u.values[i] * v.values[i];
  return acc * u.grid.cell_volume();
}

inline double l2_norm(const Field& u) { return std::sqrt(l2_inner(u, u)); }

/// Weighted L^q norm over the grid points of A.
inline double lp_norm(const Field& u, double q, const Region& A = Region::whole()) {
  if (!(q >= 1.0)) throw GridError("lp_norm requires q >= 1");
  require_finite(u, "lp_norm");
  const auto m = A.mask(u.grid);
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (m[i]) acc += std::pow(std::abs(u.values[i]), q);
  return std::pow(acc * u.grid.cell_volume(), 1.0 / q);
}

/// L^2 norm from the spectrum: sqrt(dv / M^N * sum |uh|^2).
inline double l2_norm_spectral(const Field& u) {
  const Spectrum uh = fft::forward(u);
  double acc = 0.0;
  for (const auto& c : uh) acc += std::norm(c);
  return std::sqrt(acc * u.grid.cell_volume() / static_cast<double>(u.size()));
}

/// Quadratic form dv / M^N * sum w_k |uh_k|^2 for a real nonnegative symbol w.
inline double spectral_quadratic(const Field& u, const std::vector<double>& w) {
  const Spectrum uh = fft::forward(u);
  double acc = 0.0;
  for (std::size_t k = 0; k < uh.size(); ++k) acc += w[k] * std::norm(uh[k]);
  return acc * u.grid.cell_volume() / static_cast<double>(u.size());
}

/// |xi|^{2s} for the grid's own s, cached per grid.
inline std::shared_ptr<const std::vector<double>> cached_symbol(const GridSpec& g) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, double, double>, std::shared_ptr<const std::vector<double>>> cache;
  const auto key = std::make_tuple(g.dim, g.points, g.half_width, g.s);
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto sym = std::make_shared<const std::vector<double>>(fft::fractional_symbol(g, g.s));
  cache.emplace(key, sym);
  return sym;
}

/// ||(-Delta)^{s/2} u||_2 via Parseval.
inline double hs_seminorm(const Field& u) {
  require_finite(u, "hs_seminorm");
  return std::sqrt(std::max(0.0, spectral_quadratic(u, *cached_symbol(u.grid))));
}

/// Discrete Gagliardo kernel |z|^{-(N+2s)} on minimum-image displacements, zero on the diagonal.
struct GagliardoKernel {
  GridSpec grid;
  std::vector<double> values;    // index space, displacement order
  std::vector<double> spectrum;  // real because the kernel is even
  double total = 0.0;            // sum of kernel values
};

namespace detail {

inline std::shared_ptr<const GagliardoKernel> build_kernel(const GridSpec& g) {
  auto k = std::make_shared<GagliardoKernel>();
  k->grid = g;
  k->values.assign(g.total(), 0.0);
  const double h = g.spacing();
  const double expo = -(g.dim + 2.0 * g.s) / 2.0;
  for (std::size_t i = 0; i < g.total(); ++i) {
    auto ix = g.unflatten(i);
    double r2 = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      const double z = h * static_cast<double>(g.signed_mode(ix[a]));
      r2 += z * z;
    }
    k->values[i] = r2 > 0.0 ? std::pow(r2, expo) : 0.0;
    k->total += k->values[i];
  }
  const Spectrum kh = fft::forward(g, k->values);
  k->spectrum.resize(kh.size());
  for (std::size_t i = 0; i < kh.size(); ++i) k->spectrum[i] = kh[i].real();
  return k;
}

} // namespace detail

inline std::shared_ptr<const GagliardoKernel> gagliardo_kernel(const GridSpec& g) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, double, double>, std::shared_ptr<const GagliardoKernel>> cache;
  g.validate();
  const auto key = std::make_tuple(g.dim, g.points, g.half_width, g.s);
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto k = detail::build_kernel(g);
  cache.emplace(key, k);
  return k;
}

/// Circular convolution (kernel * f)(x) = sum_y kernel(x - y) f(y), given the kernel spectrum.
inline std::vector<double> convolve_spectrum(const GridSpec& g, const std::vector<double>& kernel_spectrum,
                                             std::span<const double> f) {
  Spectrum fh = fft::forward(g, f);
  for (std::size_t k = 0; k < fh.size(); ++k) fh[k] *= kernel_spectrum[k];
  return fft::inverse_real(g, fh).values;
}

/// Symbol mu_k with [u]^2 over the whole box equal to dv / M^N * sum mu_k |uh_k|^2.
inline std::vector<double> gagliardo_symbol(const GridSpec& g) {
  auto k = gagliardo_kernel(g);
  std::vector<double> mu(g.total());
  const double dv = g.cell_volume();
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = std::max(0.0, 2.0 * dv * (k->total - k->spectrum[i]));
  return mu;
}

/// Weight 1 + mu_k of the full H^s inner product, cached per grid.
inline std::shared_ptr<const std::vector<double>> hs_weight(const GridSpec& g) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, double, double>, std::shared_ptr<const std::vector<double>>> cache;
  const auto key = std::make_tuple(g.dim, g.points, g.half_width, g.s);
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto w = gagliardo_symbol(g);
  for (double& v : w) v += 1.0;
  auto ptr = std::make_shared<const std::vector<double>>(std::move(w));
  std::lock_guard<std::mutex> lock(mutex);
  return cache.emplace(key, ptr).first->second;
}

/// Value of a seminorm with a flag for empty integration sets.
struct SeminormValue {
  double value = 0.0;
  bool empty_region = false;
  operator double() const { return value; }
};

/// Largest grid size accepted by the O(M^{2N}) double sum.
inline constexpr std::size_t bruteforce_limit = std::size_t{1} << 16;

/// Direct double sum of [u]_{A1,A2} with minimum-image distances and the diagonal excluded.
inline SeminormValue gagliardo_bruteforce(const Field& u, const Region& A1, const Region& A2) {
  const GridSpec& g = u.grid;
  if (g.total() > bruteforce_limit) throw GridError("gagliardo_bruteforce: grid exceeds 2^16 points");
  require_finite(u, "gagliardo_bruteforce");
  const auto m1 = A1.mask(g), m2 = A2.mask(g);
  std::vector<std::size_t> i1, i2;
  for (std::size_t i = 0; i < m1.size(); ++i) {
    if (m1[i]) i1.push_back(i);
    if (m2[i]) i2.push_back(i);
  }
  if (i1.empty() || i2.empty()) return {0.0, true};
  const auto kern = gagliardo_kernel(g);
  const long M = g.points;
  double acc = 0.0;
  for (std::size_t x : i1) {
    const auto ax = g.unflatten(x);
    double row = 0.0;
    for (std::size_t y : i2) {
      const auto ay = g.unflatten(y);
      std::size_t d = 0;
      for (int a = 0; a < g.dim; ++a) d = d * M + static_cast<std::size_t>(((ax[a] - ay[a]) % M + M) % M);
      const double diff = u.values[x] - u.values[y];
      row += diff * diff * kern->values[d];
    }
    acc += row;
  }
  const double dv = g.cell_volume();
  return {std::sqrt(acc * dv * dv), false};
}

/// [u]_{A1,A2} by three FFT convolutions; equals the double sum to round-off.
inline SeminormValue gagliardo_mixed(const Field& u, const Region& A1, const Region& A2) {
  const GridSpec& g = u.grid;
  require_finite(u, "gagliardo_mixed");
  const auto m1 = A1.mask(g), m2 = A2.mask(g);
  const bool e1 = std::none_of(m1.begin(), m1.end(), [](auto c) { return c != 0; });
  const bool e2 = std::none_of(m2.begin(), m2.end(), [](auto c) { return c != 0; });
  if (e1 || e2) return {0.0, true};
  const auto kern = gagliardo_kernel(g);
  const std::size_t n = u.size();
  std::vector<double> b(n), ub(n), u2b(n);
  for (std::size_t i = 0; i < n; ++i) {
    b[i] = m2[i];
    ub[i] = m2[i] * u.values[i];
    u2b[i] = m2[i] * u.values[i] * u.values[i];
  }
  const auto kb = convolve_spectrum(g, kern->spectrum, b);
  const auto kub = convolve_spectrum(g, kern->spectrum, ub);
  const auto ku2b = convolve_spectrum(g, kern->spectrum, u2b);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!m1[i]) continue;
    const double v = u.values[i];
    acc += v * v * kb[i] - 2.0 * v * kub[i] + ku2b[i];
  }
  const double dv = g.cell_volume();
  return {std::sqrt(std::max(0.0, acc) * dv * dv), false};
}

/// Full H^s norm sqrt(||u||_2^2 + [u]^2) on the box.
inline double hs_norm(const Field& u) {
  require_finite(u, "hs_norm");
  return std::sqrt(std::max(0.0, spectral_quadratic(u, *hs_weight(u.grid))));
}

/// H^s inner product matching hs_norm.
inline double hs_inner(const Field& u, const Field& v) {
  require_same_grid(u.grid, v.grid, "hs_inner");
  const Spectrum uh = fft::forward(u), vh = fft::forward(v);
  const auto& w = *hs_weight(u.grid);
  double acc = 0.0;
  for (std::size_t k = 0; k < uh.size(); ++k) acc += w[k] * (uh[k] * std::conj(vh[k])).real();
  return acc * u.grid.cell_volume() / static_cast<double>(u.size());
}

/// ||u||_A = sqrt(||u||^2_{L^2(A)} + [u]^2_{A, box}).
inline double restricted_norm(const Field& u, const Region& A) {
  const double l2 = lp_norm(u, 2.0, A);
  if (A.kind() == Region::Kind::whole) return hs_norm(u);
  const double semi = gagliardo_mixed(u, A, Region::whole()).value;
  return std::sqrt(l2 * l2 + semi * semi);
}

/// |||u|||_A = ||u||_{L^{p+1}(A)} + ||u||_A.
inline double triple_norm(const Field& u, const Region& A, double p) {
  return lp_norm(u, p + 1.0, A) + restricted_norm(u, A);
}

namespace detail {

// Trigonometric interpolation kernel with the Nyquist mode entering as a cosine.
inline double dirichlet(double z, const GridSpec& g) {
  const int M = g.points;
  const double theta = std::numbers::pi * z / g.half_width;
  const double half = 0.5 * theta;
  const double sh = std::sin(half);
  double core;
  if (std::abs(sh) < 1e-12) {
    // theta near a multiple of 2 pi: limit of sin((M-1) x) / sin(x)
    const double c = std::cos(half);
    core = (M - 1) * std::cos((M - 1) * half) / c;
  } else {
    core = std::sin((M - 1) * half) / sh;
  }
  return (core + std::cos(M * half)) / M;
}

inline Eigen::MatrixXd dilation_matrix(const GridSpec& g, double t) {
  const int M = g.points;
  Eigen::MatrixXd A(M, M);
  for (int i = 0; i < M; ++i) {
    const double xi = g.coordinate(i) / t;
    for (int j = 0; j < M; ++j) A(i, j) = dirichlet(xi - g.coordinate(j), g);
  }
  return A;
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Applies A to every line of the field along the given axis.
inline void apply_along_axis(std::vector<double>& v, const GridSpec& g, int axis, const Eigen::MatrixXd& A) {
  const long M = g.points;
  const long total = static_cast<long>(v.size());
  long inner = 1;
  for (int a = axis + 1; a < g.dim; ++a) inner *= M;
  const long outer = total / (inner * M);
  std::vector<double> out(v.size());
  for (long o = 0; o < outer; ++o) {
    Eigen::Map<const RowMat> in(v.data() + o * M * inner, M, inner);
    Eigen::Map<RowMat> res(out.data() + o * M * inner, M, inner);
    res.noalias() = A * in;
  }
  v.swap(out);
}

} // namespace detail

/// u(x / t) through band-limited interpolation, separable per axis.
inline Field dilate(const Field& u, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw NumericError("dilation factor must be positive");
  if (t == 1.0) return u;
  const auto A = detail::dilation_matrix(u.grid, t);
  Field out = u;
  for (int a = 0; a < u.grid.dim; ++a) detail::apply_along_axis(out.values, u.grid, a, A);
  require_finite(out, "dilate");
  return out;
}

/// u(x - y) for any real displacement, applied as a Fourier phase.
inline Field shift(const Field& u, const Point& y) {
  const GridSpec& g = u.grid;
  Spectrum uh = fft::forward(u);
  std::vector<std::vector<cplx>> phase(g.dim, std::vector<cplx>(g.points));
  for (int a = 0; a < g.dim; ++a)
    for (long j = 0; j < g.points; ++j) {
      const double arg = g.frequency(j) * y[a];
      phase[a][j] = g.is_nyquist(j) ? cplx(std::cos(arg), 0.0) : std::polar(1.0, -arg);
    }
  for (std::size_t k = 0; k < uh.size(); ++k) {
    auto ix = g.unflatten(k);
    cplx f = 1.0;
    for (int a = 0; a < g.dim; ++a) f *= phase[a][ix[a]];
    uh[k] *= f;
  }
  return fft::inverse_real(g, uh);
}

/// Minimum-image circular cross-correlation c(q) = sum_x a(x) b(x + q), returned in displacement order.
inline std::vector<double> correlate(const GridSpec& g, std::span<const double> a, std::span<const double> b) {
  Spectrum ah = fft::forward(g, a), bh = fft::forward(g, b);
  for (std::size_t k = 0; k < ah.size(); ++k) ah[k] = std::conj(ah[k]) * bh[k];
  return fft::inverse_real(g, ah).values;
}

} // namespace fnls
