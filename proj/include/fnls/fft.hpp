#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include "fnls/grid.hpp"

namespace fnls::fft {

using cplx = std::complex<double>;
using Spectrum = std::vector<cplx>;

namespace detail {

// FFTW planning is not thread-safe, execution on new arrays is.
class PlanCache {
public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int dim, int points, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(dim, points, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::size_t total = 1;
    int n[3] = {points, points, points};
    for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(points);
    std::vector<cplx> in(total), out(total);
    fftw_plan p = fftw_plan_dft(dim, n, reinterpret_cast<fftw_complex*>(in.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw NumericError("FFTW failed to create a plan");
    plans_.emplace(key, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
  }

private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

inline void execute(const GridSpec& g, int sign, const Spectrum& in, Spectrum& out) {
  fftw_plan p = PlanCache::instance().get(g.dim, g.points, sign);
  out.resize(in.size());
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

} // namespace detail

/// Unnormalized forward DFT of real samples.
inline Spectrum forward(const GridSpec& g, std::span<const double> values) {
  if (values.size() != g.total()) throw GridError("forward transform: size mismatch");
  Spectrum in(values.begin(), values.end()), out;
  detail::execute(g, FFTW_FORWARD, in, out);
  return out;
}

inline Spectrum forward(const Field& u) { return forward(u.grid, u.values); }

inline Spectrum forward_complex(const GridSpec& g, const Spectrum& in) {
  Spectrum out;
  detail::execute(g, FFTW_FORWARD, in, out);
  return out;
}

/// Inverse DFT including the 1/M^N factor.
inline Spectrum inverse_complex(const GridSpec& g, const Spectrum& in) {
  Spectrum out;
  detail::execute(g, FFTW_BACKWARD, in, out);
  const double scale = 1.0 / static_cast<double>(g.total());
  for (auto& c : out) c *= scale;
  return out;
}

/// Inverse DFT keeping the real part. The discarded imaginary residue is reported through `residue`.
inline Field inverse_real(const GridSpec& g, const Spectrum& in, double* residue = nullptr) {
  Spectrum out = inverse_complex(g, in);
  Field f(g);
  double im2 = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    f.values[i] = out[i].real();
    im2 += out[i].imag() * out[i].imag();
  }
  if (residue) *residue = std::sqrt(im2);
  return f;
}

/// Sum of per-axis terms evaluated on the FFT-ordered lattice.
template <class AxisFn>
std::vector<double> separable_sum(const GridSpec& g, AxisFn&& axis_value) {
  std::vector<double> out(g.total());
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto ix = g.unflatten(i);
    double v = 0.0;
    for (int a = 0; a < g.dim; ++a) v += axis_value(ix[a]);
    out[i] = v;
  }
  return out;
}

/// |xi|^2 on the frequency lattice.
inline std::vector<double> frequency_squared(const GridSpec& g) {
  return separable_sum(g, [&](long j) {
    const double xi = g.frequency(j);
    return xi * xi;
  });
}

/// |xi|^{2 order} on the frequency lattice.
inline std::vector<double> fractional_symbol(const GridSpec& g, double order) {
  auto k2 = frequency_squared(g);
  for (double& v : k2) v = v > 0.0 ? std::pow(v, order) : 0.0;
  return k2;
}

} // namespace fnls::fft
