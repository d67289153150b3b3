#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "fbsq/field.hpp"

namespace fbsq {

/// Seeded generator with platform-independent draws (std distributions are
/// implementation-defined, so uniforms are built from raw 64-bit output).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 eng_;
};

/// Builds a real field from a per-mode complex draw. `draw(id)` is called
/// once for each conjugate pair in row-major order; the partner receives
/// the conjugate. Self-conjugate modes (zero and Nyquist corners) are zero.
template <typename Draw>
SpectralField hermitian_field(const GridPtr& grid, Draw&& draw) {
  SpectralField f(grid);
  const auto n = grid->n();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto id = grid->index(i, j);
      const auto partner = grid->index(grid->conjugate_index(i), grid->conjugate_index(j));
      if (partner == id) {
        f[id] = Complex(0.0, 0.0);
      } else if (partner < id) {
        f[id] = std::conj(f[partner]);
      } else {
        f[id] = draw(id);
      }
    }
  }
  return f;
}

/// Random-phase field with prescribed radial amplitude |c(k)| = envelope(|k|).
template <typename Envelope>
SpectralField random_phase_field(const GridPtr& grid, Rng& rng, Envelope&& envelope) {
  auto kabs = grid->k_norm();
  return hermitian_field(grid, [&](std::size_t id) {
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    return std::polar(envelope(kabs[id]), phase);
  });
}

/// Gaussian coefficients on modes with m_lo <= |m| <= m_hi (mode units).
inline SpectralField random_band_field(const GridPtr& grid, Rng& rng, double m_lo, double m_hi) {
  auto mabs = grid->m_norm();
  return hermitian_field(grid, [&](std::size_t id) {
    const double re = rng.normal();
    const double im = rng.normal();
    if (mabs[id] < m_lo || mabs[id] > m_hi) return Complex(0.0, 0.0);
    return Complex(re, im);
  });
}

/// Smooth, mean-zero, dealiased random field with Gaussian spectral decay
/// at scale `width_modes` (in units of 2 pi / L). Handy for property tests.
inline SpectralField random_smooth_field(const GridPtr& grid, Rng& rng, double width_modes = 6.0) {
  auto mabs = grid->m_norm();
  auto keep = grid->dealias_mask();
  return hermitian_field(grid, [&](std::size_t id) {
    const double re = rng.normal();
    const double im = rng.normal();
    if (!keep[id]) return Complex(0.0, 0.0);
    const double r = mabs[id] / width_modes;
    return std::exp(-0.5 * r * r) * Complex(re, im);
  });
}

}  // namespace fbsq
