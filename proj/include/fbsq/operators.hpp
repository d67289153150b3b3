#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>

#include "fbsq/errors.hpp"
#include "fbsq/field.hpp"
#include "fbsq/parallel.hpp"

namespace fbsq {

namespace detail {
/// Applies coeff(id) *= symbol(i, j, id) over the whole grid. Symbols are
/// real, or purely imaginary when `imaginary` is set (derivatives); both are
/// done in real arithmetic.
template <bool imaginary = false, typename Symbol>
SpectralField map_symbol(const SpectralField& f, Symbol&& symbol) {
  SpectralField out(f.grid_ptr());
  const auto& g = f.grid();
  auto in = f.coeffs();
  auto o = out.coeffs();
  const auto n = g.n();
  parallel_rows(n, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const auto id = g.index(i, j);
        const double sv = symbol(i, j, id);
        if constexpr (imaginary) {
          o[id] = Complex(-sv * in[id].imag(), sv * in[id].real());
        } else {
          o[id] = Complex(sv * in[id].real(), sv * in[id].imag());
        }
      }
  });
  return out;
}
}  // namespace detail

/// |D|^s f, the Fourier multiplier with symbol |k|^s. The zero mode is
/// mapped to zero for every s != 0; negative powers need a mean-zero input.
inline SpectralField apply_multiplier(const SpectralField& f, double s) {
  if (s == 0.0) return f;
  if (s < 0.0) {
    const double scale = f.coeff_norm();
    if (std::abs(f[0]) > 1e-14 * scale) {
      throw NegativePowerOnNonzeroMean("|D|^s with s = " + std::to_string(s) +
                                       " needs a mean-zero field");
    }
  }
  auto kabs = f.grid().k_norm();
  return detail::map_symbol(f, [&](std::size_t, std::size_t, std::size_t id) {
    return id == 0 ? 0.0 : std::pow(kabs[id], s);
  });
}

/// Multiplies by an arbitrary radial symbol sigma(|k|).
template <typename Radial>
SpectralField apply_radial(const SpectralField& f, Radial&& sigma) {
  auto kabs = f.grid().k_norm();
  return detail::map_symbol(f, [&](std::size_t, std::size_t, std::size_t id) {
    return static_cast<double>(sigma(kabs[id]));
  });
}

inline SpectralField ddx(const SpectralField& f) {
  const auto& g = f.grid();
  return detail::map_symbol<true>(f, [&](std::size_t i, std::size_t, std::size_t) { return g.kd(i); });
}

inline SpectralField ddy(const SpectralField& f) {
  const auto& g = f.grid();
  return detail::map_symbol<true>(f, [&](std::size_t, std::size_t j, std::size_t) { return g.kd(j); });
}

inline VectorField gradient(const SpectralField& f) { return {ddx(f), ddy(f)}; }

/// (-d/dy, d/dx) f; divergence-free for any f.
inline VectorField perp_gradient(const SpectralField& f) { return {-ddy(f), ddx(f)}; }

inline SpectralField divergence(const VectorField& v) { return ddx(v.x) + ddy(v.y); }

/// Scalar vorticity d v_y/dx - d v_x/dy.
inline SpectralField curl(const VectorField& v) { return ddx(v.y) - ddy(v.x); }

inline SpectralField laplacian(const SpectralField& f) {
  auto k2 = f.grid().k_squared();
  return detail::map_symbol(f, [&](std::size_t, std::size_t, std::size_t id) { return -k2[id]; });
}

inline VectorField laplacian(const VectorField& v) { return {laplacian(v.x), laplacian(v.y)}; }

/// Symmetric gradient d(u) = (grad u + grad u^T) / 2.
inline SymmetricTensorField deformation(const VectorField& v) {
  auto uxy = ddy(v.x);
  uxy += ddx(v.y);
  uxy *= 0.5;
  return {ddx(v.x), std::move(uxy), ddy(v.y)};
}

/// Row-wise divergence of a symmetric tensor: (d_x t_xx + d_y t_xy, d_x t_xy + d_y t_yy).
inline VectorField divergence(const SymmetricTensorField& t) {
  return {ddx(t.xx) + ddy(t.xy), ddx(t.xy) + ddy(t.yy)};
}

/// Leray projection (I - k k^T / |k|^2) onto divergence-free fields. Uses
/// the derivative wavevector so that divergence(result) vanishes exactly;
/// the zero mode passes through.
inline VectorField leray_project(const VectorField& v) {
  const auto& g = v.grid();
  detail::require_same_grid(g, v.y.grid());
  VectorField out(v.grid_ptr());
  auto ax = v.x.coeffs();
  auto ay = v.y.coeffs();
  auto ox = out.x.coeffs();
  auto oy = out.y.coeffs();
  const auto n = g.n();
  parallel_rows(n, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const auto id = g.index(i, j);
        const double kx = g.kd(i);
        const double ky = g.kd(j);
        const double k2 = kx * kx + ky * ky;
        if (k2 == 0.0) {
          ox[id] = ax[id];
          oy[id] = ay[id];
          continue;
        }
        const Complex kdotv = (kx * ax[id] + ky * ay[id]) / k2;
        ox[id] = ax[id] - kx * kdotv;
        oy[id] = ay[id] - ky * kdotv;
      }
  });
  return out;
}

/// 2/3-rule truncation: zero every mode with max(|k_x|, |k_y|) above the cutoff.
inline SpectralField dealias(SpectralField f) {
  auto keep = f.grid().dealias_mask();
  auto c = f.coeffs();
  for (std::size_t id = 0; id < c.size(); ++id)
    if (!keep[id]) c[id] = Complex(0.0, 0.0);
  return f;
}

inline VectorField dealias(VectorField v) {
  return {dealias(std::move(v.x)), dealias(std::move(v.y))};
}

/// Pseudo-spectral product: inverse transform, multiply, transform, dealias.
inline SpectralField product(const SpectralField& a, const SpectralField& b) {
  return dealias(to_spectral(to_physical(a) * to_physical(b)));
}

/// Advective derivative (v . grad) f, formed in physical space and dealiased.
inline SpectralField advect(const VectorField& v, const SpectralField& f) {
  const auto vx = to_physical(v.x);
  const auto vy = to_physical(v.y);
  const auto fx = to_physical(ddx(f));
  const auto fy = to_physical(ddy(f));
  PhysicalField out(f.grid_ptr());
  auto o = out.values();
  for (std::size_t id = 0; id < o.size(); ++id) o[id] = vx[id] * fx[id] + vy[id] * fy[id];
  return dealias(to_spectral(out));
}

}  // namespace fbsq
