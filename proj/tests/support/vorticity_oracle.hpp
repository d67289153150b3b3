#pragma once

// Reference 2-D Navier-Stokes integrator in vorticity form, written apart
// from the library stepper: own FFTW plans, own wavenumbers, integrating
// factor RK4 in time.
//
//   d_t w + u . grad w = nu Lap w,   u = (-d_y psi, d_x psi),   Lap psi = w

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

class VorticityNS {
 public:
  VorticityNS(std::size_t n, double box, double nu) : n_(n), nu_(nu), buf_(n * n) {
    auto* p = reinterpret_cast<fftw_complex*>(buf_.data());
    const int ni = static_cast<int>(n);
    fwd_ = fftw_plan_dft_2d(ni, ni, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(ni, ni, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    const double dk = 2.0 * std::numbers::pi / box;
    kx_.resize(n);
    keep_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const long m = i < n / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
      kx_[i] = i == n / 2 ? 0.0 : dk * static_cast<double>(m);
      keep_[i] = 3 * std::labs(m) <= static_cast<long>(n);
    }
  }
  ~VorticityNS() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  VorticityNS(const VorticityNS&) = delete;
  VorticityNS& operator=(const VorticityNS&) = delete;

  /// Vorticity coefficients normalised like the library (zero mode = mean).
  std::vector<cplx> w;

  void run(double t_end, double dt) {
    const auto steps = static_cast<long>(std::llround(t_end / dt));
    for (long s = 0; s < steps; ++s) rk4(dt);
  }

  /// Velocity coefficients recovered from the vorticity.
  void velocity(std::vector<cplx>& ux, std::vector<cplx>& uy) const {
    ux.assign(n_ * n_, 0.0);
    uy.assign(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        const auto id = i * n_ + j;
        const double k2 = kx_[i] * kx_[i] + kx_[j] * kx_[j];
        if (k2 == 0.0) continue;
        const cplx psi = -w[id] / k2;
        ux[id] = -cplx(0.0, kx_[j]) * psi;
        uy[id] = cplx(0.0, kx_[i]) * psi;
      }
  }

 private:
  std::vector<double> physical(const std::vector<cplx>& c) {
    buf_ = c;
    fftw_execute(bwd_);
    std::vector<double> out(buf_.size());
    for (std::size_t id = 0; id < out.size(); ++id) out[id] = buf_[id].real();
    return out;
  }

  // -dealias(u . grad w)
  std::vector<cplx> advection(const std::vector<cplx>& wc) {
    std::vector<cplx> ux, uy, wx(n_ * n_), wy(n_ * n_);
    const auto saved = w;
    w = wc;
    velocity(ux, uy);
    w = saved;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        const auto id = i * n_ + j;
        wx[id] = cplx(0.0, kx_[i]) * wc[id];
        wy[id] = cplx(0.0, kx_[j]) * wc[id];
      }
    const auto a = physical(ux), b = physical(uy), c = physical(wx), d = physical(wy);
    for (std::size_t id = 0; id < buf_.size(); ++id) buf_[id] = a[id] * c[id] + b[id] * d[id];
    fftw_execute(fwd_);
    const double norm = 1.0 / static_cast<double>(n_ * n_);
    std::vector<cplx> out(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        const auto id = i * n_ + j;
        out[id] = keep_[i] && keep_[j] ? -norm * buf_[id] : cplx(0.0);
      }
    return out;
  }

  // Integrating factor: v = e^{-nu k^2 t} w, classical RK4 on v.
  void rk4(double h) {
    const std::size_t sz = n_ * n_;
    std::vector<double> half(sz), full(sz);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        const double k2 = kx_[i] * kx_[i] + kx_[j] * kx_[j];
        half[i * n_ + j] = std::exp(-nu_ * k2 * h / 2);
        full[i * n_ + j] = std::exp(-nu_ * k2 * h);
      }
    const auto k1 = advection(w);
    std::vector<cplx> tmp(sz);
    for (std::size_t id = 0; id < sz; ++id) tmp[id] = half[id] * (w[id] + 0.5 * h * k1[id]);
    const auto k2 = advection(tmp);
    for (std::size_t id = 0; id < sz; ++id) tmp[id] = half[id] * w[id] + 0.5 * h * k2[id];
    const auto k3 = advection(tmp);
    for (std::size_t id = 0; id < sz; ++id) tmp[id] = full[id] * w[id] + h * half[id] * k3[id];
    const auto k4 = advection(tmp);
    for (std::size_t id = 0; id < sz; ++id)
      w[id] = full[id] * w[id] + h / 6.0 * (full[id] * k1[id] + 2.0 * half[id] * (k2[id] + k3[id]) + k4[id]);
  }

  std::size_t n_;
  double nu_;
  std::vector<cplx> buf_;
  fftw_plan fwd_{}, bwd_{};
  std::vector<double> kx_;
  std::vector<bool> keep_;
};

}  // namespace oracle
