#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fbsq/errors.hpp"

namespace fbsq {

using Complex = std::complex<double>;

namespace detail {

// The FFTW planner is not reentrant; execution of an existing plan is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Per-thread aligned work array shared by every transform on that thread.
inline Complex* fft_scratch(std::size_t count) {
  struct Buffer {
    fftw_complex* p = nullptr;
    std::size_t n = 0;
    ~Buffer() {
      if (p) fftw_free(p);
    }
  };
  thread_local Buffer buf;
  if (buf.n < count) {
    if (buf.p) fftw_free(buf.p);
    buf.p = fftw_alloc_complex(count);
    buf.n = count;
  }
  return reinterpret_cast<Complex*>(buf.p);
}

inline bool fftw_aligned(const void* p) {
  return fftw_alignment_of(reinterpret_cast<double*>(const_cast<void*>(p))) == 0;
}

// Plans are made with FFTW_ESTIMATE on aligned memory: the algorithm choice
// is then a pure function of N, which keeps results bitwise reproducible.
class FftPlans {
 public:
  explicit FftPlans(std::size_t n) : size_(n * n) {
    std::lock_guard lock(planner_mutex());
    auto* scratch = fftw_alloc_complex(size_);
    const int ni = static_cast<int>(n);
    forward_ = fftw_plan_dft_2d(ni, ni, scratch, scratch, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(ni, ni, scratch, scratch, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_free(scratch);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void forward(Complex* data) const { run(forward_, data); }
  void backward(Complex* data) const { run(backward_, data); }

 private:
  void run(fftw_plan plan, Complex* data) const {
    if (fftw_aligned(data)) {
      auto* p = reinterpret_cast<fftw_complex*>(data);
      fftw_execute_dft(plan, p, p);
      return;
    }
    Complex* work = fft_scratch(size_);
    std::copy(data, data + size_, work);
    auto* p = reinterpret_cast<fftw_complex*>(work);
    fftw_execute_dft(plan, p, p);
    std::copy(work, work + size_, data);
  }

  std::size_t size_;
  fftw_plan forward_{};
  fftw_plan backward_{};
};

}  // namespace detail

/// Periodic N x N grid on the box [0, L)^2.
///
/// Index (i, j) addresses x = i L/N, y = j L/N in physical space and the
/// wavevector (k_x(i), k_y(j)) in spectral space, with k(i) = (2 pi / L) m(i)
/// and m(i) following the usual FFT ordering 0, 1, ..., N/2-1, -N/2, ..., -1.
/// Storage is row-major with i as the slow index.
///
/// The derivative symbol uses a separate wavenumber that is zero on the
/// Nyquist index, so i k maps real fields to real fields.
class Grid {
 public:
  static std::shared_ptr<const Grid> make(std::size_t n, double box_length) {
    return std::shared_ptr<const Grid>(new Grid(n, box_length));
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return n_ * n_; }
  double box_length() const noexcept { return length_; }
  double dx() const noexcept { return length_ / static_cast<double>(n_); }
  /// Wavenumber spacing 2 pi / L.
  double dk() const noexcept { return dk_; }
  /// Quadrature weight (L/N)^2 for physical-space integrals.
  double cell_area() const noexcept { return dx() * dx(); }
  double area() const noexcept { return length_ * length_; }

  std::size_t index(std::size_t i, std::size_t j) const noexcept { return i * n_ + j; }

  /// Signed integer mode number of FFT index i.
  long mode(std::size_t i) const noexcept {
    const long ni = static_cast<long>(n_);
    const long ii = static_cast<long>(i);
    return ii < ni / 2 ? ii : ii - ni;
  }
  /// Index of the mode -m(i).
  std::size_t conjugate_index(std::size_t i) const noexcept { return (n_ - i) % n_; }

  double k(std::size_t i) const noexcept { return k1d_[i]; }
  double kd(std::size_t i) const noexcept { return kd1d_[i]; }

  std::span<const double> k_squared() const noexcept { return k2_; }
  std::span<const double> k_norm() const noexcept { return kabs_; }
  /// |k| in units of 2 pi / L.
  std::span<const double> m_norm() const noexcept { return mabs_; }
  /// 1 where the mode survives the 2/3 truncation, 0 otherwise.
  std::span<const unsigned char> dealias_mask() const noexcept { return keep_; }

  /// Largest retained |k_x| or |k_y| under the 2/3 rule.
  double dealias_cutoff() const noexcept { return cutoff_; }
  /// Same cutoff in units of 2 pi / L.
  double dealias_cutoff_modes() const noexcept { return cutoff_ / dk_; }
  /// Nyquist wavenumber (N/2) 2 pi / L.
  double k_nyquist() const noexcept { return 0.5 * static_cast<double>(n_) * dk_; }

  double x(std::size_t i) const noexcept { return static_cast<double>(i) * dx(); }

  void forward(Complex* data) const { plans_->forward(data); }
  void backward(Complex* data) const { plans_->backward(data); }

  bool same_shape(const Grid& other) const noexcept {
    return n_ == other.n_ && length_ == other.length_;
  }

 private:
  Grid(std::size_t n, double box_length) : n_(n), length_(box_length) {
    if (n < 16 || (n & (n - 1)) != 0) {
      throw InvalidGrid("grid size must be a power of two >= 16, got " + std::to_string(n));
    }
    if (!(box_length > 0.0) || !std::isfinite(box_length)) {
      throw InvalidGrid("box length must be positive and finite");
    }
    dk_ = 2.0 * std::numbers::pi / length_;
    cutoff_ = (2.0 / 3.0) * (static_cast<double>(n_) / 2.0) * dk_;
    k1d_.resize(n_);
    kd1d_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      k1d_[i] = dk_ * static_cast<double>(mode(i));
      kd1d_[i] = (i == n_ / 2) ? 0.0 : k1d_[i];
    }
    k2_.resize(size());
    kabs_.resize(size());
    mabs_.resize(size());
    keep_.resize(size());
    // Compare in mode units so the mask does not depend on rounding of dk.
    const double cut_modes = (2.0 / 3.0) * (static_cast<double>(n_) / 2.0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        const auto id = index(i, j);
        k2_[id] = k1d_[i] * k1d_[i] + k1d_[j] * k1d_[j];
        kabs_[id] = std::sqrt(k2_[id]);
        const double mi = static_cast<double>(mode(i));
        const double mj = static_cast<double>(mode(j));
        mabs_[id] = std::hypot(mi, mj);
        keep_[id] = (std::abs(mi) <= cut_modes && std::abs(mj) <= cut_modes) ? 1 : 0;
      }
    }
    plans_ = std::make_unique<detail::FftPlans>(n_);
  }

  std::size_t n_;
  double length_;
  double dk_{};
  double cutoff_{};
  std::vector<double> k1d_, kd1d_;
  std::vector<double> k2_, kabs_, mabs_;
  std::vector<unsigned char> keep_;
  std::unique_ptr<detail::FftPlans> plans_;
};

using GridPtr = std::shared_ptr<const Grid>;

}  // namespace fbsq
