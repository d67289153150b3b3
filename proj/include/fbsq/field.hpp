#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <new>
#include <unordered_map>
#include <span>
#include <utility>
#include <vector>

#include "fbsq/errors.hpp"
#include "fbsq/grid.hpp"
#include "fbsq/parallel.hpp"

namespace fbsq {

namespace detail {

/// Thread-local free lists of 64-byte aligned blocks, keyed by size. Field
/// temporaries are large and short-lived; recycling them avoids a fresh
/// zero-filled mapping per operation and lets FFTs run in place.
class BlockPool {
 public:
  static constexpr std::align_val_t kAlign{64};

  ~BlockPool() {
    alive() = false;
    for (auto& [bytes, blocks] : free_)
      for (void* p : blocks) ::operator delete(p, kAlign);
  }
  void* get(std::size_t bytes) {
    auto& v = free_[bytes];
    if (!v.empty()) {
      void* p = v.back();
      v.pop_back();
      return p;
    }
    return ::operator new(bytes, kAlign);
  }
  void put(void* p, std::size_t bytes) {
    auto& v = free_[bytes];
    if (v.size() < kMaxCached) {
      v.push_back(p);
    } else {
      ::operator delete(p, kAlign);
    }
  }
  static bool& alive() {
    thread_local bool flag = true;
    return flag;
  }

 private:
  static constexpr std::size_t kMaxCached = 64;
  std::unordered_map<std::size_t, std::vector<void*>> free_;
};

inline BlockPool* block_pool() {
  thread_local BlockPool pool;
  return BlockPool::alive() ? &pool : nullptr;
}

template <typename T>
struct PooledAllocator {
  using value_type = T;
  PooledAllocator() = default;
  template <typename U>
  PooledAllocator(const PooledAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    const auto bytes = n * sizeof(T);
    if (auto* pool = block_pool()) return static_cast<T*>(pool->get(bytes));
    return static_cast<T*>(::operator new(bytes, BlockPool::kAlign));
  }
  void deallocate(T* p, std::size_t n) noexcept {
    if (auto* pool = block_pool()) {
      pool->put(p, n * sizeof(T));
    } else {
      ::operator delete(p, BlockPool::kAlign);
    }
  }
  template <typename U>
  bool operator==(const PooledAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using PooledVector = std::vector<T, PooledAllocator<T>>;

inline void require_same_grid(const Grid& a, const Grid& b) {
  if (&a != &b && !a.same_shape(b)) throw GridMismatch("fields live on different grids");
}
}  // namespace detail

/// Fourier coefficients of a real scalar field. Coefficients approximate
/// (1/L^2) * integral f(x) exp(-i k.x) dx, so the zero mode is the mean.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(GridPtr grid) : grid_(std::move(grid)), c_(grid_->size()) {}
  SpectralField(GridPtr grid, std::span<const Complex> coeffs)
      : grid_(std::move(grid)), c_(coeffs.begin(), coeffs.end()) {
    if (c_.size() != grid_->size()) throw GridMismatch("coefficient count does not match grid");
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const noexcept { return c_.size(); }

  std::span<Complex> coeffs() noexcept { return c_; }
  std::span<const Complex> coeffs() const noexcept { return c_; }
  Complex& operator[](std::size_t id) { return c_[id]; }
  const Complex& operator[](std::size_t id) const { return c_[id]; }
  Complex& at(std::size_t i, std::size_t j) { return c_[grid_->index(i, j)]; }
  const Complex& at(std::size_t i, std::size_t j) const { return c_[grid_->index(i, j)]; }

  double mean() const { return c_.empty() ? 0.0 : c_[0].real(); }

  /// Plain coefficient l2 norm, no area factor.
  double coeff_norm() const {
    double s = 0.0;
    for (const auto& z : c_) s += std::norm(z);
    return std::sqrt(s);
  }

  /// Largest |c(-k) - conj(c(k))| relative to the coefficient norm.
  double hermitian_defect() const {
    const auto n = grid_->n();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const auto& a = c_[grid_->index(i, j)];
        const auto& b = c_[grid_->index(grid_->conjugate_index(i), grid_->conjugate_index(j))];
        worst = std::max(worst, std::abs(a - std::conj(b)));
      }
    }
    const double scale = coeff_norm();
    return scale > 0.0 ? worst / scale : worst;
  }

  bool all_finite() const {
    return std::all_of(c_.begin(), c_.end(), [](const Complex& z) {
      return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
  }

  SpectralField& operator+=(const SpectralField& o) {
    detail::require_same_grid(*grid_, *o.grid_);
    for (std::size_t id = 0; id < c_.size(); ++id) c_[id] += o.c_[id];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    detail::require_same_grid(*grid_, *o.grid_);
    for (std::size_t id = 0; id < c_.size(); ++id) c_[id] -= o.c_[id];
    return *this;
  }
  SpectralField& operator*=(Complex s) {
    for (auto& z : c_) z *= s;
    return *this;
  }
  SpectralField& operator*=(double s) {
    for (auto& z : c_) z *= s;
    return *this;
  }
  /// this += s * o
  SpectralField& axpy(double s, const SpectralField& o) {
    detail::require_same_grid(*grid_, *o.grid_);
    for (std::size_t id = 0; id < c_.size(); ++id) c_[id] += s * o.c_[id];
    return *this;
  }

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
  friend SpectralField operator*(SpectralField a, double s) { return a *= s; }
  friend SpectralField operator-(SpectralField a) { return a *= -1.0; }

 private:
  GridPtr grid_;
  detail::PooledVector<Complex> c_;
};

/// Grid values of a real scalar field, row-major like the spectral layout.
class PhysicalField {
 public:
  PhysicalField() = default;
  explicit PhysicalField(GridPtr grid, double fill = 0.0)
      : grid_(std::move(grid)), v_(grid_->size(), fill) {}
  PhysicalField(GridPtr grid, std::span<const double> values)
      : grid_(std::move(grid)), v_(values.begin(), values.end()) {
    if (v_.size() != grid_->size()) throw GridMismatch("value count does not match grid");
  }

  /// Samples f(x, y) at the grid points.
  template <typename Fn>
  static PhysicalField sample(const GridPtr& grid, Fn&& f) {
    PhysicalField out(grid);
    const auto n = grid->n();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out.v_[grid->index(i, j)] = f(grid->x(i), grid->x(j));
    return out;
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const noexcept { return v_.size(); }
  std::span<double> values() noexcept { return v_; }
  std::span<const double> values() const noexcept { return v_; }
  double& operator[](std::size_t id) { return v_[id]; }
  double operator[](std::size_t id) const { return v_[id]; }

  double min() const { return *std::min_element(v_.begin(), v_.end()); }
  double max() const { return *std::max_element(v_.begin(), v_.end()); }

  PhysicalField& operator+=(const PhysicalField& o) {
    detail::require_same_grid(*grid_, *o.grid_);
    for (std::size_t id = 0; id < v_.size(); ++id) v_[id] += o.v_[id];
    return *this;
  }
  PhysicalField& operator-=(const PhysicalField& o) {
    detail::require_same_grid(*grid_, *o.grid_);
    for (std::size_t id = 0; id < v_.size(); ++id) v_[id] -= o.v_[id];
    return *this;
  }
  PhysicalField& operator*=(double s) {
    for (auto& x : v_) x *= s;
    return *this;
  }
  friend PhysicalField operator+(PhysicalField a, const PhysicalField& b) { return a += b; }
  friend PhysicalField operator-(PhysicalField a, const PhysicalField& b) { return a -= b; }
  friend PhysicalField operator*(double s, PhysicalField a) { return a *= s; }

 private:
  GridPtr grid_;
  detail::PooledVector<double> v_;
};

/// Pointwise product.
inline PhysicalField operator*(const PhysicalField& a, const PhysicalField& b) {
  detail::require_same_grid(a.grid(), b.grid());
  PhysicalField out(a.grid_ptr());
  auto o = out.values();
  auto x = a.values();
  auto y = b.values();
  parallel_rows(a.grid().n(), [&](std::size_t r0, std::size_t r1) {
    const auto n = a.grid().n();
    for (std::size_t id = r0 * n; id < r1 * n; ++id) o[id] = x[id] * y[id];
  });
  return out;
}

/// Two-component field; used for velocities and gradients.
struct VectorField {
  SpectralField x;
  SpectralField y;

  VectorField() = default;
  explicit VectorField(const GridPtr& grid) : x(grid), y(grid) {}
  VectorField(SpectralField a, SpectralField b) : x(std::move(a)), y(std::move(b)) {}

  const Grid& grid() const { return x.grid(); }
  const GridPtr& grid_ptr() const { return x.grid_ptr(); }

  VectorField& operator+=(const VectorField& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  VectorField& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(double s, VectorField a) { return a *= s; }
};

/// Symmetric 2x2 tensor field stored by its three independent entries.
struct SymmetricTensorField {
  SpectralField xx;
  SpectralField xy;
  SpectralField yy;
};

// ---------------------------------------------------------------------------
// Transforms

inline PhysicalField to_physical(const SpectralField& f) {
  const auto& g = f.grid();
  auto c = f.coeffs();
  Complex* work = detail::fft_scratch(g.size());
  std::copy(c.begin(), c.end(), work);
  g.backward(work);
  PhysicalField out(f.grid_ptr());
  auto v = out.values();
  for (std::size_t id = 0; id < v.size(); ++id) v[id] = work[id].real();
  return out;
}

inline SpectralField to_spectral(const PhysicalField& f) {
  const auto& g = f.grid();
  auto v = f.values();
  SpectralField out(f.grid_ptr());
  auto c = out.coeffs();
  for (std::size_t id = 0; id < v.size(); ++id) c[id] = Complex(v[id], 0.0);
  g.forward(c.data());
  const double norm = 1.0 / static_cast<double>(g.size());
  for (auto& z : c) z *= norm;
  return out;
}

// ---------------------------------------------------------------------------
// Basic norms shared by every module. Physical norms use the uniform
// quadrature weight (L/N)^2; the spectral L2 norm is its Parseval twin.

/// L2 norm from coefficients: sqrt(L^2 sum |c_k|^2).
inline double l2_norm(const SpectralField& f) {
  return std::sqrt(f.grid().area()) * f.coeff_norm();
}

inline double l2_norm(const VectorField& v) {
  const double a = l2_norm(v.x);
  const double b = l2_norm(v.y);
  return std::sqrt(a * a + b * b);
}

/// L^2 inner product of two real fields given by coefficients.
inline double inner(const SpectralField& a, const SpectralField& b) {
  detail::require_same_grid(a.grid(), b.grid());
  double s = 0.0;
  auto ca = a.coeffs();
  auto cb = b.coeffs();
  for (std::size_t id = 0; id < ca.size(); ++id) s += (ca[id] * std::conj(cb[id])).real();
  return a.grid().area() * s;
}

inline double inner(const VectorField& a, const VectorField& b) {
  return inner(a.x, b.x) + inner(a.y, b.y);
}

/// Discrete L^p norm; p = infinity gives the grid maximum of |f|.
inline double lp_norm(const PhysicalField& f, double p) {
  auto v = f.values();
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  if (std::isinf(p)) return m;
  double s = 0.0;
  if (p == 2.0) {
    for (double x : v) s += x * x;
    return std::sqrt(s * f.grid().cell_area());
  }
  if (m == 0.0) return 0.0;
  // Scaled by the maximum so large p neither overflows nor underflows;
  // integer exponents use repeated squaring instead of pow.
  const double inv = 1.0 / m;
  if (p == std::floor(p) && p >= 1.0 && p <= 64.0) {
    const auto e = static_cast<unsigned>(p);
    for (double x : v) {
      double b = std::abs(x) * inv, r = 1.0;
      for (unsigned k = e; k; k >>= 1) {
        if (k & 1u) r *= b;
        b *= b;
      }
      s += r;
    }
  } else {
    for (double x : v) s += std::pow(std::abs(x) * inv, p);
  }
  return m * std::pow(s * f.grid().cell_area(), 1.0 / p);
}

inline double lp_norm(const SpectralField& f, double p) { return lp_norm(to_physical(f), p); }

/// L^p norm of the pointwise Euclidean magnitude of a vector field.
inline double lp_norm(const VectorField& v, double p) {
  const auto a = to_physical(v.x);
  const auto b = to_physical(v.y);
  PhysicalField mag(v.grid_ptr());
  auto m = mag.values();
  for (std::size_t id = 0; id < m.size(); ++id) m[id] = std::hypot(a[id], b[id]);
  return lp_norm(mag, p);
}

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace fbsq
