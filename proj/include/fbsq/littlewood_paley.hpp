#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fbsq/errors.hpp"
#include "fbsq/field.hpp"
#include "fbsq/operators.hpp"

// Dyadic frequency decomposition on the periodic grid. Frequencies are
// measured in units of 2 pi / L (integer mode numbers), so shell indices do
// not depend on the box size.
namespace fbsq::lp {

enum class Flavor { inhomogeneous, homogeneous };

inline const char* to_string(Flavor f) {
  return f == Flavor::inhomogeneous ? "inhomogeneous" : "homogeneous";
}

inline constexpr double kBallRadius = 4.0 / 3.0;
inline constexpr double kAnnulusInner = 3.0 / 4.0;
inline constexpr double kAnnulusOuter = 8.0 / 3.0;

/// C-infinity step: 1 for t <= 0, 0 for t >= 1, glued with exp(-1/x).
inline double smooth_step(double t) {
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / (1.0 - t));
  const double b = std::exp(-1.0 / t);
  return a / (a + b);
}

/// Radial low-pass profile: 1 on |xi| <= 3/4, 0 on |xi| >= 4/3.
inline double chi(double r) {
  return smooth_step((r - kAnnulusInner) / (kBallRadius - kAnnulusInner));
}

/// Annulus profile phi(xi) = chi(xi/2) - chi(xi), supported in [3/4, 8/3].
inline double phi(double r) { return chi(0.5 * r) - chi(r); }

/// Test hook: scales one shell's weights so that reconstruction breaks.
struct PartitionFault {
  int shell = 0;
  double factor = 0.9;
};

/// Per-grid table of dyadic weights for both flavors.
///
/// Inhomogeneous blocks run over j = -1 (the ball chi) .. j_max; homogeneous
/// blocks over j_min .. j_max, all annuli. j_max is the first index whose
/// partial sum reaches every grid mode, so summing blocks reproduces the
/// field; `resolved_shells` counts the annuli j >= 0 lying entirely below
/// the dealias cutoff.
class DyadicPartition {
 public:
  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }

  int first(Flavor f) const { return f == Flavor::inhomogeneous ? -1 : j_min_; }
  int last(Flavor) const { return j_max_; }
  int j_min() const { return j_min_; }
  int j_max() const { return j_max_; }
  int resolved_shells() const { return resolved_shells_; }
  /// Largest j >= 0 whose annulus lies below the dealias cutoff.
  int resolved_max() const { return resolved_shells_ - 1; }

  bool contains(int j, Flavor f) const { return j >= first(f) && j <= last(f); }

  std::span<const double> weights(int j, Flavor f) const {
    if (!contains(j, f)) {
      throw IndexOutOfRange("dyadic index " + std::to_string(j) + " outside [" +
                            std::to_string(first(f)) + ", " + std::to_string(last(f)) + "] (" +
                            to_string(f) + ")");
    }
    const auto& table = f == Flavor::inhomogeneous ? inhom_ : hom_;
    return table[static_cast<std::size_t>(j - first(f))];
  }

  /// Largest |sum_j weight_j - 1| over grid modes; the homogeneous sum skips
  /// the zero mode. Restricted to modes below the dealias cutoff when asked.
  double unity_defect(Flavor f, bool below_cutoff_only = true) const {
    const auto keep = grid_->dealias_mask();
    double worst = 0.0;
    for (std::size_t id = 0; id < grid_->size(); ++id) {
      if (below_cutoff_only && !keep[id]) continue;
      if (f == Flavor::homogeneous && id == 0) continue;
      double s = 0.0;
      for (int j = first(f); j <= last(f); ++j) s += weights(j, f)[id];
      worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
  }

  friend DyadicPartition build_partition(const GridPtr& grid, std::optional<PartitionFault> fault);

 private:
  explicit DyadicPartition(GridPtr g) : grid_(std::move(g)) {}

  GridPtr grid_;
  int j_min_ = 0;
  int j_max_ = 0;
  int resolved_shells_ = 0;
  std::vector<std::vector<double>> inhom_;
  std::vector<std::vector<double>> hom_;
};

/// Tabulates chi / phi on the grid. Throws GridTooCoarse when fewer than
/// four annuli fit below the dealias cutoff.
inline DyadicPartition build_partition(const GridPtr& grid,
                                       std::optional<PartitionFault> fault = std::nullopt) {
  DyadicPartition part(grid);
  const double cut = grid->dealias_cutoff_modes();
  int shells = 0;
  while (std::ldexp(kAnnulusOuter, shells) <= cut) ++shells;
  if (shells < 4) {
    throw GridTooCoarse("only " + std::to_string(shells) +
                        " dyadic shells fit below the dealias cutoff (need 4)");
  }
  part.resolved_shells_ = shells;

  auto mabs = grid->m_norm();
  const double m_top = *std::max_element(mabs.begin(), mabs.end());
  int j_max = 0;
  while (std::ldexp(kAnnulusInner, j_max + 1) < m_top) ++j_max;
  part.j_max_ = j_max;
  // Smallest nonzero |m| is 1; the lowest annulus touching it.
  int j_min = 0;
  while (std::ldexp(kAnnulusOuter, j_min - 1) > 1.0) --j_min;
  part.j_min_ = j_min;

  const auto size = grid->size();
  auto shell = [&](int j) {
    std::vector<double> w(size);
    for (std::size_t id = 0; id < size; ++id) w[id] = phi(std::ldexp(mabs[id], -j));
    if (fault && fault->shell == j) {
      for (auto& x : w) x *= fault->factor;
    }
    return w;
  };
  std::vector<double> ball(size);
  for (std::size_t id = 0; id < size; ++id) ball[id] = chi(mabs[id]);
  part.inhom_.push_back(std::move(ball));
  for (int j = 0; j <= j_max; ++j) part.inhom_.push_back(shell(j));
  for (int j = j_min; j <= j_max; ++j) part.hom_.push_back(j >= 0 ? part.inhom_[static_cast<std::size_t>(j + 1)] : shell(j));
  return part;
}

/// Delta_j f as a Fourier-side multiplication.
inline SpectralField block(const DyadicPartition& part, const SpectralField& f, int j, Flavor flavor) {
  const auto w = part.weights(j, flavor);
  SpectralField out(f.grid_ptr());
  auto in = f.coeffs();
  auto o = out.coeffs();
  for (std::size_t id = 0; id < o.size(); ++id) o[id] = w[id] * in[id];
  return out;
}

inline VectorField block(const DyadicPartition& part, const VectorField& v, int j, Flavor flavor) {
  return {block(part, v.x, j, flavor), block(part, v.y, j, flavor)};
}

/// S_j f = sum of blocks with index <= j - 1. Zero below the first block and
/// the whole field (homogeneous: minus its mean) past the last one.
inline SpectralField low_cutoff(const DyadicPartition& part, const SpectralField& f, int j,
                                Flavor flavor = Flavor::inhomogeneous) {
  SpectralField out(f.grid_ptr());
  const int hi = std::min(j - 1, part.last(flavor));
  auto in = f.coeffs();
  auto o = out.coeffs();
  for (int jj = part.first(flavor); jj <= hi; ++jj) {
    const auto w = part.weights(jj, flavor);
    for (std::size_t id = 0; id < o.size(); ++id) o[id] += w[id] * in[id];
  }
  return out;
}

/// Every block of f, indexed from part.first(flavor).
inline std::vector<SpectralField> decompose(const DyadicPartition& part, const SpectralField& f,
                                            Flavor flavor) {
  std::vector<SpectralField> out;
  for (int j = part.first(flavor); j <= part.last(flavor); ++j) out.push_back(block(part, f, j, flavor));
  return out;
}

inline double ell_r(const std::vector<double>& x, double r) {
  if (std::isinf(r)) {
    double m = 0.0;
    for (double v : x) m = std::max(m, v);
    return m;
  }
  double s = 0.0;
  for (double v : x) s += std::pow(v, r);
  return std::pow(s, 1.0 / r);
}

/// Unweighted block norms ||Delta_j f||_{L^p}, j = first..last.
/// For p = 2 the norms come from the coefficients (Parseval), no transforms.
inline std::vector<double> block_lp_norms(const DyadicPartition& part, const SpectralField& f,
                                          double p, Flavor flavor) {
  std::vector<double> out;
  if (p == 2.0) {
    auto c = f.coeffs();
    for (int j = part.first(flavor); j <= part.last(flavor); ++j) {
      auto w = part.weights(j, flavor);
      double s = 0.0;
      for (std::size_t id = 0; id < c.size(); ++id) s += w[id] * w[id] * std::norm(c[id]);
      out.push_back(std::sqrt(s * f.grid().area()));
    }
    return out;
  }
  for (int j = part.first(flavor); j <= part.last(flavor); ++j) out.push_back(lp_norm(block(part, f, j, flavor), p));
  return out;
}

inline std::vector<double> block_lp_norms(const DyadicPartition& part, const VectorField& v,
                                          double p, Flavor flavor) {
  if (p == 2.0) {
    auto x = block_lp_norms(part, v.x, p, flavor);
    const auto y = block_lp_norms(part, v.y, p, flavor);
    for (std::size_t b = 0; b < x.size(); ++b) x[b] = std::hypot(x[b], y[b]);
    return x;
  }
  std::vector<double> out;
  for (int j = part.first(flavor); j <= part.last(flavor); ++j) out.push_back(lp_norm(block(part, v, j, flavor), p));
  return out;
}

/// Besov norm together with what the torus truncation dropped.
struct BesovReport {
  double value = 0.0;
  Flavor flavor = Flavor::inhomogeneous;
  int j_first = 0;
  int j_last = 0;
  std::vector<double> weighted_blocks;  // 2^{js} ||Delta_j f||_p
  /// Homogeneous flavor: |mean| of the input, which no block sees.
  double dropped_mean = 0.0;
};

inline BesovReport besov_report_from_blocks(const std::vector<double>& block_norms, int j_first,
                                            double s, double r, Flavor flavor) {
  BesovReport rep;
  rep.flavor = flavor;
  rep.j_first = j_first;
  rep.j_last = j_first + static_cast<int>(block_norms.size()) - 1;
  for (std::size_t k = 0; k < block_norms.size(); ++k)
    rep.weighted_blocks.push_back(std::exp2(s * (j_first + static_cast<int>(k))) * block_norms[k]);
  rep.value = ell_r(rep.weighted_blocks, r);
  return rep;
}

inline BesovReport besov_report(const DyadicPartition& part, const SpectralField& f, double s, double p,
                                double r, Flavor flavor = Flavor::inhomogeneous) {
  auto rep = besov_report_from_blocks(block_lp_norms(part, f, p, flavor), part.first(flavor), s, r, flavor);
  if (flavor == Flavor::homogeneous) rep.dropped_mean = std::abs(f.mean());
  return rep;
}

/// ||(2^{js} ||Delta_j f||_{L^p})_j||_{l^r}. p and r may be infinity.
inline double besov_norm(const DyadicPartition& part, const SpectralField& f, double s, double p, double r,
                         Flavor flavor = Flavor::inhomogeneous) {
  return besov_report(part, f, s, p, r, flavor).value;
}

inline double besov_norm(const DyadicPartition& part, const VectorField& v, double s, double p, double r,
                         Flavor flavor = Flavor::inhomogeneous) {
  return besov_report_from_blocks(block_lp_norms(part, v, p, flavor), part.first(flavor), s, r, flavor).value;
}

// ---------------------------------------------------------------------------
// Time-dependent norms

/// Trapezoid weights for a time-ordered sample list.
inline std::vector<double> trapezoid_weights(const std::vector<double>& t) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double h = t[k + 1] - t[k];
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  return w;
}

/// L^sigma in time of a sampled non-negative function (trapezoid rule).
inline double time_norm(const std::vector<double>& t, const std::vector<double>& x, double sigma) {
  if (std::isinf(sigma)) return ell_r(x, kInfinity);
  const auto w = trapezoid_weights(t);
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += w[k] * std::pow(x[k], sigma);
  return std::pow(s, 1.0 / sigma);
}

/// Block norms sampled over time: rows are samples, columns blocks.
struct BlockSeries {
  std::vector<double> t;
  std::vector<std::vector<double>> norms;
  int j_first = 0;
};

/// Chemin-Lerner norm: time norm inside, dyadic l^r outside.
inline double chemin_lerner_from_blocks(const BlockSeries& series, double s, double r, double sigma) {
  if (series.t.empty()) throw EmptySeries("Chemin-Lerner norm of an empty series");
  const auto nblocks = series.norms.front().size();
  std::vector<double> per_block(nblocks);
  std::vector<double> column(series.t.size());
  for (std::size_t b = 0; b < nblocks; ++b) {
    for (std::size_t k = 0; k < series.t.size(); ++k) column[k] = series.norms[k][b];
    per_block[b] = std::exp2(s * (series.j_first + static_cast<int>(b))) * time_norm(series.t, column, sigma);
  }
  return ell_r(per_block, r);
}

/// Time norm outside: ||t -> ||f(t)||_{B^s_{p,r}}||_{L^sigma}.
inline double time_outside_from_blocks(const BlockSeries& series, double s, double r, double sigma) {
  if (series.t.empty()) throw EmptySeries("time norm of an empty series");
  std::vector<double> values;
  for (const auto& row : series.norms) values.push_back(besov_report_from_blocks(row, series.j_first, s, r, Flavor::inhomogeneous).value);
  return time_norm(series.t, values, sigma);
}

using FieldSeries = std::vector<std::pair<double, SpectralField>>;

inline BlockSeries block_series(const DyadicPartition& part, const FieldSeries& series, double p, Flavor flavor) {
  if (series.empty()) throw EmptySeries("empty field series");
  BlockSeries out;
  out.j_first = part.first(flavor);
  for (const auto& [t, f] : series) {
    if (!out.t.empty() && !(t > out.t.back())) throw PreconditionViolated("series must be strictly time-ordered");
    out.t.push_back(t);
    out.norms.push_back(block_lp_norms(part, f, p, flavor));
  }
  return out;
}

/// ||f||_{L~^sigma_T(B^s_{p,r})} over a sampled trajectory.
inline double chemin_lerner_norm(const DyadicPartition& part, const FieldSeries& series, double s, double p,
                                 double r, double sigma, Flavor flavor = Flavor::inhomogeneous) {
  return chemin_lerner_from_blocks(block_series(part, series, p, flavor), s, r, sigma);
}

/// ||f||_{L^sigma_T(B^s_{p,r})}, the time-outside counterpart.
inline double lebesgue_besov_norm(const DyadicPartition& part, const FieldSeries& series, double s, double p,
                                  double r, double sigma, Flavor flavor = Flavor::inhomogeneous) {
  return time_outside_from_blocks(block_series(part, series, p, flavor), s, r, sigma);
}

// ---------------------------------------------------------------------------
// Paraproducts and commutators

struct BonyParts {
  SpectralField low_high;   // T_u v = sum_j S_{j-1}u Delta_j v
  SpectralField high_low;   // T_v u = sum_j S_{j-1}v Delta_j u
  SpectralField remainder;  // R(u, v) = sum_{|j-j'|<=1} Delta_j u Delta_j' v
};

/// Paraproduct split of the pointwise product u v. Products are formed on
/// the grid; the three pieces add up to the transform of u v.
inline BonyParts bony_decompose(const DyadicPartition& part, const SpectralField& u, const SpectralField& v,
                                Flavor flavor = Flavor::inhomogeneous) {
  const int j0 = part.first(flavor);
  const int j1 = part.last(flavor);
  std::vector<PhysicalField> bu, bv;
  for (int j = j0; j <= j1; ++j) {
    bu.push_back(to_physical(block(part, u, j, flavor)));
    bv.push_back(to_physical(block(part, v, j, flavor)));
  }
  const auto nb = bu.size();
  const auto size = u.grid().size();
  PhysicalField tuv(u.grid_ptr()), tvu(u.grid_ptr()), rem(u.grid_ptr());
  // Running low-pass sums S_{j-1} = blocks up to j - 2.
  PhysicalField su(u.grid_ptr()), sv(u.grid_ptr());
  for (std::size_t b = 0; b < nb; ++b) {
    if (b >= 2) {
      su += bu[b - 2];
      sv += bv[b - 2];
    }
    for (std::size_t id = 0; id < size; ++id) {
      tuv[id] += su[id] * bv[b][id];
      tvu[id] += sv[id] * bu[b][id];
      double near = bv[b][id];
      if (b > 0) near += bv[b - 1][id];
      if (b + 1 < nb) near += bv[b + 1][id];
      rem[id] += bu[b][id] * near;
    }
  }
  return {to_spectral(tuv), to_spectral(tvu), to_spectral(rem)};
}

/// Relative size of div v against the velocity gradient.
inline double divergence_defect(const VectorField& v) {
  const double scale = l2_norm(ddx(v.x)) + l2_norm(ddy(v.x)) + l2_norm(ddx(v.y)) + l2_norm(ddy(v.y));
  const double div = l2_norm(divergence(v));
  return scale > 0.0 ? div / scale : div;
}

/// R_j = Delta_j (v . grad f) - v . grad (Delta_j f), both products dealiased.
inline SpectralField commutator(const DyadicPartition& part, const VectorField& v, const SpectralField& f, int j,
                                Flavor flavor = Flavor::inhomogeneous) {
  if (divergence_defect(v) > 1e-10) throw NotDivergenceFree("commutator needs a divergence-free vector field");
  return block(part, advect(v, f), j, flavor) - advect(v, block(part, f, j, flavor));
}

}  // namespace fbsq::lp
