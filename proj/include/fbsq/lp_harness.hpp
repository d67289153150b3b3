#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fbsq/littlewood_paley.hpp"
#include "fbsq/operators.hpp"
#include "fbsq/random.hpp"

// Randomised property suites for the dyadic toolkit. Each suite draws K
// seeded fields and keeps the worst value of every measured quantity.
namespace fbsq::lp {

/// One measured quantity, folded over samples. `upper` checks value <= limit,
/// otherwise value >= limit. Soft checks are reported but never fail a suite.
struct Check {
  std::string name;
  bool hard = true;
  bool upper = true;
  double limit = 0.0;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;

  void observe(double x) {
    if (count == 0 || std::isnan(x) || (upper ? x > value : x < value)) value = x;
    ++count;
  }
  bool passed() const {
    if (count == 0) return true;
    if (std::isnan(value)) return false;
    return upper ? value <= limit : value >= limit;
  }
};

struct SuiteReport {
  std::string name;
  std::deque<Check> checks;  // stable references from add()
  std::vector<std::pair<std::string, double>> constants;

  Check& add(std::string check_name, double limit, bool upper = true, bool hard = true) {
    checks.push_back(Check{std::move(check_name), hard, upper, limit});
    return checks.back();
  }
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return !c.hard || c.passed(); });
  }
};

struct LpReport {
  int samples = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<SuiteReport> suites;

  bool passed() const {
    return std::all_of(suites.begin(), suites.end(), [](const SuiteReport& s) { return s.passed(); });
  }
  const SuiteReport* find(const std::string& name) const {
    for (const auto& s : suites)
      if (s.name == name) return &s;
    return nullptr;
  }
};

namespace detail {

inline double rel(double num, double den) { return den > 0.0 ? num / den : num; }

/// Gaussian field filling every mode below the dealias cutoff; mean-free.
inline SpectralField full_band(const GridPtr& g, Rng& rng) {
  return random_band_field(g, rng, 0.0, g->dealias_cutoff_modes() * std::sqrt(2.0));
}

/// Random field on the flat top of shell j, 2^j [4/3, 3/2], where a single
/// block sees it with unit weight.
inline SpectralField flat_shell(const GridPtr& g, Rng& rng, int j) {
  return random_band_field(g, rng, std::ldexp(4.0 / 3.0, j), std::ldexp(1.5, j));
}

inline VectorField solenoidal(const SpectralField& stream) { return perp_gradient(stream); }

}  // namespace detail

/// Sum of blocks against the input, both flavors, plus partition identities
/// and the per-sample Besov bounds that follow from them.
inline SuiteReport reconstruction_suite(const DyadicPartition& part, int samples, std::uint64_t seed) {
  SuiteReport rep{"reconstruction", {}, {}};
  if (samples <= 0) return rep;
  const auto& g = part.grid_ptr();
  auto& inh = rep.add("inhomogeneous_rel_error", 1e-10);
  auto& hom = rep.add("homogeneous_rel_error", 1e-10);
  auto& unity = rep.add("partition_unity_defect", 1e-12);
  auto& lo = rep.add("b022_over_l2_min", std::sqrt(0.5) - 1e-12, false);
  auto& hi = rep.add("b022_over_l2_max", 1.0 + 1e-12);
  auto& mono = rep.add("ell_r_monotonicity_violation", 1e-12);
  auto& top = rep.add("low_cutoff_top_rel_error", 1e-10);

  unity.observe(std::max(part.unity_defect(Flavor::inhomogeneous), part.unity_defect(Flavor::homogeneous)));
  Rng rng(seed);
  for (int k = 0; k < samples; ++k) {
    auto f = detail::full_band(g, rng);
    const double norm = l2_norm(f);
    for (auto flavor : {Flavor::homogeneous, Flavor::inhomogeneous}) {
      SpectralField sum(g);
      for (const auto& b : decompose(part, f, flavor)) sum += b;
      (flavor == Flavor::inhomogeneous ? inh : hom).observe(detail::rel(l2_norm(sum - f), norm));
    }
    const double b22 = besov_norm(part, f, 0.0, 2.0, 2.0);
    lo.observe(b22 / norm);
    hi.observe(b22 / norm);
    const double r1 = besov_norm(part, f, 0.5, 2.0, 1.0);
    const double r2 = besov_norm(part, f, 0.5, 2.0, 2.0);
    const double ri = besov_norm(part, f, 0.5, 2.0, kInfinity);
    mono.observe(std::max({0.0, (r2 - r1) / r1, (ri - r2) / r2}));
    // Add a mean: the inhomogeneous top partial sum must return it too.
    f[0] = Complex(rng.normal(), 0.0);
    top.observe(detail::rel(l2_norm(low_cutoff(part, f, part.j_max() + 1) - f), l2_norm(f)));
  }
  return rep;
}

/// Delta_j Delta_j' f = 0 whenever |j - j'| >= 2.
inline SuiteReport orthogonality_suite(const DyadicPartition& part, int samples, std::uint64_t seed) {
  SuiteReport rep{"orthogonality", {}, {}};
  if (samples <= 0) return rep;
  const auto& g = part.grid_ptr();
  auto& worst = rep.add("separated_block_product_rel", 1e-12);
  Rng rng(seed);
  for (int k = 0; k < samples; ++k) {
    const auto f = detail::full_band(g, rng);
    const double norm = l2_norm(f);
    for (auto flavor : {Flavor::inhomogeneous, Flavor::homogeneous}) {
      const auto blocks = decompose(part, f, flavor);
      for (std::size_t a = 0; a < blocks.size(); ++a)
        for (std::size_t b = a + 2; b < blocks.size(); ++b) {
          const int jb = part.first(flavor) + static_cast<int>(b);
          worst.observe(detail::rel(l2_norm(block(part, blocks[a], jb, flavor)), norm));
        }
    }
  }
  return rep;
}

/// Derivative bounds for frequency-localised fields, lambda = 2^j 2 pi / L.
/// Ball case: ||grad u||_inf <= C lambda^2 ||u||_2 (constant recorded).
/// Annulus case: c lambda ||u||_2 <= ||grad u||_2 <= C lambda ||u||_2, with
/// per-j constants required to agree within a factor 4.
inline SuiteReport bernstein_harness(const DyadicPartition& part, int samples, std::uint64_t seed) {
  SuiteReport rep{"bernstein", {}, {}};
  if (samples <= 0) return rep;
  const auto& g = part.grid_ptr();
  const double dk = g->dk();
  const int jtop = part.resolved_max();
  auto& single = rep.add("single_mode_rel_error", 1e-12);
  auto& lower = rep.add("annulus_lower_constant", 0.75 - 1e-12, false);
  auto& upper = rep.add("annulus_upper_constant", 8.0 / 3.0 + 1e-12);
  auto& spread_lo = rep.add("annulus_lower_spread_over_j", 4.0);
  auto& spread_hi = rep.add("annulus_upper_spread_over_j", 4.0);
  auto& ball = rep.add("ball_constant_a2_binf", kInfinity, true, false);

  std::vector<double> cmin(static_cast<std::size_t>(jtop + 1), kInfinity), cmax(cmin.size(), 0.0);
  std::vector<double> ball_c(cmin.size(), 0.0);
  Rng rng(seed);
  for (int k = 0; k < samples; ++k) {
    // Single Fourier mode along a random lattice direction.
    {
      const auto n = g->n();
      const auto mx = static_cast<std::size_t>(1 + rng.uniform() * (static_cast<double>(n) / 4));
      const auto my = static_cast<std::size_t>(rng.uniform() * (static_cast<double>(n) / 4));
      SpectralField m(g);
      m.at(mx, my) = Complex(0.5, 0.0);
      m.at(g->conjugate_index(mx), g->conjugate_index(my)) = Complex(0.5, 0.0);
      const double lam = std::hypot(g->kd(mx), g->kd(my));
      single.observe(std::abs(l2_norm(gradient(m)) / l2_norm(m) - lam) / lam);
    }
    const auto f = detail::full_band(g, rng);
    for (int j = 0; j <= jtop; ++j) {
      const double lam = std::ldexp(dk, j);
      const auto u = block(part, f, j, Flavor::inhomogeneous);
      const double c = l2_norm(gradient(u)) / (lam * l2_norm(u));
      const auto ju = static_cast<std::size_t>(j);
      cmin[ju] = std::min(cmin[ju], c);
      cmax[ju] = std::max(cmax[ju], c);
      lower.observe(c);
      upper.observe(c);
      const auto s = low_cutoff(part, f, j + 1);
      const double cb = lp_norm(gradient(s), kInfinity) / (lam * lam * l2_norm(s));
      ball_c[ju] = std::max(ball_c[ju], cb);
      ball.observe(cb);
    }
  }
  auto spread = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
  };
  spread_lo.observe(spread(cmin));
  spread_hi.observe(spread(cmax));
  for (int j = 0; j <= jtop; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    rep.constants.emplace_back("annulus_c_min_j" + std::to_string(j), cmin[ju]);
    rep.constants.emplace_back("annulus_C_max_j" + std::to_string(j), cmax[ju]);
    rep.constants.emplace_back("ball_C_j" + std::to_string(j), ball_c[ju]);
  }
  return rep;
}

/// [v.grad, Delta_j] f: exact vanishing for constant v, negligible leakage for
/// frequency-separated inputs, and the empirical constant in
/// ||R_j||_p <= C 2^{-j alpha/2} ||grad v||_inf ||f||_{B^{alpha/2}_{p,inf}}.
inline SuiteReport commutator_suite(const DyadicPartition& part, int samples, std::uint64_t seed,
                                    double alpha = 0.8, double p = 4.0) {
  SuiteReport rep{"commutator", {}, {}};
  if (samples <= 0) return rep;
  const auto& g = part.grid_ptr();
  auto& constant_v = rep.add("constant_velocity_rel", 1e-12);
  auto& leak = rep.add("separated_leakage_rel", 1e-10);
  auto& ratio = rep.add("besov_ratio_max", 50.0);
  const int jf = part.resolved_max();
  Rng rng(seed);
  for (int k = 0; k < samples; ++k) {
    const auto f = detail::full_band(g, rng);
    {
      VectorField v(g);
      v.x[0] = Complex(rng.normal(), 0.0);
      v.y[0] = Complex(rng.normal(), 0.0);
      const double scale = std::hypot(v.x[0].real(), v.y[0].real()) * l2_norm(gradient(f));
      for (int j = part.first(Flavor::inhomogeneous); j <= part.j_max(); ++j)
        constant_v.observe(detail::rel(l2_norm(commutator(part, v, f, j)), scale));
    }
    {
      // v within |m| <= 2, f on the flat top of the highest resolved shell.
      const auto v = detail::solenoidal(random_band_field(g, rng, 0.0, 2.0));
      const auto h = detail::flat_shell(g, rng, jf);
      const double scale = lp_norm(gradient(v.x), kInfinity) * l2_norm(gradient(h)) +
                           lp_norm(gradient(v.y), kInfinity) * l2_norm(gradient(h));
      for (int j = -1; j <= jf - 3; ++j) leak.observe(detail::rel(l2_norm(commutator(part, v, h, j)), scale));
    }
    {
      const auto v = detail::solenoidal(random_smooth_field(g, rng, 4.0));
      const auto h = random_smooth_field(g, rng, 10.0);
      const double gv = std::max(lp_norm(gradient(v.x), kInfinity), lp_norm(gradient(v.y), kInfinity));
      const double bf = besov_norm(part, h, 0.5 * alpha, p, kInfinity, Flavor::homogeneous);
      double worst = 0.0;
      for (int j = part.j_min(); j <= part.j_max(); ++j) {
        const auto r = commutator(part, v, h, j, Flavor::homogeneous);
        worst = std::max(worst, std::exp2(0.5 * alpha * j) * lp_norm(r, p));
      }
      ratio.observe(worst / (gv * bf));
    }
  }
  rep.constants.emplace_back("commutator_constant", ratio.value);
  return rep;
}

/// Paraproduct pieces against the grid product u v.
inline SuiteReport bony_suite(const DyadicPartition& part, int samples, std::uint64_t seed) {
  SuiteReport rep{"bony", {}, {}};
  if (samples <= 0) return rep;
  const auto& g = part.grid_ptr();
  auto& recon = rep.add("reconstruction_rel", 1e-8);
  auto& recon_h = rep.add("homogeneous_reconstruction_rel", 1e-8);
  auto& sep = rep.add("separated_off_terms_rel", 1e-8);
  auto& sep_main = rep.add("separated_low_high_rel_error", 1e-8);
  auto& same = rep.add("same_shell_paraproducts_rel", 1e-8);
  const int jhi = std::min(6, part.resolved_max());
  Rng rng(seed);
  auto grid_product = [](const SpectralField& a, const SpectralField& b) {
    return to_spectral(to_physical(a) * to_physical(b));
  };
  for (int k = 0; k < samples; ++k) {
    {
      auto u = random_smooth_field(g, rng, 8.0);
      u[0] = Complex(rng.normal(), 0.0);
      const auto v = random_smooth_field(g, rng, 12.0);
      const auto uv = grid_product(u, v);
      const auto parts = bony_decompose(part, u, v);
      recon.observe(detail::rel(l2_norm(parts.low_high + parts.high_low + parts.remainder - uv), l2_norm(uv)));
      u[0] = Complex(0.0, 0.0);
      const auto uvh = grid_product(u, v);
      const auto hparts = bony_decompose(part, u, v, Flavor::homogeneous);
      recon_h.observe(
          detail::rel(l2_norm(hparts.low_high + hparts.high_low + hparts.remainder - uvh), l2_norm(uvh)));
    }
    {
      const auto u = detail::flat_shell(g, rng, 1);
      const auto v = detail::flat_shell(g, rng, jhi);
      const auto uv = grid_product(u, v);
      const auto parts = bony_decompose(part, u, v);
      const double n = l2_norm(uv);
      sep.observe(detail::rel(std::max(l2_norm(parts.high_low), l2_norm(parts.remainder)), n));
      sep_main.observe(detail::rel(l2_norm(parts.low_high - uv), n));
    }
    {
      const auto u = detail::flat_shell(g, rng, 3);
      const auto uu = grid_product(u, u);
      const auto parts = bony_decompose(part, u, u);
      same.observe(detail::rel(std::max(l2_norm(parts.low_high), l2_norm(parts.high_low)), l2_norm(uu)));
    }
  }
  return rep;
}

/// Every suite on one grid. An injected partition fault is applied to the
/// reconstruction suite only.
inline LpReport run_lp_suites(const GridPtr& grid, int samples, std::uint64_t seed,
                              std::optional<PartitionFault> fault = std::nullopt) {
  LpReport out;
  out.samples = std::max(samples, 0);
  out.n = grid->n();
  out.seed = seed;
  const auto part = build_partition(grid);
  if (fault) {
    out.suites.push_back(reconstruction_suite(build_partition(grid, fault), samples, seed));
  } else {
    out.suites.push_back(reconstruction_suite(part, samples, seed));
  }
  out.suites.push_back(orthogonality_suite(part, samples, seed + 1));
  out.suites.push_back(bernstein_harness(part, samples, seed + 2));
  out.suites.push_back(commutator_suite(part, samples, seed + 3));
  out.suites.push_back(bony_suite(part, samples, seed + 4));
  return out;
}

}  // namespace fbsq::lp
