#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fbsq/errors.hpp"
#include "fbsq/field.hpp"
#include "fbsq/littlewood_paley.hpp"
#include "fbsq/operators.hpp"
#include "fbsq/solver.hpp"

// Norms, energy-balance residuals, low-frequency splitting and decay fits
// over sampled trajectories.
//
// Temperature norms that describe decay (L^2, Sobolev, low-frequency energy)
// act on the fluctuation theta - mean(theta): the mean is conserved and the
// decay statements concern the mean-zero part. L^p norms for the maximum
// principle act on the full field.
namespace fbsq {

/// Japanese bracket <t> = (1 + t^2)^{1/2}.
inline double bracket(double t) { return std::sqrt(1.0 + t * t); }

inline SpectralField fluctuation(SpectralField f) {
  f[0] = Complex(0.0, 0.0);
  return f;
}

/// Homogeneous Sobolev norm (sum_k |k|^{2s} |f_k|^2 L^2)^{1/2}. For s = 0 the
/// mean counts (plain L^2); for s > 0 it has zero weight; s < 0 needs it zero.
inline double sobolev_norm(const SpectralField& f, double s) {
  const auto& g = f.grid();
  if (s < 0.0 && std::abs(f[0]) > 1e-14 * f.coeff_norm()) {
    throw NegativeIndexOnNonzeroMean("Sobolev index " + std::to_string(s) + " needs a mean-zero field");
  }
  if (s == 0.0) return l2_norm(f);
  auto k = g.k_norm();
  auto c = f.coeffs();
  double sum = 0.0;
  for (std::size_t id = 1; id < g.size(); ++id) {
    const double w = s == 1.0 ? k[id] * k[id] : std::pow(k[id], 2.0 * s);
    sum += w * std::norm(c[id]);
  }
  return std::sqrt(sum * g.area());
}

inline double sobolev_norm(const VectorField& v, double s) {
  return std::hypot(sobolev_norm(v.x, s), sobolev_norm(v.y, s));
}

/// Size of the initial data entering the decay bound.
struct InitialSize {
  double script_e0 = 0.0;  // ||theta0||_{H^-s0} + ||theta0||_2 + (||u0||_2 + ||theta0||_q)(1 + ||theta0||_q)
  double e0 = 0.0;         // script_e0 (1 + script_e0)
};

inline InitialSize e0_functional(const SpectralField& theta0, const VectorField& u0, double q, double s0) {
  const auto th = fluctuation(theta0);
  const double lq = lp_norm(th, q);
  InitialSize out;
  out.script_e0 = sobolev_norm(th, -s0) + l2_norm(th) + (l2_norm(u0) + lq) * (1.0 + lq);
  out.e0 = out.script_e0 * (1.0 + out.script_e0);
  return out;
}

// ---------------------------------------------------------------------------
// Low-frequency splitting

/// Radius of the shrinking ball, g(t) = (beta <t>)^{-1/alpha}.
inline double schonbek_radius(double t, double beta, double alpha) {
  return std::pow(beta * bracket(t), -1.0 / alpha);
}

struct LowFrequency {
  double measured = 0.0;     // sum over 0 < |k| <= g(t) of |theta_k|^2 L^2
  double bound_shape = 0.0;  // E0^2 <t>^{-2 s0 / alpha}
  double ratio = 0.0;
  double radius = 0.0;
  bool resolvable = true;  // false when no lattice mode lies inside the ball
};

inline double low_frequency_energy(const SpectralField& theta, double radius) {
  const auto& g = theta.grid();
  auto k = g.k_norm();
  auto c = theta.coeffs();
  double sum = 0.0;
  for (std::size_t id = 1; id < g.size(); ++id)
    if (k[id] <= radius) sum += std::norm(c[id]);
  return sum * g.area();
}

inline LowFrequency schonbek_low_energy(const SpectralField& theta, double t, double beta, double alpha,
                                        double s0, double e0) {
  if (!(beta > s0 / alpha)) {
    throw PreconditionViolated("beta = " + std::to_string(beta) + " must exceed s0 / alpha = " +
                               std::to_string(s0 / alpha));
  }
  LowFrequency out;
  out.radius = schonbek_radius(t, beta, alpha);
  out.resolvable = out.radius >= theta.grid().dk();
  out.measured = low_frequency_energy(theta, out.radius);
  out.bound_shape = e0 * e0 * std::pow(bracket(t), -2.0 * s0 / alpha);
  out.ratio = out.bound_shape > 0.0 ? out.measured / out.bound_shape : 0.0;
  return out;
}

/// Pure-heat bound g^{2 s0} ||theta0||^2_{H^-s0}: every mode inside the ball
/// satisfies |theta_k(t)|^2 <= |theta0_k|^2 <= g^{2 s0} |k|^{-2 s0} |theta0_k|^2.
inline double heat_low_frequency_bound(const SpectralField& theta0, double radius, double s0) {
  const double h = sobolev_norm(fluctuation(theta0), -s0);
  return std::pow(radius, 2.0 * s0) * h * h;
}

// ---------------------------------------------------------------------------
// Records

struct DiagnosticsSettings {
  double alpha = 0.8;
  double s0 = 1.5;
  double q = 1.5;
  double besov_p = 24.0;  // integrability of the logged B^{alpha/2}_{p,inf} norm
  std::vector<double> p_list{2.0, 4.0, kInfinity};
  std::vector<double> beta_list;
  double e0 = 0.0;  // scales the low-frequency bound shape
};

struct DiagnosticsRecord {
  double t = 0.0;
  double l2_theta = 0.0;
  double l2_u = 0.0;
  double hdot_alpha2_theta = 0.0;
  double hdot1_u = 0.0;
  double hdot_neg_s0_theta = 0.0;
  std::vector<double> lp_theta;         // one per p_list entry, full field
  double besov_theta = 0.0;             // B^{alpha/2}_{p,inf}, inhomogeneous, full field
  std::vector<double> low_freq_energy;  // one per beta_list entry
  EnergyRates rates;                    // instantaneous
  EnergyRates cumulative;               // time integrals from 0, step-resolution trapezoid
  std::vector<double> theta_blocks;     // ||Delta_j theta||_{L^p}, inhomogeneous, p = besov_p
};

/// Stateless norms of one snapshot; rates and integrals are filled by the caller.
inline DiagnosticsRecord snapshot_norms(const FlowState& s, const DiagnosticsSettings& cfg,
                                        const lp::DyadicPartition& part) {
  DiagnosticsRecord r;
  r.t = s.t;
  const auto th = fluctuation(s.theta);
  r.l2_theta = l2_norm(th);
  r.l2_u = l2_norm(s.u);
  r.hdot_alpha2_theta = sobolev_norm(th, 0.5 * cfg.alpha);
  r.hdot1_u = sobolev_norm(s.u, 1.0);
  r.hdot_neg_s0_theta = sobolev_norm(th, -cfg.s0);
  const auto phys = to_physical(s.theta);
  for (double p : cfg.p_list) r.lp_theta.push_back(lp_norm(phys, p));
  r.theta_blocks = lp::block_lp_norms(part, s.theta, cfg.besov_p, lp::Flavor::inhomogeneous);
  r.besov_theta = lp::besov_report_from_blocks(r.theta_blocks, part.first(lp::Flavor::inhomogeneous),
                                               0.5 * cfg.alpha, kInfinity, lp::Flavor::inhomogeneous)
                      .value;
  for (double beta : cfg.beta_list) r.low_freq_energy.push_back(low_frequency_energy(th, schonbek_radius(s.t, beta, cfg.alpha)));
  return r;
}

/// Samples a trajectory step by step. Energy integrals are accumulated with
/// the trapezoid rule at step resolution from the rates the stepper reports
/// for the start of each step; at a sample the rates of the new state are
/// evaluated once so the integral closes on the sample time.
class Recorder {
 public:
  Recorder(DiagnosticsSettings cfg, PhysParams params, const FlowState& initial, std::size_t sample_every)
      : cfg_(std::move(cfg)),
        params_(params),
        part_(lp::build_partition(initial.grid_ptr(), std::nullopt)),
        every_(std::max<std::size_t>(1, sample_every)) {
    last_t_ = initial.t;
    push(initial, energy_rates(initial, params_), closed_);
  }

  /// Call after each step; `start_rates` are the rates at the step's start.
  void after_step(const FlowState& s, const EnergyRates& start_rates) {
    // Close the interval that ended where this step began.
    if (have_open_) add_segment(open_t_, open_rates_, last_t_, start_rates);
    open_t_ = last_t_;
    open_rates_ = start_rates;
    have_open_ = true;
    last_t_ = s.t;
    if (++steps_ % every_ == 0) sample(s);
  }

  /// Forces a sample at the current state unless one was just taken.
  void finish(const FlowState& s) {
    if (records_.back().t < s.t) sample(s);
  }

  const std::vector<DiagnosticsRecord>& records() const { return records_; }
  const DiagnosticsSettings& settings() const { return cfg_; }
  const lp::DyadicPartition& partition() const { return part_; }
  /// Homogeneous L^2 block norms of u and inhomogeneous L^p block norms of
  /// theta at each sample, for the time-inside Besov norms.
  const lp::BlockSeries& u_blocks() const { return u_blocks_; }
  const lp::BlockSeries& theta_blocks() const { return theta_blocks_; }

 private:
  void sample(const FlowState& s) {
    const auto now = energy_rates(s, params_);
    auto cum = closed_;
    if (have_open_) accumulate(cum, open_t_, open_rates_, s.t, now);
    push(s, now, cum);
  }

  void push(const FlowState& s, const EnergyRates& rates, const EnergyRates& cum) {
    auto r = snapshot_norms(s, cfg_, part_);
    r.rates = rates;
    r.cumulative = cum;
    u_blocks_.j_first = part_.first(lp::Flavor::homogeneous);
    u_blocks_.t.push_back(s.t);
    u_blocks_.norms.push_back(lp::block_lp_norms(part_, s.u, 2.0, lp::Flavor::homogeneous));
    theta_blocks_.j_first = part_.first(lp::Flavor::inhomogeneous);
    theta_blocks_.t.push_back(s.t);
    theta_blocks_.norms.push_back(r.theta_blocks);
    records_.push_back(std::move(r));
  }

  static void accumulate(EnergyRates& cum, double t0, const EnergyRates& a, double t1, const EnergyRates& b) {
    const double h = 0.5 * (t1 - t0);
    cum.theta_dissipation += h * (a.theta_dissipation + b.theta_dissipation);
    cum.velocity_dissipation += h * (a.velocity_dissipation + b.velocity_dissipation);
    cum.buoyancy_work += h * (a.buoyancy_work + b.buoyancy_work);
  }

  void add_segment(double t0, const EnergyRates& a, double t1, const EnergyRates& b) {
    accumulate(closed_, t0, a, t1, b);
  }

  DiagnosticsSettings cfg_;
  PhysParams params_;
  lp::DyadicPartition part_;
  std::size_t every_;
  std::size_t steps_ = 0;
  std::vector<DiagnosticsRecord> records_;
  lp::BlockSeries u_blocks_, theta_blocks_;
  EnergyRates closed_;  // integrals up to open_t_
  EnergyRates open_rates_;
  double open_t_ = 0.0;
  double last_t_ = 0.0;
  bool have_open_ = false;
};

// ---------------------------------------------------------------------------
// Energy-balance residuals

namespace detail {

inline void require_samples(const std::vector<DiagnosticsRecord>& series, std::size_t n, const char* what) {
  if (series.size() < n) {
    throw TooFewSamples(std::string(what) + " needs at least " + std::to_string(n) + " samples, got " +
                        std::to_string(series.size()));
  }
  for (std::size_t k = 1; k < series.size(); ++k)
    if (!(series[k].t > series[k - 1].t)) throw PreconditionViolated("series must be strictly time-ordered");
}

/// Integral over [t0, t2] of the parabola through three samples.
inline double simpson3(double t0, double t1, double t2, double f0, double f1, double f2) {
  const double h0 = t1 - t0;
  const double h1 = t2 - t1;
  const double w = h0 + h1;
  return w / 6.0 * ((2.0 - h1 / h0) * f0 + w * w / (h0 * h1) * f1 + (2.0 - h0 / h1) * f2);
}

/// max over centred windows [t_{k-1}, t_{k+1}] of
/// |energy change / width + mean of the rate over the window| / scale, with
/// the rate averaged by Simpson's rule.
template <typename Energy, typename Rate>
double windowed_residual(const std::vector<DiagnosticsRecord>& s, Energy&& energy, Rate&& rate, double scale) {
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < s.size(); ++k) {
    const double width = s[k + 1].t - s[k - 1].t;
    const double change = energy(s[k + 1]) - energy(s[k - 1]);
    const double integral = simpson3(s[k - 1].t, s[k].t, s[k + 1].t, rate(s[k - 1]), rate(s[k]), rate(s[k + 1]));
    worst = std::max(worst, std::abs(change + integral) / width / scale);
  }
  return worst;
}

inline double max_kinetic(const std::vector<DiagnosticsRecord>& s) {
  double m = 0.0;
  for (const auto& r : s) m = std::max(m, 0.5 * r.l2_u * r.l2_u);
  return m;
}

}  // namespace detail

/// Windowed residual of d/dt (1/2)||theta||^2 + ||theta||^2_{H^{alpha/2}} = 0,
/// relative to ||theta_0||^2.
inline double temperature_balance_residual(const std::vector<DiagnosticsRecord>& s) {
  detail::require_samples(s, 3, "temperature balance");
  return detail::windowed_residual(
      s, [](const DiagnosticsRecord& r) { return 0.5 * r.l2_theta * r.l2_theta; },
      [](const DiagnosticsRecord& r) { return r.rates.theta_dissipation; }, s.front().l2_theta * s.front().l2_theta);
}

/// Windowed residual of d/dt (1/2)||u||^2 + 2 int mu d:d = int theta u_2, per
/// unit time relative to the largest kinetic energy in the series.
inline double velocity_balance_residual(const std::vector<DiagnosticsRecord>& s) {
  detail::require_samples(s, 3, "velocity balance");
  return detail::windowed_residual(
      s, [](const DiagnosticsRecord& r) { return 0.5 * r.l2_u * r.l2_u; },
      [](const DiagnosticsRecord& r) { return r.rates.velocity_dissipation - r.rates.buoyancy_work; },
      detail::max_kinetic(s));
}

/// max_t |(1/2)||theta(t)||^2 - (1/2)||theta_0||^2 + int_0^t ||theta||^2_{H^{alpha/2}}|
/// relative to (1/2)||theta_0||^2, using the step-resolution integrals.
inline double cumulative_temperature_residual(const std::vector<DiagnosticsRecord>& s) {
  detail::require_samples(s, 2, "cumulative temperature balance");
  const double e0 = 0.5 * s.front().l2_theta * s.front().l2_theta;
  if (e0 == 0.0) return 0.0;
  double worst = 0.0;
  for (const auto& r : s)
    worst = std::max(worst, std::abs(0.5 * r.l2_theta * r.l2_theta - e0 + r.cumulative.theta_dissipation) / e0);
  return worst;
}

/// max_t |kinetic energy change + dissipation - work| / (t * max kinetic energy).
inline double cumulative_velocity_residual(const std::vector<DiagnosticsRecord>& s) {
  detail::require_samples(s, 2, "cumulative velocity balance");
  const double scale = detail::max_kinetic(s);
  if (scale == 0.0) return 0.0;
  const double e0 = 0.5 * s.front().l2_u * s.front().l2_u;
  double worst = 0.0;
  for (std::size_t k = 1; k < s.size(); ++k) {
    const auto& r = s[k];
    const double defect =
        0.5 * r.l2_u * r.l2_u - e0 + r.cumulative.velocity_dissipation - r.cumulative.buoyancy_work;
    worst = std::max(worst, std::abs(defect) / ((r.t - s.front().t) * scale));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Decay fits

/// Where a decay fit is allowed: the ball of radius g(t) must hold at least
/// `factor` lattice spacings at the end of the window.
struct ResolvabilityGate {
  double box_length = 0.0;
  double beta = 0.0;
  double alpha = 0.8;
  double factor = 4.0;

  double threshold() const { return factor * 2.0 * std::numbers::pi / box_length; }
  bool admits(double t) const { return schonbek_radius(t, beta, alpha) >= threshold() * (1.0 - 1e-12); }
  /// Latest admissible time (infinite if every time is admissible).
  double latest() const {
    const double b = std::pow(threshold(), -alpha) / beta;
    return b >= 1.0 ? std::sqrt(b * b - 1.0) : -1.0;
  }
};

struct DecayFit {
  double t_a = 0.0;
  double t_b = 0.0;
  double fitted_slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;  // log C in ||theta|| ~ C <t>^slope
  double theoretical_slope = 0.0;
  std::size_t samples = 0;
  bool resolvable = false;
};

/// Least-squares slope of log y against log <t> over samples inside [t_a, t_b].
inline DecayFit fit_power_law(const std::vector<double>& t, const std::vector<double>& y, double t_a, double t_b) {
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t_a || t[k] > t_b) continue;
    if (!(y[k] > 0.0)) throw PreconditionViolated("decay fit needs positive values");
    xs.push_back(std::log(bracket(t[k])));
    ys.push_back(std::log(y[k]));
  }
  if (xs.size() < 10) {
    throw TooFewSamples("decay fit needs at least 10 samples in [" + std::to_string(t_a) + ", " +
                        std::to_string(t_b) + "], got " + std::to_string(xs.size()));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  DecayFit fit;
  fit.t_a = t_a;
  fit.t_b = t_b;
  fit.samples = xs.size();
  fit.fitted_slope = sxy / sxx;
  fit.intercept = my - fit.fitted_slope * mx;
  double sse = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double e = ys[k] - fit.intercept - fit.fitted_slope * xs[k];
    sse += e * e;
  }
  fit.slope_stderr = xs.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  return fit;
}

/// Decay exponent of ||theta(t)||_{L^2} over a window. Refuses windows that
/// start before t = 1 or end where the shrinking ball is no longer resolved.
inline DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& l2, double t_a, double t_b,
                          double s0, const ResolvabilityGate& gate) {
  if (t_a < 1.0) throw WindowUnresolvable("decay windows start at t >= 1, got " + std::to_string(t_a));
  if (!(t_b > t_a)) throw WindowUnresolvable("empty decay window");
  if (!gate.admits(t_b)) {
    throw WindowUnresolvable("g(" + std::to_string(t_b) + ") = " +
                             std::to_string(schonbek_radius(t_b, gate.beta, gate.alpha)) + " is below " +
                             std::to_string(gate.threshold()) + "; latest resolvable time is " +
                             std::to_string(gate.latest()));
  }
  auto fit = fit_power_law(t, l2, t_a, t_b);
  fit.theoretical_slope = -s0 / gate.alpha;
  fit.resolvable = true;
  return fit;
}

inline DecayFit fit_decay(const std::vector<DiagnosticsRecord>& series, double t_a, double t_b, double s0,
                          const ResolvabilityGate& gate) {
  std::vector<double> t, y;
  for (const auto& r : series) {
    t.push_back(r.t);
    y.push_back(r.l2_theta);
  }
  return fit_decay(t, y, t_a, t_b, s0, gate);
}

// ---------------------------------------------------------------------------
// Maximum principle

struct MaxPrincipleReport {
  std::vector<double> p_list;
  std::vector<double> worst_ratio;  // max_t ||theta(t)||_p / ||theta_0||_p per p
  std::vector<double> worst_time;
  double tolerance = 1e-5;
  bool passed() const {
    for (double r : worst_ratio)
      if (r > 1.0 + tolerance) return false;
    return true;
  }
};

inline MaxPrincipleReport max_principle_report(const std::vector<DiagnosticsRecord>& series,
                                               const std::vector<double>& p_list, double tolerance = 1e-5) {
  detail::require_samples(series, 1, "maximum principle");
  MaxPrincipleReport rep{p_list, std::vector<double>(p_list.size(), 0.0), std::vector<double>(p_list.size(), 0.0),
                         tolerance};
  for (std::size_t i = 0; i < p_list.size(); ++i) {
    if (i >= series.front().lp_theta.size()) throw PreconditionViolated("series lacks the requested L^p norms");
    const double ref = series.front().lp_theta[i];
    for (const auto& r : series) {
      const double ratio = ref > 0.0 ? r.lp_theta[i] / ref : (r.lp_theta[i] > 0.0 ? kInfinity : 1.0);
      if (ratio > rep.worst_ratio[i]) {
        rep.worst_ratio[i] = ratio;
        rep.worst_time[i] = r.t;
      }
    }
  }
  return rep;
}

/// Throws ViolationDetected at the first sample exceeding the bound. Runs
/// without dissipation only report: spectral transport can overshoot.
inline MaxPrincipleReport max_principle_check(const std::vector<DiagnosticsRecord>& series,
                                              const std::vector<double>& p_list, double tolerance = 1e-5,
                                              bool dissipative = true) {
  auto rep = max_principle_report(series, p_list, tolerance);
  if (!dissipative) return rep;
  for (std::size_t i = 0; i < p_list.size(); ++i) {
    const double ref = series.front().lp_theta[i];
    for (const auto& r : series)
      if (r.lp_theta[i] > ref * (1.0 + tolerance)) {
        throw ViolationDetected(r.t, p_list[i],
                                "||theta||_" + std::to_string(p_list[i]) + " = " + std::to_string(r.lp_theta[i]) +
                                    " exceeds its initial value " + std::to_string(ref) + " at t = " +
                                    std::to_string(r.t));
      }
  }
  return rep;
}

}  // namespace fbsq
