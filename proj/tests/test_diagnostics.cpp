#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "fbsq/diagnostics.hpp"

using namespace fbsq;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;

PhysParams heat_only(double alpha) {
  PhysParams p;
  p.alpha = alpha;
  p.epsilon = 0.0;
  p.advection = false;
  p.buoyancy = false;
  return p;
}

StepOptions loose() {
  StepOptions o;
  o.dt_max = 1e9;
  return o;
}

/// Runs and records every `every` steps of size dt up to t_end.
std::vector<DiagnosticsRecord> record_run(FlowState s, const PhysParams& p, const DiagnosticsSettings& cfg, double dt,
                                          double t_end, std::size_t every, StepOptions opt = loose()) {
  Recorder rec(cfg, p, s, every);
  Stepper st(s.grid_ptr(), p, opt);
  const auto steps = static_cast<long>(std::llround(t_end / dt));
  for (long n = 0; n < steps; ++n) {
    st.advance(s, dt);
    rec.after_step(s, st.last_rates());
  }
  rec.finish(s);
  return rec.records();
}

FlowState power_law_heat_state(std::size_t n, double box, double a, std::uint64_t seed) {
  InitSpec spec;
  spec.seed = seed;
  spec.envelope_exponent = a;
  spec.xi_c = 1e6;  // the Gaussian factor is 1 on every resolved mode
  spec.nonnegative_shift = false;
  return make_initial_data(spec, Grid::make(n, box)).state;
}

DiagnosticsSettings settings_for(double alpha, double s0) {
  DiagnosticsSettings cfg;
  cfg.alpha = alpha;
  cfg.s0 = s0;
  cfg.beta_list = {1.03 * s0 / alpha};
  return cfg;
}

}  // namespace

TEST_CASE("Sobolev norms", "[diagnostics][sobolev]") {
  auto g = Grid::make(32, 2.0 * kPi);
  SECTION("single mode with |k| = 2") {
    auto f = PhysicalField::sample(g, [](double x, double) { return std::cos(2.0 * x); });
    const auto fs = to_spectral(f);
    CHECK_THAT(sobolev_norm(fs, 1.0), WithinRel(2.0 * l2_norm(fs), 1e-13));
    CHECK_THAT(sobolev_norm(fs, -0.5), WithinRel(l2_norm(fs) / std::sqrt(2.0), 1e-13));
  }
  Rng rng(3);
  auto f = dealias(random_smooth_field(g, rng));
  SECTION("s = 0 against physical quadrature") {
    CHECK_THAT(sobolev_norm(f, 0.0), WithinRel(lp_norm(to_physical(f), 2.0), 1e-10));
  }
  SECTION("s = alpha/2 squared is the |D|^alpha quadratic form") {
    const double alpha = 0.8;
    const double h = sobolev_norm(f, 0.5 * alpha);
    CHECK_THAT(h * h, WithinRel(inner(apply_multiplier(f, alpha), f), 1e-10));
  }
  SECTION("negative index needs a mean-zero field") {
    f[0] = Complex(0.3, 0.0);
    CHECK_THROWS_AS(sobolev_norm(f, -1.0), NegativeIndexOnNonzeroMean);
    CHECK_NOTHROW(sobolev_norm(fluctuation(f), -1.0));
    CHECK_NOTHROW(sobolev_norm(f, 1.0));
  }
}

TEST_CASE("initial-data functional", "[diagnostics][e0]") {
  auto g = Grid::make(32, 2.0 * kPi);
  SECTION("zero data") {
    const auto e = e0_functional(SpectralField(g), VectorField(g), 1.5, 1.5);
    CHECK(e.script_e0 == 0.0);
    CHECK(e.e0 == 0.0);
  }
  SECTION("unit velocity, no temperature") {
    auto ux = to_spectral(PhysicalField::sample(g, [](double, double y) { return std::sin(y); }));
    VectorField u(ux * (1.0 / l2_norm(ux)), SpectralField(g));
    const auto e = e0_functional(SpectralField(g), u, 1.5, 1.5);
    CHECK_THAT(e.script_e0, WithinRel(1.0, 1e-14));
    CHECK_THAT(e.e0, WithinRel(2.0, 1e-14));
  }
  SECTION("random data against separately computed pieces") {
    Rng rng(11);
    auto th = dealias(random_smooth_field(g, rng));
    th[0] = Complex(0.0, 0.0);
    auto psi = dealias(random_smooth_field(g, rng));
    VectorField u{-ddy(psi), ddx(psi)};
    const double q = 1.4, s0 = 1.5;
    const double hneg = l2_norm(apply_multiplier(th, -s0));
    const auto phys = to_physical(th);
    double sq = 0.0;
    for (double v : phys.values()) sq += std::pow(std::abs(v), q);
    const double lq = std::pow(sq * g->cell_area(), 1.0 / q);
    const double l2t = std::sqrt(inner(th, th));
    const double l2u = std::sqrt(inner(u.x, u.x) + inner(u.y, u.y));
    const double ee = hneg + l2t + (l2u + lq) * (1.0 + lq);
    const auto e = e0_functional(th, u, q, s0);
    CHECK_THAT(e.script_e0, WithinRel(ee, 1e-12));
    CHECK_THAT(e.e0, WithinRel(ee * (1.0 + ee), 1e-12));
  }
}

TEST_CASE("pure heat against the exact semigroup", "[diagnostics][heat]") {
  const double alpha = 0.8;
  auto g = Grid::make(64, 16.0 * kPi);
  InitSpec spec;
  spec.seed = 5;
  spec.envelope_exponent = 0.75;
  spec.xi_c = 1.0;
  auto s0 = make_initial_data(spec, g).state;
  const auto theta0 = s0.theta;
  auto cfg = settings_for(alpha, 1.5);
  const auto series = record_run(s0, heat_only(alpha), cfg, 0.01, 2.0, 5);
  auto k = g->k_norm();

  SECTION("Sobolev norms follow the closed form") {
    for (const auto& r : series) {
      double sum_half = 0.0, sum_neg = 0.0, sum_0 = 0.0;
      for (std::size_t id = 1; id < g->size(); ++id) {
        const double decay = std::exp(-2.0 * r.t * std::pow(k[id], alpha));
        const double c2 = std::norm(theta0[id]) * decay;
        sum_0 += c2;
        sum_half += std::pow(k[id], alpha) * c2;
        sum_neg += std::pow(k[id], -3.0) * c2;
      }
      CHECK_THAT(r.l2_theta, WithinRel(std::sqrt(sum_0 * g->area()), 1e-10));
      CHECK_THAT(r.hdot_alpha2_theta, WithinRel(std::sqrt(sum_half * g->area()), 1e-10));
      CHECK_THAT(r.hdot_neg_s0_theta, WithinRel(std::sqrt(sum_neg * g->area()), 1e-10));
    }
  }
  SECTION("temperature balance closes") {
    // Slow modes and per-step samples leave only the Simpson quadrature error.
    auto slow = make_initial_data(spec, Grid::make(64, 64.0 * kPi)).state;
    const auto fine = record_run(slow, heat_only(alpha), cfg, 0.01, 2.0, 1);
    CHECK(temperature_balance_residual(fine) <= 1e-8);
    CHECK(cumulative_temperature_residual(fine) <= 1e-4);
    CHECK(temperature_balance_residual(series) <= 1e-5);
  }
  SECTION("low-frequency energy obeys the pointwise bound and decreases") {
    const double beta = cfg.beta_list[0];
    double prev = kInfinity;
    for (const auto& r : series) {
      const double radius = schonbek_radius(r.t, beta, alpha);
      CHECK(r.low_freq_energy[0] <= heat_low_frequency_bound(theta0, radius, cfg.s0));
      CHECK(r.low_freq_energy[0] <= prev);
      prev = r.low_freq_energy[0];
    }
  }
  SECTION("maximum principle") {
    const auto rep = max_principle_check(series, cfg.p_list);
    CHECK(rep.passed());
    for (std::size_t k2 = 1; k2 < series.size(); ++k2) CHECK(series[k2].lp_theta[0] <= series[k2 - 1].lp_theta[0]);
  }
}

TEST_CASE("low-frequency splitting", "[diagnostics][schonbek]") {
  auto g = Grid::make(32, 2.0 * kPi);
  Rng rng(2);
  auto th = fluctuation(dealias(random_smooth_field(g, rng)));
  SECTION("ball covering the spectrum sees the whole L2 energy") {
    const double alpha = 0.8, s0 = 0.05;
    const double beta = 0.1;  // g(0) = beta^{-1/alpha} ~ 17.8, past the corner mode
    REQUIRE(schonbek_radius(0.0, beta, alpha) >= std::sqrt(2.0) * g->dealias_cutoff());
    const auto lf = schonbek_low_energy(th, 0.0, beta, alpha, s0, 1.0);
    const double l2 = l2_norm(th);
    CHECK_THAT(lf.measured, WithinRel(l2 * l2, 1e-12));
    CHECK(lf.resolvable);
    CHECK_THAT(lf.bound_shape, WithinRel(1.0, 1e-15));
  }
  SECTION("beta must exceed s0/alpha") {
    CHECK_THROWS_AS(schonbek_low_energy(th, 1.0, 1.0, 0.8, 1.5, 1.0), PreconditionViolated);
  }
  SECTION("empty ball is flagged, not fatal") {
    const auto lf = schonbek_low_energy(th, 1e4, 2.0, 0.8, 1.5, 1.0);
    CHECK_FALSE(lf.resolvable);
    CHECK(lf.measured == 0.0);
  }
}

TEST_CASE("decay fits", "[diagnostics][fit]") {
  SECTION("synthetic power law") {
    std::vector<double> t, y;
    for (int k = 0; k <= 100; ++k) {
      t.push_back(1.0 + 0.05 * k);
      y.push_back(3.7 * std::pow(bracket(t.back()), -1.25));
    }
    const auto fit = fit_power_law(t, y, 1.0, 6.0);
    CHECK_THAT(fit.fitted_slope, WithinAbs(-1.25, 1e-6));
    CHECK_THAT(std::exp(fit.intercept), WithinRel(3.7, 1e-6));
    CHECK(fit.slope_stderr < 1e-10);
  }
  SECTION("pure fractional heat with a power-law envelope") {
    const double alpha = 0.8, a = 0.75, s0 = 1.5;
    const auto s = power_law_heat_state(256, 200.0 * kPi, a, 9);
    auto cfg = settings_for(alpha, s0);
    const ResolvabilityGate gate{200.0 * kPi, cfg.beta_list[0], alpha, 4.0};
    const double tb = gate.latest();
    REQUIRE(tb > 6.0);
    const auto series = record_run(s, heat_only(alpha), cfg, 0.05, tb, 1);
    const auto fit = fit_decay(series, 3.0, tb, s0, gate);
    CHECK(fit.resolvable);
    CHECK_THAT(fit.fitted_slope, WithinRel(-(2.0 * a + 2.0) / (2.0 * alpha), 0.05));
    CHECK_THAT(fit.theoretical_slope, WithinRel(-s0 / alpha, 1e-15));
  }
  SECTION("classical heat, alpha = 2, a = 1") {
    const double alpha = 2.0, s0 = 1.0;
    const auto s = power_law_heat_state(128, 40.0 * kPi, 1.0, 4);
    auto cfg = settings_for(alpha, s0);
    cfg.besov_p = 4.0;
    const ResolvabilityGate gate{40.0 * kPi, cfg.beta_list[0], alpha, 4.0};
    const auto series = record_run(s, heat_only(alpha), cfg, 0.1, 20.0, 1);
    const auto fit = fit_decay(series, 2.0, 20.0, s0, gate);
    CHECK_THAT(fit.fitted_slope, WithinAbs(-1.0, 0.05));
  }
  SECTION("refusals") {
    std::vector<double> t, y;
    for (int k = 0; k < 400; ++k) {
      t.push_back(0.01 * k);
      y.push_back(std::exp(-0.01 * k));
    }
    const ResolvabilityGate gate{32.0 * kPi, 1.93, 0.8, 4.0};
    CHECK_THROWS_AS(fit_decay(t, y, 0.5, 1.2, 1.5, gate), WindowUnresolvable);
    CHECK_THROWS_AS(fit_decay(t, y, 1.0, 3.5, 1.5, gate), WindowUnresolvable);
    CHECK_THROWS_AS(fit_decay(t, y, 1.0, 1.05, 1.5, gate), TooFewSamples);
    CHECK_NOTHROW(fit_decay(t, y, 1.0, gate.latest(), 1.5, gate));
  }
}

TEST_CASE("velocity balance", "[diagnostics][velocity]") {
  SECTION("no velocity, no buoyancy: zero residual") {
    auto g = Grid::make(64, 8.0 * kPi);
    InitSpec spec;
    spec.xi_c = 1.0;
    auto s = make_initial_data(spec, g).state;
    auto p = heat_only(0.8);
    const auto series = record_run(s, p, settings_for(0.8, 1.5), 0.01, 0.2, 2);
    CHECK(velocity_balance_residual(series) == 0.0);
    CHECK(cumulative_velocity_residual(series) == 0.0);
  }
  SECTION("Navier-Stokes with constant viscosity") {
    auto g = Grid::make(64, 32.0 * kPi);
    InitSpec spec;
    spec.amp_theta = 0.0;
    spec.amp_u = 0.5;
    spec.xi_c = 0.5;
    auto s = make_initial_data(spec, g).state;
    PhysParams p;
    p.epsilon = 0.0;
    const auto series = record_run(s, p, settings_for(0.8, 1.5), 2e-3, 2.0, 5, StepOptions{});
    CHECK(velocity_balance_residual(series) <= 1e-6);
    CHECK(cumulative_velocity_residual(series) <= 1e-5);
  }
  SECTION("buoyancy-driven flow with variable viscosity") {
    auto g = Grid::make(64, 32.0 * kPi);
    InitSpec spec;
    spec.amp_theta = 1.0;
    spec.amp_u = 0.1;
    spec.xi_c = 0.5;
    auto s = make_initial_data(spec, g).state;
    PhysParams p;
    const auto series = record_run(s, p, settings_for(0.8, 1.5), 2e-3, 2.0, 5, StepOptions{});
    CHECK(velocity_balance_residual(series) <= 1e-5);
    CHECK(cumulative_velocity_residual(series) <= 1e-5);
    CHECK(temperature_balance_residual(series) <= 1e-5);
  }
  SECTION("too few samples") {
    std::vector<DiagnosticsRecord> two(2);
    two[1].t = 1.0;
    CHECK_THROWS_AS(velocity_balance_residual(two), TooFewSamples);
  }
}

TEST_CASE("maximum principle checks", "[diagnostics][maxprinciple]") {
  SECTION("transport without dissipation is reported, not failed") {
    auto g = Grid::make(64, 2.0 * kPi);
    InitSpec spec;
    spec.xi_c = 1.5;
    spec.amp_u = 0.5;
    auto s = make_initial_data(spec, g).state;
    PhysParams p;
    p.kappa = 0.0;
    p.epsilon = 0.0;
    p.buoyancy = false;
    auto cfg = settings_for(0.8, 1.5);
    cfg.besov_p = 4.0;
    const auto series = record_run(s, p, cfg, 2e-3, 0.5, 10, StepOptions{});
    const auto rep = max_principle_check(series, cfg.p_list, 1e-5, false);
    CHECK(rep.worst_ratio[2] <= 1.0 + 1e-3);
    // L2 is conserved by the discrete transport up to time-stepping error.
    CHECK_THAT(rep.worst_ratio[0], WithinAbs(1.0, 1e-6));
  }
  SECTION("a violation names its sample") {
    std::vector<DiagnosticsRecord> s(3);
    for (int k = 0; k < 3; ++k) {
      s[k].t = 0.5 * k;
      s[k].lp_theta = {1.0, 1.0, 1.0};
    }
    s[2].lp_theta[1] = 1.001;
    try {
      max_principle_check(s, {2.0, 4.0, kInfinity});
      FAIL("expected a violation");
    } catch (const ViolationDetected& e) {
      CHECK(e.time() == 1.0);
      CHECK(e.exponent() == 4.0);
    }
    const auto rep = max_principle_report(s, {2.0, 4.0, kInfinity});
    CHECK_FALSE(rep.passed());
    CHECK_THAT(rep.worst_ratio[1], WithinRel(1.001, 1e-14));
  }
}

TEST_CASE("recorder bookkeeping", "[diagnostics][recorder]") {
  auto g = Grid::make(64, 16.0 * kPi);
  InitSpec spec;
  spec.xi_c = 1.0;
  spec.amp_u = 0.2;
  auto s = make_initial_data(spec, g).state;
  PhysParams p;
  const auto series = record_run(s, p, settings_for(0.8, 1.5), 0.01, 0.35, 10, StepOptions{});
  REQUIRE(series.size() == 5);  // t = 0, 0.1, 0.2, 0.3 and the final 0.35
  for (std::size_t k = 1; k < series.size(); ++k) CHECK(series[k].t > series[k - 1].t);
  CHECK_THAT(series.back().t, WithinAbs(0.35, 1e-12));
  for (const auto& r : series) {
    CHECK(std::isfinite(r.l2_theta));
    CHECK(r.l2_theta >= 0.0);
    CHECK(r.besov_theta >= 0.0);
    CHECK(r.lp_theta.size() == 3);
    CHECK(r.low_freq_energy.size() == 1);
  }
  CHECK(series.front().cumulative.theta_dissipation == 0.0);
  CHECK(series.back().cumulative.theta_dissipation > 0.0);
}
