// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Slow (around ten minutes on one core); the reference run
// is the configuration in configs/reference.ini.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fbsq/admissibility.hpp"
#include "fbsq/lp_harness.hpp"
#include "fbsq/runner.hpp"
#include "fbsq/stability.hpp"
#include "support/vorticity_oracle.hpp"

using namespace fbsq;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared reference runs

struct ReferenceRuns {
  RunOutput coarse;  // dt = 1e-3
  RunOutput fine;    // dt = 5e-4
  double coarse_seconds = 0.0;
};

ReferenceRuns& reference() {
  static ReferenceRuns runs = [] {
    ReferenceRuns r;
    auto cfg = load_config(FBSQ_SOURCE_DIR "/configs/reference.ini");
    const auto t0 = std::chrono::steady_clock::now();
    r.coarse = run_simulation(cfg);
    r.coarse_seconds = seconds_since(t0);
    cfg.time.dt_max *= 0.5;
    cfg.time.sample_every *= 2;
    r.fine = run_simulation(cfg);
    return r;
  }();
  return runs;
}

// ---------------------------------------------------------------------------

Outcome temperature_identity() {
  const auto& r = reference();
  if (r.coarse.summary.status != RunStatus::finished) return {false, r.coarse.summary.message};
  const double coarse = *r.coarse.summary.temperature_cumulative;
  const double fine = *r.fine.summary.temperature_cumulative;
  const double gain = coarse / fine;
  const bool ok = coarse <= 1e-4 && gain >= 3.0 && r.coarse_seconds <= 300.0;
  return {ok, "cumulative residual " + num(coarse) + " at dt=1e-3, " + num(fine) + " at dt=5e-4 (ratio " + num(gain) +
                  "), reference run " + num(r.coarse_seconds) + " s"};
}

Outcome velocity_balance() {
  const auto& s = reference().coarse.summary;
  const double v = *s.velocity_residual;
  return {v <= 1e-3, "residual per unit time " + num(v) + " (cumulative form " + num(*s.velocity_cumulative) + ")"};
}

Outcome max_principle() {
  const auto& mp = *reference().coarse.summary.max_principle;
  std::string d;
  for (std::size_t k = 0; k < mp.p_list.size(); ++k)
    d += (k ? ", " : "") + std::string("p=") + detail::format_double(mp.p_list[k]) + ": " + num(mp.worst_ratio[k]);
  return {mp.passed(), "worst ||theta(t)||_p / ||theta_0||_p: " + d};
}

// Pure fractional heat flow from power-law data, run long enough to cover
// the resolvable band.
struct HeatRun {
  std::vector<DiagnosticsRecord> records;
  SpectralField theta0;
  ResolvabilityGate gate;
  double alpha = 0.8, a = 0.75, s0 = 1.5;
};

HeatRun& heat() {
  static HeatRun run = [] {
    HeatRun h;
    auto grid = Grid::make(512, 400.0 * kPi);
    InitSpec spec;
    spec.seed = 9;
    spec.envelope_exponent = h.a;
    spec.xi_c = 1e6;
    spec.nonnegative_shift = false;
    auto s = make_initial_data(spec, grid).state;
    h.theta0 = s.theta;
    PhysParams p;
    p.alpha = h.alpha;
    p.epsilon = 0.0;
    p.advection = false;
    p.buoyancy = false;
    DiagnosticsSettings cfg;
    cfg.alpha = h.alpha;
    cfg.s0 = h.s0;
    cfg.beta_list = {1.03 * h.s0 / h.alpha};
    h.gate = ResolvabilityGate{grid->box_length(), cfg.beta_list[0], h.alpha, 4.0};
    StepOptions opt;
    opt.dt_max = 1e9;
    Recorder rec(cfg, p, s, 1);
    Stepper st(grid, p, opt);
    const double dt = 0.1;
    while (s.t < h.gate.latest()) {
      st.advance(s, std::min(dt, h.gate.latest() - s.t));
      rec.after_step(s, st.last_rates());
    }
    rec.finish(s);
    h.records = rec.records();
    return h;
  }();
  return run;
}

Outcome decay_rates() {
  auto& h = heat();
  const auto fit = fit_decay(h.records, 3.0, h.gate.latest(), h.s0, h.gate);
  const double expected = -(2.0 * h.a + 2.0) / (2.0 * h.alpha);
  const double rel = std::abs(fit.fitted_slope / expected - 1.0);
  const auto& nl = reference().coarse.summary;
  if (!nl.fit) return {false, "nonlinear fit refused: " + nl.fit_error};
  const double bound = nl.fit->theoretical_slope + 0.1;
  const bool ok = rel <= 0.05 && nl.fit->fitted_slope <= bound;
  return {ok, "pure heat slope " + num(fit.fitted_slope) + " vs " + num(expected) + " (" + num(100 * rel) + "% off) on [3, " +
                  num(fit.t_b) + "]; nonlinear slope " + num(nl.fit->fitted_slope) + " <= " + num(bound) + " on [" +
                  num(nl.fit->t_a) + ", " + num(nl.fit->t_b) + "]"};
}

Outcome low_frequency() {
  auto& h = heat();
  const double beta = 1.03 * h.s0 / h.alpha;
  std::size_t violations = 0;
  double worst = 0.0;
  for (const auto& r : h.records) {
    const double bound = heat_low_frequency_bound(h.theta0, schonbek_radius(r.t, beta, h.alpha), h.s0);
    if (r.low_freq_energy[0] > bound) ++violations;
    if (bound > 0.0) worst = std::max(worst, r.low_freq_energy[0] / bound);
  }
  const auto& lf = reference().coarse.summary.low_frequency.front();
  const bool ok = violations == 0 && lf.samples >= 2 && lf.spread() <= 2.0;
  return {ok, "pure heat: " + std::to_string(violations) + " of " + std::to_string(h.records.size()) +
                  " samples above the bound (largest ratio " + num(worst) + "); nonlinear ratio spread " + num(lf.spread()) +
                  " over " + std::to_string(lf.samples) + " samples"};
}

Outcome littlewood_paley() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = lp::run_lp_suites(Grid::make(128, 2.0 * kPi), 100, 2024);
  const double secs = seconds_since(t0);
  auto value = [&](const char* suite, const char* check) {
    for (const auto& c : rep.find(suite)->checks)
      if (c.name == check) return c.value;
    return std::nan("");
  };
  std::ostringstream d;
  d << "reconstruction " << num(value("reconstruction", "inhomogeneous_rel_error")) << ", orthogonality "
    << num(value("orthogonality", "separated_block_product_rel")) << ", Bernstein spread "
    << num(std::max(value("bernstein", "annulus_lower_spread_over_j"), value("bernstein", "annulus_upper_spread_over_j")))
    << ", commutator (constant v) " << num(value("commutator", "constant_velocity_rel")) << ", Bony "
    << num(value("bony", "reconstruction_rel")) << "; " << num(secs) << " s";
  return {rep.passed() && secs <= 120.0, d.str()};
}

Outcome admissibility() {
  std::size_t nonempty = 0, total = 0, mismatches = 0;
  std::vector<double> alphas;
  for (int k = 0; k <= 6; ++k) alphas.push_back(0.7 + 0.05 * k);
  for (double a : alphas) {
    const auto region = enumerate_region({a}, 40, 60, {1.25 * wp_p_lower(a)});
    ++total;
    if (!region.summaries[0].empty()) ++nonempty;
    mismatches += region.summaries[0].recheck_mismatches;
  }
  std::size_t empty_low = 0;
  std::string binding;
  for (double a : {0.5, 0.6, 2.0 / 3.0}) {
    const auto region = enumerate_region({a}, 20, 30, {100.0});
    if (region.summaries[0].empty()) ++empty_low;
    binding = region.summaries[0].binding;
    mismatches += region.summaries[0].recheck_mismatches;
  }
  for (const auto& line : window_discrepancies(0.8)) std::printf("    %s\n", line.c_str());
  const bool ok = nonempty == total && empty_low == 3 && mismatches == 0;
  return {ok, std::to_string(nonempty) + "/" + std::to_string(total) + " alphas in [0.7, 1] nonempty, " +
                  std::to_string(empty_low) + "/3 alphas <= 2/3 empty (binding " + binding + "), " +
                  std::to_string(mismatches) + " exact re-check mismatches"};
}

Outcome stability() {
  const auto cfg = load_config(FBSQ_SOURCE_DIR "/configs/reference.ini");
  auto grid = Grid::make(cfg.grid.n, cfg.grid.box_length);
  const auto base = make_initial_data(cfg.init, grid).state;
  StabilityOptions opt;
  opt.dt = cfg.time.dt_max;
  opt.t_end = cfg.time.t_end;
  opt.sample_every = 100;
  opt.gamma = gamma_exponent(cfg.phys.alpha, cfg.diagnostics.p);
  const auto r = stability_experiment(base, {base, perturb_theta(base, 1e-6, 99), perturb_theta(base, 0.5e-6, 99)},
                                      cfg.phys, opt);
  const auto ratios = sqrt_y_ratios(r[1], r[2]);
  double lo = kInfinity, hi = 0.0;
  for (double x : ratios) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const bool ok = r[0].identical() && lo >= 1.9 && hi <= 2.1 && std::isfinite(r[1].k_fit);
  return {ok, std::string("identical copy Y = 0 bitwise: ") + (r[0].identical() ? "yes" : "no") +
                  "; sqrt(Y) ratio under halving in [" + num(lo) + ", " + num(hi) + "]; Y(T)/Y(0+) = " + num(r[1].growth) +
                  ", K = " + num(r[1].k_fit)};
}

Outcome cross_validation() {
  auto grid = Grid::make(128, 2.0 * kPi);
  InitSpec spec;
  spec.seed = 21;
  spec.amp_theta = 0.0;
  spec.amp_u = 0.25;
  spec.xi_c = 3.0;
  auto s = make_initial_data(spec, grid).state;
  PhysParams p;
  p.epsilon = 0.0;
  oracle::VorticityNS ref(128, 2.0 * kPi, 1.0);
  const auto w = curl(s.u);
  ref.w.assign(w.coeffs().begin(), w.coeffs().end());
  ref.run(1.0, 2e-3);
  Stepper st(grid, p);
  for (int k = 0; k < 4000; ++k) st.advance(s, 2.5e-4);
  std::vector<oracle::cplx> ux, uy;
  ref.velocity(ux, uy);
  const VectorField other{SpectralField(grid, ux), SpectralField(grid, uy)};
  const double rel = l2_norm(s.u - other) / l2_norm(other);
  return {rel <= 1e-5, "relative L2 velocity difference at t=1: " + num(rel)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"temperature energy identity", temperature_identity},
      {"velocity energy balance", velocity_balance},
      {"L^p maximum principle", max_principle},
      {"decay rates", decay_rates},
      {"low-frequency splitting", low_frequency},
      {"Littlewood-Paley suite", littlewood_paley},
      {"parameter windows", admissibility},
      {"uniqueness and stability", stability},
      {"cross-validation against a vorticity solver", cross_validation},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
