#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fbsq/checkpoint.hpp"
#include "fbsq/config.hpp"
#include "fbsq/diagnostics.hpp"
#include "fbsq/io.hpp"

namespace fbsq {

enum class RunStatus { finished, non_finite };

/// Ratio of the measured low-frequency energy to E0^2 <t>^{-2 s0/alpha}
/// over the fit window, for one beta.
struct LowFrequencyRatio {
  double beta = 0.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::size_t samples = 0;
  double spread() const { return min_ratio > 0.0 ? max_ratio / min_ratio : kInfinity; }
};

struct RunSummary {
  RunStatus status = RunStatus::finished;
  std::string message;
  std::size_t steps = 0;
  double t_final = 0.0;
  InitialSize initial;
  double shift = 0.0;
  std::optional<double> temperature_residual, temperature_cumulative;
  std::optional<double> velocity_residual, velocity_cumulative;
  std::optional<MaxPrincipleReport> max_principle;
  std::optional<DecayFit> fit;
  std::string fit_error;
  std::vector<LowFrequencyRatio> low_frequency;
  double decay_constant = 0.0;  // max ||theta||_2 <t>^{s0/alpha} / E0 over the window
  std::vector<std::string> warnings;
};

struct RunOutput {
  RunConfig config;
  std::vector<DiagnosticsRecord> records;
  FlowState final_state;
  RunSummary summary;
};

/// Called at every sample with the latest record.
using SampleHook = std::function<void(const DiagnosticsRecord&)>;

namespace detail {

template <typename Fn>
std::optional<double> guarded(Fn&& f) {
  try {
    return f();
  } catch (const TooFewSamples&) {
    return std::nullopt;
  }
}

inline void summarize(RunOutput& out) {
  const auto& c = out.config;
  auto& s = out.summary;
  const auto& rec = out.records;
  s.temperature_residual = guarded([&] { return temperature_balance_residual(rec); });
  s.temperature_cumulative = guarded([&] { return cumulative_temperature_residual(rec); });
  s.velocity_residual = guarded([&] { return velocity_balance_residual(rec); });
  s.velocity_cumulative = guarded([&] { return cumulative_velocity_residual(rec); });
  s.max_principle = max_principle_report(rec, c.diagnostics.p_list);

  const auto betas = c.betas();
  const ResolvabilityGate gate{c.grid.box_length, betas.front(), c.phys.alpha, 4.0};
  const double ta = c.diagnostics.fit_start;
  const double tb = c.diagnostics.fit_end > 0.0 ? c.diagnostics.fit_end : gate.latest();
  try {
    s.fit = fit_decay(rec, ta, std::min(tb, s.t_final), c.diagnostics.s0, gate);
  } catch (const WindowUnresolvable& e) {
    s.fit_error = e.what();
  } catch (const TooFewSamples& e) {
    s.fit_error = e.what();
  }

  const double e0 = s.initial.e0;
  const double sigma = c.diagnostics.s0 / c.phys.alpha;
  for (std::size_t b = 0; b < betas.size(); ++b) {
    LowFrequencyRatio r;
    r.beta = betas[b];
    r.min_ratio = kInfinity;
    for (const auto& x : rec) {
      if (x.t < ta || x.t > tb) continue;
      if (schonbek_radius(x.t, betas[b], c.phys.alpha) < 2.0 * std::numbers::pi / c.grid.box_length) continue;
      const double shape = e0 * e0 * std::pow(bracket(x.t), -2.0 * sigma);
      if (!(shape > 0.0)) continue;
      const double ratio = x.low_freq_energy[b] / shape;
      r.min_ratio = std::min(r.min_ratio, ratio);
      r.max_ratio = std::max(r.max_ratio, ratio);
      ++r.samples;
    }
    if (r.samples == 0) r.min_ratio = 0.0;
    s.low_frequency.push_back(r);
  }
  if (e0 > 0.0)
    for (const auto& x : rec)
      if (x.t >= ta && x.t <= tb) s.decay_constant = std::max(s.decay_constant, x.l2_theta * std::pow(bracket(x.t), sigma) / e0);
}

}  // namespace detail

/// Runs one configuration in memory. NonFiniteState ends the run early with
/// the records gathered so far; other errors propagate.
inline RunOutput run_simulation(const RunConfig& config, const SampleHook& on_sample = {}) {
  const auto report = validate(config);
  RunOutput out;
  out.config = config;
  out.summary.warnings = report.warnings;
  auto grid = Grid::make(config.grid.n, config.grid.box_length);
  auto init = make_initial_data(config.init, grid);
  FlowState s = std::move(init.state);
  out.summary.shift = init.shift;
  out.summary.initial = e0_functional(s.theta, s.u, config.diagnostics.q, config.diagnostics.s0);

  auto settings = config.diagnostics_settings();
  settings.e0 = out.summary.initial.e0;
  Recorder rec(settings, config.phys, s, config.time.sample_every);
  Stepper stepper(grid, config.phys, config.step_options());
  std::size_t seen = 1;
  if (on_sample) on_sample(rec.records().back());

  const double t_end = config.time.t_end;
  const double dt_max = config.time.dt_max;
  try {
    while (true) {
      const double remaining = t_end - s.t;
      if (remaining <= 1e-9 * dt_max) break;
      // Land on t_end exactly instead of leaving a sliver for one more step.
      const double cap = remaining < dt_max * (1.0 + 1e-9) ? remaining : dt_max;
      stepper.advance_capped(s, cap);
      ++out.summary.steps;
      rec.after_step(s, stepper.last_rates());
      if (on_sample && rec.records().size() > seen) {
        seen = rec.records().size();
        on_sample(rec.records().back());
      }
    }
    rec.finish(s);
  } catch (const NonFiniteState& e) {
    out.summary.status = RunStatus::non_finite;
    out.summary.message = e.what();
  }
  out.summary.t_final = s.t;
  out.records = rec.records();
  out.final_state = std::move(s);
  detail::summarize(out);
  return out;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace detail {

inline nlohmann::json number_or_null(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

}  // namespace detail

inline nlohmann::json summary_json(const RunOutput& out) {
  using nlohmann::json;
  const auto& s = out.summary;
  const auto& c = out.config;
  json j;
  j["schema"] = kConfigSchema;
  j["status"] = s.status == RunStatus::finished ? "finished" : "non_finite";
  if (!s.message.empty()) j["message"] = s.message;
  j["steps"] = s.steps;
  j["t_final"] = s.t_final;
  j["samples"] = out.records.size();
  j["initial"] = {{"script_e0", s.initial.script_e0}, {"e0", s.initial.e0}, {"theta_shift", s.shift}};
  j["residuals"] = {{"temperature_windowed", detail::number_or_null(s.temperature_residual)},
                    {"temperature_cumulative", detail::number_or_null(s.temperature_cumulative)},
                    {"velocity_windowed", detail::number_or_null(s.velocity_residual)},
                    {"velocity_cumulative", detail::number_or_null(s.velocity_cumulative)}};
  if (s.max_principle) {
    json mp = json::array();
    for (std::size_t k = 0; k < s.max_principle->p_list.size(); ++k)
      mp.push_back({{"p", detail::format_double(s.max_principle->p_list[k])},
                    {"worst_ratio", s.max_principle->worst_ratio[k]},
                    {"worst_time", s.max_principle->worst_time[k]}});
    j["max_principle"] = {{"tolerance", s.max_principle->tolerance}, {"passed", s.max_principle->passed()}, {"by_p", mp}};
  }
  if (s.fit) {
    const auto& f = *s.fit;
    j["decay_fit"] = {{"t_a", f.t_a},
                      {"t_b", f.t_b},
                      {"fitted_slope", f.fitted_slope},
                      {"slope_stderr", f.slope_stderr},
                      {"intercept", f.intercept},
                      {"theoretical_slope", f.theoretical_slope},
                      {"samples", f.samples},
                      {"upper_bound_holds", f.fitted_slope <= f.theoretical_slope + 0.1}};
  } else {
    j["decay_fit"] = {{"error", s.fit_error}};
  }
  json lf = json::array();
  for (const auto& r : s.low_frequency)
    lf.push_back({{"beta", r.beta},
                  {"samples", r.samples},
                  {"min_ratio", r.min_ratio},
                  {"max_ratio", r.max_ratio},
                  {"spread", detail::number_or_null(r.spread())}});
  j["low_frequency"] = lf;
  j["empirical_constants"] = {{"decay_C", s.decay_constant}};
  j["admissibility_warnings"] = s.warnings;
  j["config"] = {{"n", c.grid.n}, {"box_length", c.grid.box_length}, {"alpha", c.phys.alpha},
                 {"epsilon", c.phys.epsilon}, {"s0", c.diagnostics.s0}, {"q", c.diagnostics.q}};
  return j;
}

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open for writing: " + p.string());
  out << text;
  if (!out) throw IoFailure("write failed: " + p.string());
}

}  // namespace detail

/// Writes config.ini, series.csv, summary.json and final.ckpt (as enabled).
inline void write_artifacts(const RunOutput& out, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create run directory " + dir.string() + ": " + ec.message());
  detail::write_text(dir / "config.ini", serialize_config(out.config));
  auto settings = out.config.diagnostics_settings();
  if (out.config.output.wants("csv")) write_csv_file((dir / "series.csv").string(), settings, out.records);
  if (out.config.output.wants("json")) detail::write_text(dir / "summary.json", summary_json(out).dump(2) + "\n");
  if (out.config.output.wants("checkpoint")) {
    const auto path = (dir / "final.ckpt").string();
    if (out.config.output.checkpoint_precision == "float")
      write_checkpoint<float>(path, out.final_state, out.config.phys, out.config.init.seed);
    else
      write_checkpoint<double>(path, out.final_state, out.config.phys, out.config.init.seed);
  }
}

}  // namespace fbsq
