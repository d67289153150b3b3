#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fbsq/admissibility.hpp"
#include "fbsq/config.hpp"
#include "fbsq/io.hpp"
#include "fbsq/lp_harness.hpp"
#include "fbsq/runner.hpp"
#include "fbsq/stability.hpp"

namespace fs = std::filesystem;
using namespace fbsq;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kBadInput = 1;     // config or flag errors, failed property suites
constexpr int kNonFinite = 2;    // blow-up; partial artifacts are on disk
constexpr int kIo = 3;
constexpr int kFitRefused = 4;   // window unresolvable or too few samples

std::string fmt(double x) { return detail::format_double(x); }

// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& config_path, const std::optional<std::string>& out_dir, bool quiet) {
  auto cfg = load_config(config_path);
  if (out_dir) cfg.output.dir = *out_dir;
  const auto rep = validate(cfg);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';

  const auto start = std::chrono::steady_clock::now();
  double next_report = 0.1 * cfg.time.t_end;
  const auto out = run_simulation(cfg, [&](const DiagnosticsRecord& r) {
    if (quiet || r.t < next_report) return;
    next_report += 0.1 * cfg.time.t_end;
    std::cerr << "t = " << r.t << "  ||theta'||_2 = " << r.l2_theta << "  ||u||_2 = " << r.l2_u << '\n';
  });
  write_artifacts(out, cfg.output.dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto& s = out.summary;
  std::cout << "run directory: " << cfg.output.dir << '\n'
            << "steps: " << s.steps << ", t = " << s.t_final << ", wall " << secs << " s\n";
  auto show = [](const char* name, std::optional<double> v) {
    std::cout << name << ": " << (v ? fmt(*v) : std::string("n/a")) << '\n';
  };
  show("temperature residual (cumulative)", s.temperature_cumulative);
  show("velocity residual (per unit time)", s.velocity_residual);
  if (s.fit)
    std::cout << "decay slope: " << s.fit->fitted_slope << " on [" << s.fit->t_a << ", " << s.fit->t_b
              << "], bound " << s.fit->theoretical_slope << '\n';
  else
    std::cout << "decay fit: " << s.fit_error << '\n';
  if (s.status == RunStatus::non_finite) {
    std::cerr << "error: " << s.message << " (partial results written)\n";
    return kNonFinite;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct ScanRange {
  double lo = 0.0, hi = 0.0, step = 0.0;
};

ScanRange parse_scan(const std::string& text) {
  const auto parts = detail::split_list([&] {
    std::string t = text;
    for (auto& ch : t)
      if (ch == ':') ch = ',';
    return t;
  }());
  if (parts.size() != 3) throw ConfigInvalid("--scan expects lo:hi:step, got '" + text + "'");
  ScanRange r{detail::parse_double("--scan", parts[0]), detail::parse_double("--scan", parts[1]),
              detail::parse_double("--scan", parts[2])};
  if (!(r.step > 0.0) || r.hi < r.lo) throw ConfigInvalid("--scan needs lo <= hi and step > 0");
  return r;
}

void print_tuple(const AdmissibleTuple& t) {
  for (const auto& v : t.verdicts)
    std::cout << "  " << v.name << (v.hard ? "" : " (soft)") << ": " << (v.satisfied ? "ok" : "FAILS")
              << ", slack " << fmt(v.slack) << '\n';
}

int cmd_admissible(std::optional<double> alpha, const std::optional<std::string>& scan, std::optional<double> q,
                   std::optional<double> s0, std::optional<double> p, double epsilon, double c_mu, std::size_t q_steps,
                   std::size_t s0_steps, const std::optional<std::string>& csv_out) {
  if (!alpha && !scan) throw ConfigInvalid("admissible needs --alpha or --scan");
  if (alpha) {
    std::cout << "alpha = " << fmt(*alpha) << ": " << describe_windows(*alpha) << '\n';
    if (q && s0) {
      const double pp = p ? *p : 1.25 * wp_p_lower(*alpha);
      const auto t = check_wellposedness(*alpha, pp, *q, *s0, epsilon, c_mu);
      std::cout << "tuple (alpha, p, q, s0) = (" << fmt(*alpha) << ", " << fmt(pp) << ", " << fmt(*q) << ", " << fmt(*s0)
                << "): " << (t.passed() ? "admissible" : "not admissible, binding " + t.binding()) << '\n';
      print_tuple(t);
      const auto d = check_decay_estimate(2, *alpha, *q, *s0);
      std::cout << "decay-estimate window, d = 2: " << (d.passed() ? "satisfied" : "fails on " + d.binding()) << '\n';
      print_tuple(d);
    }
    std::cout << "differences between the well-posedness and decay-estimate windows:\n";
    for (const auto& line : window_discrepancies(*alpha)) std::cout << "  - " << line << '\n';
  }
  if (scan) {
    const auto r = parse_scan(*scan);
    std::vector<std::string> rows;
    rows.push_back("alpha,nonempty,q_lower,q_upper,s0_lower,p_lower,scanned,passing,q_min,q_max,s0_min,s0_max,binding,recheck_mismatches");
    const auto count = static_cast<long>(std::floor((r.hi - r.lo) / r.step + 1e-9));
    for (long k = 0; k <= count; ++k) {
      const double a = r.lo + static_cast<double>(k) * r.step;
      ScanBox box;
      box.epsilon = epsilon;
      box.c_mu = c_mu;
      const double p_sample = std::isfinite(wp_p_lower(a)) ? 1.25 * wp_p_lower(a) : 100.0;
      const auto region = enumerate_region({a}, q_steps, s0_steps, {p_sample}, box);
      const auto& s = region.summaries.front();
      std::ostringstream os;
      os << fmt(a) << ',' << (s.empty() ? "false" : "true") << ',' << fmt(wp_q_lower(a)) << ',' << fmt(wp_q_upper(a)) << ','
         << fmt(wp_s0_lower(a)) << ',' << fmt(wp_p_lower(a)) << ',' << s.scanned << ',' << s.passing << ',';
      if (s.empty())
        os << ",,,,";
      else
        os << fmt(s.q_min) << ',' << fmt(s.q_max) << ',' << fmt(s.s0_min) << ',' << fmt(s.s0_max) << ',';
      os << s.binding << ',' << s.recheck_mismatches;
      rows.push_back(os.str());
    }
    if (csv_out) {
      std::ofstream out(*csv_out, std::ios::binary | std::ios::trunc);
      if (!out) throw IoFailure("cannot open for writing: " + *csv_out);
      for (const auto& row : rows) out << row << "\r\n";
    } else {
      for (const auto& row : rows) std::cout << row << '\n';
    }
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct FitWindow {
  double a = 0.0, b = 0.0;  // b = 0: end of the resolvable band
};

FitWindow parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigInvalid("--window expects a:b, got '" + text + "'");
  FitWindow w;
  w.a = detail::parse_double("--window", text.substr(0, colon));
  const auto tail = detail::trim(text.substr(colon + 1));
  w.b = tail.empty() || tail == "auto" ? 0.0 : detail::parse_double("--window", tail);
  return w;
}

int cmd_fit_decay(const std::string& csv_path, double alpha, double s0, const std::string& window,
                  std::optional<double> box_length, std::optional<double> beta) {
  const auto table = read_csv_file(csv_path);
  double box = 0.0;
  if (box_length) {
    box = *box_length;
  } else {
    const auto cfg_path = fs::path(csv_path).parent_path() / "config.ini";
    if (!fs::exists(cfg_path))
      throw ConfigInvalid("no config.ini next to " + csv_path + "; pass --box-length");
    box = load_config(cfg_path.string()).grid.box_length;
  }
  if (!(box > 0.0)) throw ConfigInvalid("--box-length must be positive");
  const ResolvabilityGate gate{box, beta ? *beta : 1.03 * s0 / alpha, alpha, 4.0};
  const auto w = parse_window(window);
  const double tb = w.b > 0.0 ? w.b : gate.latest();
  const auto fit = fit_decay(table.column("t"), table.column(columns::theta_l2()), w.a, tb, s0, gate);
  nlohmann::json j = {{"t_a", fit.t_a},
                      {"t_b", fit.t_b},
                      {"fitted_slope", fit.fitted_slope},
                      {"slope_stderr", fit.slope_stderr},
                      {"intercept", fit.intercept},
                      {"theoretical_slope", fit.theoretical_slope},
                      {"samples", fit.samples},
                      {"resolvable", fit.resolvable},
                      {"upper_bound_holds", fit.fitted_slope <= fit.theoretical_slope + 0.1}};
  std::cout << j.dump(2) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_verify_lp(int samples, std::size_t n, double box, std::uint64_t seed, std::optional<int> fault_shell,
                  const std::optional<std::string>& json_out) {
  auto grid = Grid::make(n, box);
  std::optional<lp::PartitionFault> fault;
  if (fault_shell) fault = lp::PartitionFault{*fault_shell, 0.9};
  const auto rep = lp::run_lp_suites(grid, samples, seed, fault);
  nlohmann::json j;
  j["samples"] = rep.samples;
  j["n"] = rep.n;
  j["seed"] = rep.seed;
  j["passed"] = rep.passed();
  for (const auto& s : rep.suites) {
    std::cout << s.name << ": " << (s.passed() ? "pass" : "FAIL") << '\n';
    nlohmann::json js;
    js["passed"] = s.passed();
    for (const auto& c : s.checks) {
      std::cout << "  " << c.name << (c.hard ? "" : " (soft)") << ": " << (c.count ? fmt(c.value) : std::string("-"))
                << (c.upper ? " <= " : " >= ") << fmt(c.limit) << (c.passed() ? "" : "  FAILED") << '\n';
      js["checks"].push_back({{"name", c.name},
                              {"hard", c.hard},
                              {"value", c.count && std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json()},
                              {"limit", c.limit},
                              {"passed", c.passed()}});
    }
    for (const auto& [name, value] : s.constants) {
      std::cout << "  constant " << name << " = " << fmt(value) << '\n';
      js["constants"][name] = value;
    }
    j["suites"][s.name] = js;
  }
  if (json_out) {
    std::ofstream out(*json_out, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open for writing: " + *json_out);
    out << j.dump(2) << '\n';
  }
  return rep.passed() ? kOk : kBadInput;
}

// ---------------------------------------------------------------------------

int cmd_stability(const std::string& config_path, double delta, std::optional<double> t_end, std::uint64_t seed,
                  const std::optional<std::string>& csv_out) {
  const auto cfg = load_config(config_path);
  for (const auto& w : validate(cfg).warnings) std::cerr << "warning: " << w << '\n';
  if (!(delta > 0.0)) throw ConfigInvalid("--delta must be positive");
  auto grid = Grid::make(cfg.grid.n, cfg.grid.box_length);
  const auto base = make_initial_data(cfg.init, grid).state;
  StabilityOptions opt;
  opt.dt = cfg.time.dt_max;
  opt.t_end = t_end ? *t_end : cfg.time.t_end;
  opt.sample_every = cfg.time.sample_every;
  opt.gamma = gamma_exponent(cfg.phys.alpha, cfg.diagnostics.p);
  const auto r = stability_experiment(base, {perturb_theta(base, delta, seed), perturb_theta(base, 0.5 * delta, seed)},
                                      cfg.phys, opt);
  const auto ratios = sqrt_y_ratios(r[0], r[1]);
  double lo = kInfinity, hi = 0.0;
  for (double x : ratios) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  std::cout << "gamma = " << fmt(opt.gamma) << "\n"
            << "delta = " << fmt(delta) << ": Y(T)/Y(0+) = " << fmt(r[0].growth) << ", fitted K = " << fmt(r[0].k_fit) << '\n'
            << "sqrt(Y_delta / Y_delta/2) in [" << fmt(lo) << ", " << fmt(hi) << "]\n";
  if (csv_out) {
    std::ofstream out(*csv_out, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open for writing: " + *csv_out);
    out << "t,du_L2,dtheta_L2,dtheta_B(s=0;p=" << fmt(opt.gamma) << ";r=inf),Y,Y_half\r\n";
    for (std::size_t k = 0; k < r[0].samples.size(); ++k) {
      const auto& a = r[0].samples[k];
      out << fmt(a.t) << ',' << fmt(a.du_l2) << ',' << fmt(a.dtheta_l2) << ',' << fmt(a.dtheta_besov) << ','
          << fmt(a.y) << ',' << fmt(r[1].samples[k].y) << "\r\n";
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional Boussinesq simulator and Littlewood-Paley toolkit"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "run a configuration and write CSV, JSON and a checkpoint");
  std::string sim_config;
  std::optional<std::string> sim_out;
  bool sim_quiet = false;
  sim->add_option("config", sim_config, "INI configuration file")->required();
  sim->add_option("--out", sim_out, "run directory (overrides output.dir)");
  sim->add_flag("-q,--quiet", sim_quiet, "no progress lines");

  auto* adm = app.add_subcommand("admissible", "parameter windows and region scans");
  std::optional<double> adm_alpha, adm_q, adm_s0, adm_p;
  std::optional<std::string> adm_scan, adm_csv;
  double adm_eps = 0.05, adm_cmu = 1.0;
  std::size_t adm_qsteps = 40, adm_s0steps = 60;
  adm->add_option("--alpha", adm_alpha, "dissipation order");
  adm->add_option("--scan", adm_scan, "alpha range lo:hi:step, one CSV row per alpha");
  adm->add_option("--q", adm_q, "check one tuple: q");
  adm->add_option("--s0", adm_s0, "check one tuple: s0");
  adm->add_option("--p", adm_p, "check one tuple: p (default 1.25 x lower bound)");
  adm->add_option("--epsilon", adm_eps, "viscosity contrast for the soft p bound");
  adm->add_option("--c-mu", adm_cmu, "constant in the soft p bound");
  adm->add_option("--q-steps", adm_qsteps, "interior q samples in (1, 2)");
  adm->add_option("--s0-steps", adm_s0steps, "interior s0 samples in (0, 3)");
  adm->add_option("--csv", adm_csv, "write the scan to this file");

  auto* fit = app.add_subcommand("fit-decay", "fit the L2 decay slope of a run's CSV");
  std::string fit_csv, fit_window = "2:auto";
  double fit_alpha = 0.0, fit_s0 = 0.0;
  std::optional<double> fit_box, fit_beta;
  fit->add_option("csv", fit_csv, "series.csv from a run")->required();
  fit->add_option("--alpha", fit_alpha, "dissipation order")->required();
  fit->add_option("--s0", fit_s0, "negative Sobolev index of the data")->required();
  fit->add_option("--window", fit_window, "t_a:t_b, t_b = auto for the end of the resolvable band");
  fit->add_option("--box-length", fit_box, "box length (default: from config.ini next to the CSV)");
  fit->add_option("--beta", fit_beta, "shell parameter (default 1.03 s0 / alpha)");

  auto* vlp = app.add_subcommand("verify-lp", "Littlewood-Paley property suites");
  int vlp_samples = 100;
  std::size_t vlp_n = 128;
  double vlp_box = 2.0 * std::numbers::pi;
  std::uint64_t vlp_seed = 2024;
  std::optional<int> vlp_fault;
  std::optional<std::string> vlp_json;
  vlp->add_option("--samples", vlp_samples, "random fields per suite");
  vlp->add_option("--grid", vlp_n, "grid size N");
  vlp->add_option("--box-length", vlp_box, "box length");
  vlp->add_option("--seed", vlp_seed, "base seed");
  vlp->add_option("--inject-fault", vlp_fault, "test hook: corrupt this shell of the partition")->group("");
  vlp->add_option("--json", vlp_json, "write the report as JSON");

  auto* stab = app.add_subcommand("stability", "co-evolve perturbed copies of a configuration");
  std::string stab_config;
  double stab_delta = 1e-6;
  std::optional<double> stab_t;
  std::uint64_t stab_seed = 99;
  std::optional<std::string> stab_csv;
  stab->add_option("config", stab_config, "INI configuration file")->required();
  stab->add_option("--delta", stab_delta, "relative size of the temperature perturbation");
  stab->add_option("--t-end", stab_t, "override time.t_end");
  stab->add_option("--seed", stab_seed, "perturbation seed");
  stab->add_option("--csv", stab_csv, "write the Y series to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*sim) return cmd_simulate(sim_config, sim_out, sim_quiet);
    if (*adm)
      return cmd_admissible(adm_alpha, adm_scan, adm_q, adm_s0, adm_p, adm_eps, adm_cmu, adm_qsteps, adm_s0steps, adm_csv);
    if (*fit) return cmd_fit_decay(fit_csv, fit_alpha, fit_s0, fit_window, fit_box, fit_beta);
    if (*vlp) return cmd_verify_lp(vlp_samples, vlp_n, vlp_box, vlp_seed, vlp_fault, vlp_json);
    if (*stab) return cmd_stability(stab_config, stab_delta, stab_t, stab_seed, stab_csv);
  } catch (const ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kBadInput;
  } catch (const MissingColumn& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kBadInput;
  } catch (const InvalidGrid& e) {
    std::cerr << "grid error: " << e.what() << '\n';
    return kBadInput;
  } catch (const GridTooCoarse& e) {
    std::cerr << "grid error: " << e.what() << '\n';
    return kBadInput;
  } catch (const NonFiniteState& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNonFinite;
  } catch (const IoFailure& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const WindowUnresolvable& e) {
    std::cerr << "fit refused: " << e.what() << '\n';
    return kFitRefused;
  } catch (const TooFewSamples& e) {
    std::cerr << "fit refused: " << e.what() << '\n';
    return kFitRefused;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kOk;
}
