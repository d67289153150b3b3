#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fbsq/admissibility.hpp"
#include "fbsq/diagnostics.hpp"
#include "fbsq/errors.hpp"
#include "fbsq/solver.hpp"

// Run configuration: one INI file, flat section.key paths. The symbol table
// lives in docs/config_schema.md.
namespace fbsq {

inline constexpr const char* kConfigSchema = "fbsq-config-v1";

struct GridConfig {
  std::size_t n = 128;
  double box_length = 64.0 * std::numbers::pi;
};

struct TimeConfig {
  double dt_max = 1e-3;
  double t_end = 10.0;
  double cfl_factor = 0.4;
  std::size_t sample_every = 10;
};

struct DiagnosticsConfig {
  double s0 = 1.5;
  double q = 1.5;
  double p = 24.0;  // Besov integrability, also the p of the admissibility check
  std::vector<double> p_list{2.0, 4.0, kInfinity};
  std::vector<double> beta_list;  // empty: one beta = 1.03 s0 / alpha
  double fit_start = 2.0;
  double fit_end = 0.0;  // 0: end of the resolvable band
  double c_mu = 1.0;
};

struct OutputConfig {
  std::string dir = "runs/reference";
  std::vector<std::string> formats{"csv", "json", "checkpoint"};
  std::string checkpoint_precision = "double";

  bool wants(std::string_view f) const {
    for (const auto& x : formats)
      if (x == f) return true;
    return false;
  }
};

struct RunConfig {
  GridConfig grid;
  PhysParams phys;
  InitSpec init;
  TimeConfig time;
  DiagnosticsConfig diagnostics;
  OutputConfig output;

  /// The nonlinear problem is the one the admissibility windows speak about.
  bool nonlinear() const { return phys.advection || phys.buoyancy; }

  std::vector<double> betas() const {
    if (!diagnostics.beta_list.empty()) return diagnostics.beta_list;
    return {1.03 * diagnostics.s0 / phys.alpha};
  }

  DiagnosticsSettings diagnostics_settings() const {
    DiagnosticsSettings d;
    d.alpha = phys.alpha;
    d.s0 = diagnostics.s0;
    d.q = diagnostics.q;
    d.besov_p = diagnostics.p;
    d.p_list = diagnostics.p_list;
    d.beta_list = betas();
    return d;
  }

  StepOptions step_options() const {
    StepOptions o;
    o.cfl_factor = time.cfl_factor;
    o.dt_max = time.dt_max;
    return o;
  }
};

// ---------------------------------------------------------------------------
// Scalar text forms

namespace detail {

/// Shortest text that reads back to the same double; "inf" for infinity.
inline std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return {buf, r.ptr};
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, std::string_view text) {
  const auto s = trim(text);
  if (s == "inf" || s == "infinity") return kInfinity;
  // Optional "pi" suffix: "64pi" or "64 pi".
  std::string_view body = s;
  double scale = 1.0;
  if (body.size() >= 2 && body.substr(body.size() - 2) == "pi") {
    body.remove_suffix(2);
    while (!body.empty() && body.back() == ' ') body.remove_suffix(1);
    scale = std::numbers::pi;
    if (body.empty()) return scale;
  }
  double v = 0.0;
  const auto r = std::from_chars(body.data(), body.data() + body.size(), v);
  if (r.ec != std::errc{} || r.ptr != body.data() + body.size())
    throw ConfigInvalid(key + ": not a number: '" + std::string(text) + "'");
  return v * scale;
}

/// Writes multiples of pi as "<m>pi" when that reads back bit-identically.
inline std::string format_length(double x) {
  const auto m = format_double(x / std::numbers::pi);
  if (m.size() <= 8 && parse_double("", m + "pi") == x) return m + "pi";
  return format_double(x);
}

inline std::uint64_t parse_uint(const std::string& key, std::string_view text) {
  const auto s = trim(text);
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw ConfigInvalid(key + ": not a non-negative integer: '" + std::string(text) + "'");
  return v;
}

inline bool parse_bool(const std::string& key, std::string_view text) {
  const auto s = trim(text);
  if (s == "true" || s == "on" || s == "1") return true;
  if (s == "false" || s == "off" || s == "0") return false;
  throw ConfigInvalid(key + ": expected true or false, got '" + std::string(text) + "'");
}

inline std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::vector<double> parse_double_list(const std::string& key, std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(key, item));
  return out;
}

inline std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t k = 0; k < items.size(); ++k) out += (k ? ", " : "") + items[k];
  return out;
}

inline std::string format_double_list(const std::vector<double>& xs) {
  std::vector<std::string> s;
  for (double x : xs) s.push_back(format_double(x));
  return join(s);
}

// Every recognised key; anything else in a file is rejected as a typo.
inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "schema",
      "grid.n", "grid.box_length",
      "phys.alpha", "phys.epsilon", "phys.kappa", "phys.mu_profile", "phys.advection", "phys.buoyancy",
      "init.seed", "init.amp_theta", "init.amp_u", "init.envelope_exponent", "init.xi_c", "init.shift",
      "time.dt_max", "time.t_end", "time.cfl_factor", "time.sample_every",
      "diagnostics.s0", "diagnostics.q", "diagnostics.p", "diagnostics.p_list", "diagnostics.beta_list",
      "diagnostics.fit_start", "diagnostics.fit_end", "diagnostics.c_mu",
      "output.dir", "output.formats", "output.checkpoint_precision"};
  return keys;
}

inline void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) throw ConfigInvalid(key + ": " + why);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Validation

/// Messages about soft constraints; hard failures throw ConfigInvalid.
struct ConfigReport {
  AdmissibleTuple tuple;
  std::vector<std::string> warnings;
};

inline ConfigReport validate(const RunConfig& c) {
  using detail::require;
  try {
    Grid::make(c.grid.n, c.grid.box_length);
  } catch (const InvalidGrid& e) {
    throw ConfigInvalid(std::string("grid: ") + e.what());
  }
  const auto& p = c.phys;
  require(p.alpha > 0.0 && p.alpha <= 2.0, "phys.alpha", "must lie in (0, 2]");
  require(p.epsilon >= 0.0 && p.epsilon < 1.0, "phys.epsilon", "must lie in [0, 1)");
  require(p.kappa > 0.0 && std::isfinite(p.kappa), "phys.kappa", "must be positive");
  const auto& i = c.init;
  require(i.amp_theta >= 0.0 && std::isfinite(i.amp_theta), "init.amp_theta", "must be non-negative");
  require(i.amp_u >= 0.0 && std::isfinite(i.amp_u), "init.amp_u", "must be non-negative");
  require(i.envelope_exponent >= 0.0 && std::isfinite(i.envelope_exponent), "init.envelope_exponent",
          "must be non-negative");
  require(i.xi_c > 0.0, "init.xi_c", "must be positive");
  const auto& t = c.time;
  require(t.dt_max > 0.0 && std::isfinite(t.dt_max), "time.dt_max", "must be positive");
  require(t.t_end > 0.0 && std::isfinite(t.t_end), "time.t_end", "must be positive");
  require(t.cfl_factor > 0.0 && t.cfl_factor <= 1.0, "time.cfl_factor", "must lie in (0, 1]");
  require(t.sample_every >= 1, "time.sample_every", "must be at least 1");
  const auto& d = c.diagnostics;
  require(d.s0 > 0.0 && std::isfinite(d.s0), "diagnostics.s0", "must be positive");
  require(d.q > 1.0 && std::isfinite(d.q), "diagnostics.q", "must exceed 1");
  require(d.p >= 1.0, "diagnostics.p", "must be at least 1");
  require(!d.p_list.empty(), "diagnostics.p_list", "must not be empty");
  for (double x : d.p_list) require(x >= 1.0, "diagnostics.p_list", "entries must be at least 1");
  for (double b : c.betas())
    require(b > d.s0 / p.alpha, "diagnostics.beta_list", "entries must exceed s0 / alpha");
  require(d.fit_start >= 1.0, "diagnostics.fit_start", "fits start at t >= 1");
  require(d.fit_end == 0.0 || d.fit_end > d.fit_start, "diagnostics.fit_end", "must be 0 or exceed fit_start");
  require(d.c_mu > 0.0, "diagnostics.c_mu", "must be positive");
  require(!c.output.dir.empty(), "output.dir", "must not be empty");
  for (const auto& f : c.output.formats)
    require(f == "csv" || f == "json" || f == "checkpoint", "output.formats", "unknown format '" + f + "'");
  require(c.output.checkpoint_precision == "double" || c.output.checkpoint_precision == "float",
          "output.checkpoint_precision", "must be double or float");

  ConfigReport rep;
  rep.tuple = check_wellposedness(p.alpha, d.p, d.q, d.s0, p.epsilon, d.c_mu);
  for (const auto& v : rep.tuple.verdicts) {
    if (v.satisfied) continue;
    const std::string msg = "admissibility constraint " + v.name + " fails (slack " + detail::format_double(v.slack) + ")";
    // Linear verification runs sit outside the windows on purpose.
    if (v.hard && c.nonlinear()) throw ConfigInvalid(msg);
    rep.warnings.push_back(msg + (v.hard ? "; allowed because the run is linear" : "; soft constraint"));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Text form

inline RunConfig parse_config(std::istream& in, const std::string& origin = "<config>") {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigInvalid(origin + ": " + e.what());
  }
  std::vector<std::pair<std::string, std::string>> flat;
  static const std::set<std::string> sections{"grid", "phys", "init", "time", "diagnostics", "output"};
  for (const auto& [k, v] : tree) {
    if (v.empty() && sections.count(k) && v.data().empty()) continue;  // empty section
    if (v.empty()) {
      flat.emplace_back(k, v.data());
    } else {
      for (const auto& [k2, v2] : v) flat.emplace_back(k + "." + k2, v2.data());
    }
  }
  for (const auto& [k, v] : flat)
    if (!detail::known_keys().count(k)) throw ConfigInvalid(origin + ": unknown key '" + k + "'");

  const auto schema = tree.get_optional<std::string>("schema");
  if (!schema) throw ConfigInvalid(origin + ": missing schema tag (expected " + kConfigSchema + ")");
  if (detail::trim(*schema) != kConfigSchema)
    throw ConfigInvalid(origin + ": schema '" + *schema + "' is not " + kConfigSchema);

  RunConfig c;
  for (const auto& [k, v] : flat) {
    using namespace detail;
    if (k == "grid.n") c.grid.n = parse_uint(k, v);
    else if (k == "grid.box_length") c.grid.box_length = parse_double(k, v);
    else if (k == "phys.alpha") c.phys.alpha = parse_double(k, v);
    else if (k == "phys.epsilon") c.phys.epsilon = parse_double(k, v);
    else if (k == "phys.kappa") c.phys.kappa = parse_double(k, v);
    else if (k == "phys.mu_profile") {
      const auto mp = parse_mu_profile(trim(v));
      if (!mp) throw ConfigInvalid(k + ": unknown profile '" + v + "'");
      c.phys.mu_profile = *mp;
    }
    else if (k == "phys.advection") c.phys.advection = parse_bool(k, v);
    else if (k == "phys.buoyancy") c.phys.buoyancy = parse_bool(k, v);
    else if (k == "init.seed") c.init.seed = parse_uint(k, v);
    else if (k == "init.amp_theta") c.init.amp_theta = parse_double(k, v);
    else if (k == "init.amp_u") c.init.amp_u = parse_double(k, v);
    else if (k == "init.envelope_exponent") c.init.envelope_exponent = parse_double(k, v);
    else if (k == "init.xi_c") c.init.xi_c = parse_double(k, v);
    else if (k == "init.shift") c.init.nonnegative_shift = parse_bool(k, v);
    else if (k == "time.dt_max") c.time.dt_max = parse_double(k, v);
    else if (k == "time.t_end") c.time.t_end = parse_double(k, v);
    else if (k == "time.cfl_factor") c.time.cfl_factor = parse_double(k, v);
    else if (k == "time.sample_every") c.time.sample_every = parse_uint(k, v);
    else if (k == "diagnostics.s0") c.diagnostics.s0 = parse_double(k, v);
    else if (k == "diagnostics.q") c.diagnostics.q = parse_double(k, v);
    else if (k == "diagnostics.p") c.diagnostics.p = parse_double(k, v);
    else if (k == "diagnostics.p_list") c.diagnostics.p_list = parse_double_list(k, v);
    else if (k == "diagnostics.beta_list") c.diagnostics.beta_list = parse_double_list(k, v);
    else if (k == "diagnostics.fit_start") c.diagnostics.fit_start = parse_double(k, v);
    else if (k == "diagnostics.fit_end") c.diagnostics.fit_end = parse_double(k, v);
    else if (k == "diagnostics.c_mu") c.diagnostics.c_mu = parse_double(k, v);
    else if (k == "output.dir") c.output.dir = trim(v);
    else if (k == "output.formats") c.output.formats = split_list(v);
    else if (k == "output.checkpoint_precision") c.output.checkpoint_precision = trim(v);
  }
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot read config file: " + path);
  return parse_config(in, path);
}

/// Canonical text: every key, fixed order, shortest round-trip numbers.
inline std::string serialize_config(const RunConfig& c) {
  using namespace detail;
  std::ostringstream os;
  auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
  os << "schema = " << kConfigSchema << "\n\n[grid]\n";
  kv("n", std::to_string(c.grid.n));
  kv("box_length", format_length(c.grid.box_length));
  os << "\n[phys]\n";
  kv("alpha", format_double(c.phys.alpha));
  kv("epsilon", format_double(c.phys.epsilon));
  kv("kappa", format_double(c.phys.kappa));
  kv("mu_profile", to_string(c.phys.mu_profile));
  kv("advection", c.phys.advection ? "true" : "false");
  kv("buoyancy", c.phys.buoyancy ? "true" : "false");
  os << "\n[init]\n";
  kv("seed", std::to_string(c.init.seed));
  kv("amp_theta", format_double(c.init.amp_theta));
  kv("amp_u", format_double(c.init.amp_u));
  kv("envelope_exponent", format_double(c.init.envelope_exponent));
  kv("xi_c", format_double(c.init.xi_c));
  kv("shift", c.init.nonnegative_shift ? "true" : "false");
  os << "\n[time]\n";
  kv("dt_max", format_double(c.time.dt_max));
  kv("t_end", format_double(c.time.t_end));
  kv("cfl_factor", format_double(c.time.cfl_factor));
  kv("sample_every", std::to_string(c.time.sample_every));
  os << "\n[diagnostics]\n";
  kv("s0", format_double(c.diagnostics.s0));
  kv("q", format_double(c.diagnostics.q));
  kv("p", format_double(c.diagnostics.p));
  kv("p_list", format_double_list(c.diagnostics.p_list));
  kv("beta_list", format_double_list(c.diagnostics.beta_list));
  kv("fit_start", format_double(c.diagnostics.fit_start));
  kv("fit_end", format_double(c.diagnostics.fit_end));
  kv("c_mu", format_double(c.diagnostics.c_mu));
  os << "\n[output]\n";
  kv("dir", c.output.dir);
  kv("formats", join(c.output.formats));
  kv("checkpoint_precision", c.output.checkpoint_precision);
  return os.str();
}

}  // namespace fbsq
