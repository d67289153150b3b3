#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fbsq/config.hpp"
#include "fbsq/diagnostics.hpp"
#include "fbsq/errors.hpp"

// CSV time series (RFC 4180, CRLF rows). Column names carry their norm
// indices, e.g. theta_Hdot(s=-1.5) or theta_B(s=0.4;p=24;r=inf); the full
// list is in docs/csv_columns.md.
namespace fbsq {

namespace columns {

inline std::string hdot(const std::string& field, double s) { return field + "_Hdot(s=" + detail::format_double(s) + ")"; }
inline std::string lp(const std::string& field, double p) { return field + "_L(p=" + detail::format_double(p) + ")"; }
inline std::string besov(const std::string& field, double s, double p, double r) {
  return field + "_B(s=" + detail::format_double(s) + ";p=" + detail::format_double(p) + ";r=" + detail::format_double(r) + ")";
}
inline std::string low_freq(double beta) { return "theta_lowfreq(beta=" + detail::format_double(beta) + ")"; }

/// ||theta - mean||_2, the column decay fits read.
inline std::string theta_l2() { return hdot("theta", 0.0); }

}  // namespace columns

inline std::vector<std::string> csv_header(const DiagnosticsSettings& cfg) {
  std::vector<std::string> h{"t",
                             columns::theta_l2(),
                             columns::lp("u", 2.0),
                             columns::hdot("theta", 0.5 * cfg.alpha),
                             columns::hdot("u", 1.0),
                             columns::hdot("theta", -cfg.s0)};
  for (double p : cfg.p_list) h.push_back(columns::lp("theta", p));
  h.push_back(columns::besov("theta", 0.5 * cfg.alpha, cfg.besov_p, kInfinity));
  for (double b : cfg.beta_list) h.push_back(columns::low_freq(b));
  for (const char* n : {"rate_theta_dissipation", "rate_velocity_dissipation", "rate_buoyancy_work",
                        "int_theta_dissipation", "int_velocity_dissipation", "int_buoyancy_work"})
    h.emplace_back(n);
  return h;
}

inline std::vector<double> csv_row(const DiagnosticsRecord& r) {
  std::vector<double> v{r.t, r.l2_theta, r.l2_u, r.hdot_alpha2_theta, r.hdot1_u, r.hdot_neg_s0_theta};
  v.insert(v.end(), r.lp_theta.begin(), r.lp_theta.end());
  v.push_back(r.besov_theta);
  v.insert(v.end(), r.low_freq_energy.begin(), r.low_freq_energy.end());
  for (const auto* e : {&r.rates, &r.cumulative}) {
    v.push_back(e->theta_dissipation);
    v.push_back(e->velocity_dissipation);
    v.push_back(e->buoyancy_work);
  }
  return v;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace detail

inline void write_csv(std::ostream& os, const std::vector<std::string>& header, const std::vector<DiagnosticsRecord>& rows) {
  for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << detail::csv_escape(header[k]);
  os << "\r\n";
  for (const auto& r : rows) {
    const auto v = csv_row(r);
    for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << detail::format_double(v[k]);
    os << "\r\n";
  }
}

inline void write_csv_file(const std::string& path, const DiagnosticsSettings& cfg,
                           const std::vector<DiagnosticsRecord>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open for writing: " + path);
  write_csv(out, csv_header(cfg), rows);
  if (!out) throw IoFailure("write failed: " + path);
}

/// Column-major view of a numeric CSV.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return columns[k];
    throw MissingColumn("CSV has no column '" + name + "'");
  }
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

namespace detail {

/// Splits one record; handles quoted fields with doubled quotes.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& out) {
  out.clear();
  std::string field;
  bool quoted = false, any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      break;
    } else if (c == '\n') {
      break;
    } else {
      field += c;
    }
  }
  if (!any) return false;
  out.push_back(std::move(field));
  return true;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in, const std::string& origin = "<csv>") {
  CsvTable t;
  if (!detail::read_csv_record(in, t.header)) throw IoFailure(origin + ": empty CSV");
  t.columns.resize(t.header.size());
  std::vector<std::string> rec;
  std::size_t line = 1;
  while (detail::read_csv_record(in, rec)) {
    ++line;
    if (rec.size() == 1 && rec[0].empty()) continue;
    if (rec.size() != t.header.size())
      throw IoFailure(origin + ": row " + std::to_string(line) + " has " + std::to_string(rec.size()) + " fields, expected " +
                      std::to_string(t.header.size()));
    for (std::size_t k = 0; k < rec.size(); ++k) {
      try {
        t.columns[k].push_back(detail::parse_double(t.header[k], rec[k]));
      } catch (const ConfigInvalid& e) {
        throw IoFailure(origin + ": row " + std::to_string(line) + ": " + e.what());
      }
    }
  }
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open CSV: " + path);
  return read_csv(in, path);
}

}  // namespace fbsq
