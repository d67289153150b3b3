#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fbsq/errors.hpp"

// Parameter windows for the two sets of hypotheses in play:
//
//  well-posedness window (d = 2)
//    2/3 < alpha <= 1
//    8/(3 alpha - 2) < p < 1/(C_mu ||mu - 1||_inf)      (upper bound soft)
//    alpha/(2 alpha - 1) < q < min{2, 4 alpha/(3(2 alpha - 1))}
//    3 - 2 alpha < s0 < 4 alpha/q - 8 alpha + 6
//
//  decay-estimate window (general d, plus its d = 2 specialisation)
//    alpha d/q + (d+2)/2 - alpha(d+4)/2 < s0 < 2 alpha d/q - alpha d - 6 alpha + 3 + 3d/2
//    2 alpha d/(6 alpha + alpha d - d - 2) < q < 2
//    d = 2: alpha < s0 < 4 alpha/q - 8 alpha + 6,  q < min{2, 4 alpha/(3(3 alpha - 2))}
//
// The two disagree on (2/3, 1); the differences are reported, not resolved.
namespace fbsq {

struct Verdict {
  std::string name;
  bool satisfied = false;
  double slack = 0.0;  // signed distance to the bound, positive inside
  bool hard = true;
  bool boundary = false;  // within the float margin: failed by policy
};

struct AdmissibleTuple {
  int d = 2;
  double alpha = 0.0;
  double p = 0.0;
  double q = 0.0;
  double s0 = 0.0;
  double epsilon = 0.0;
  std::vector<Verdict> verdicts;

  bool passed() const {
    for (const auto& v : verdicts)
      if (v.hard && !v.satisfied) return false;
    return true;
  }
  const Verdict* find(const std::string& name) const {
    for (const auto& v : verdicts)
      if (v.name == name) return &v;
    return nullptr;
  }
  /// First failing hard constraint, empty when the tuple passes.
  std::string binding() const {
    for (const auto& v : verdicts)
      if (v.hard && !v.satisfied) return v.name;
    return {};
  }
};

/// Strict inequalities evaluated in floating point count as satisfied only
/// with a margin of 1e-12 (relative to the bound's size).
inline constexpr double kBoundaryMargin = 1e-12;

namespace detail {

inline Verdict strict(std::string name, double slack, double bound, bool hard) {
  const double margin = kBoundaryMargin * std::max(1.0, std::isfinite(bound) ? std::abs(bound) : 1.0);
  return {std::move(name), slack > margin, slack, hard, std::abs(slack) <= margin};
}

inline Verdict above(std::string name, double value, double bound, bool hard = true) {
  return strict(std::move(name), value - bound, bound, hard);
}

inline Verdict below(std::string name, double value, double bound, bool hard = true) {
  return strict(std::move(name), bound - value, bound, hard);
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace detail

// ---------------------------------------------------------------------------
// Window endpoints

inline double wp_p_lower(double alpha) { return 3.0 * alpha > 2.0 ? 8.0 / (3.0 * alpha - 2.0) : detail::kInf; }
inline double wp_q_lower(double alpha) { return 2.0 * alpha > 1.0 ? alpha / (2.0 * alpha - 1.0) : detail::kInf; }
inline double wp_q_upper(double alpha) {
  return 2.0 * alpha > 1.0 ? std::min(2.0, 4.0 * alpha / (3.0 * (2.0 * alpha - 1.0))) : 2.0;
}
inline double wp_s0_lower(double alpha) { return 3.0 - 2.0 * alpha; }
inline double wp_s0_upper(double alpha, double q) { return 4.0 * alpha / q - 8.0 * alpha + 6.0; }

inline double de_q_lower(int d, double alpha) {
  const double den = 6.0 * alpha + alpha * d - d - 2.0;
  return den > 0.0 ? 2.0 * alpha * d / den : detail::kInf;
}
inline double de_s0_lower(int d, double alpha, double q) {
  return alpha * d / q + (d + 2.0) / 2.0 - alpha * (d + 4.0) / 2.0;
}
inline double de_s0_upper(int d, double alpha, double q) {
  return 2.0 * alpha * d / q - alpha * d - 6.0 * alpha + 3.0 + 1.5 * d;
}
inline double de2_q_upper(double alpha) {
  return 3.0 * alpha > 2.0 ? std::min(2.0, 4.0 * alpha / (3.0 * (3.0 * alpha - 2.0))) : 2.0;
}

// ---------------------------------------------------------------------------
// Checks

/// Well-posedness window. The p upper bound involves a non-explicit constant
/// (exposed as c_mu) and ||mu - 1||_inf <= epsilon; it is reported as soft.
inline AdmissibleTuple check_wellposedness(double alpha, double p, double q, double s0, double epsilon,
                                           double c_mu = 1.0) {
  AdmissibleTuple t{2, alpha, p, q, s0, epsilon, {}};
  auto& v = t.verdicts;
  v.push_back(detail::above("alpha_lower", alpha, 2.0 / 3.0));
  {
    Verdict top{"alpha_upper", alpha <= 1.0, 1.0 - alpha, true, false};
    v.push_back(top);
  }
  v.push_back(detail::above("p_lower", p, wp_p_lower(alpha)));
  const double p_cap = epsilon * c_mu > 0.0 ? 1.0 / (epsilon * c_mu) : detail::kInf;
  v.push_back(detail::below("p_upper", p, p_cap, false));
  v.push_back(detail::above("q_lower", q, wp_q_lower(alpha)));
  v.push_back(detail::below("q_upper", q, wp_q_upper(alpha)));
  v.push_back(detail::above("s0_lower", s0, wp_s0_lower(alpha)));
  v.push_back(detail::below("s0_upper", s0, wp_s0_upper(alpha, q)));
  return t;
}

/// Decay-estimate window for dimension d; for d = 2 the specialised bounds
/// are appended under names prefixed "d2_".
inline AdmissibleTuple check_decay_estimate(int d, double alpha, double q, double s0) {
  if (d < 2) throw PreconditionViolated("decay-estimate window needs d >= 2");
  AdmissibleTuple t{d, alpha, 0.0, q, s0, 0.0, {}};
  auto& v = t.verdicts;
  v.push_back(detail::above("q_lower", q, de_q_lower(d, alpha)));
  v.push_back(detail::below("q_upper", q, 2.0));
  v.push_back(detail::above("s0_lower", s0, de_s0_lower(d, alpha, q)));
  v.push_back(detail::below("s0_upper", s0, de_s0_upper(d, alpha, q)));
  if (d == 2) {
    v.push_back(detail::above("d2_s0_lower", s0, alpha, false));
    v.push_back(detail::below("d2_s0_upper", s0, wp_s0_upper(alpha, q), false));
    v.push_back(detail::below("d2_q_upper", q, de2_q_upper(alpha), false));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Exact re-check. Every inequality is cleared of denominators and evaluated
// in rational arithmetic on the exact binary values of the inputs.

namespace exact {

using boost::multiprecision::cpp_rational;
using boost::multiprecision::cpp_int;

/// The exact rational value of a finite double.
inline cpp_rational from_double(double x) {
  if (!std::isfinite(x)) throw PreconditionViolated("exact re-check needs finite inputs");
  int e = 0;
  const double m = std::frexp(x, &e);
  // m * 2^53 is an integer for every finite double.
  const auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
  cpp_rational r(mant);
  e -= 53;
  if (e > 0) r *= cpp_rational(cpp_int(1) << e);
  if (e < 0) r /= cpp_rational(cpp_int(1) << -e);
  return r;
}

inline std::map<std::string, bool> wellposedness(double alpha_d, double p_d, double q_d, double s0_d,
                                                 double epsilon_d, double c_mu_d) {
  const auto a = from_double(alpha_d), p = from_double(p_d), q = from_double(q_d), s = from_double(s0_d);
  const auto ec = from_double(epsilon_d) * from_double(c_mu_d);
  std::map<std::string, bool> out;
  out["alpha_lower"] = 3 * a > 2;
  out["alpha_upper"] = a <= 1;
  out["p_lower"] = 3 * a - 2 > 0 && p * (3 * a - 2) > 8;
  out["p_upper"] = ec <= 0 || p * ec < 1;
  out["q_lower"] = 2 * a - 1 > 0 && q * (2 * a - 1) > a;
  // q < 2 and, when 2a - 1 > 0, 3 q (2a - 1) < 4a.
  out["q_upper"] = q < 2 && (2 * a - 1 <= 0 || 3 * q * (2 * a - 1) < 4 * a);
  out["s0_lower"] = s + 2 * a > 3;
  out["s0_upper"] = q > 0 && s * q < 4 * a - 8 * a * q + 6 * q;
  return out;
}

inline std::map<std::string, bool> decay_estimate(int d_i, double alpha_d, double q_d, double s0_d) {
  const auto a = from_double(alpha_d), q = from_double(q_d), s = from_double(s0_d);
  const cpp_rational d(d_i);
  std::map<std::string, bool> out;
  const cpp_rational den = 6 * a + a * d - d - 2;
  out["q_lower"] = den > 0 && q * den > 2 * a * d;
  out["q_upper"] = q < 2;
  // Multiply through by 2q > 0.
  out["s0_lower"] = q > 0 && 2 * q * s > 2 * a * d + q * (d + 2) - a * q * (d + 4);
  out["s0_upper"] = q > 0 && 2 * q * s < 4 * a * d + q * (-2 * a * d - 12 * a + 6 + 3 * d);
  if (d_i == 2) {
    out["d2_s0_lower"] = s > a;
    out["d2_s0_upper"] = q > 0 && s * q < 4 * a - 8 * a * q + 6 * q;
    out["d2_q_upper"] = q < 2 && (3 * a - 2 <= 0 || 3 * q * (3 * a - 2) < 4 * a);
  }
  return out;
}

}  // namespace exact

/// Names of constraints whose float verdict disagrees with the exact path.
/// A float failure inside the boundary margin is policy, not a disagreement.
inline std::vector<std::string> recheck(const AdmissibleTuple& t, bool wellposedness_window, double c_mu = 1.0) {
  const auto truth = wellposedness_window ? exact::wellposedness(t.alpha, t.p, t.q, t.s0, t.epsilon, c_mu)
                                          : exact::decay_estimate(t.d, t.alpha, t.q, t.s0);
  std::vector<std::string> bad;
  for (const auto& v : t.verdicts) {
    const auto it = truth.find(v.name);
    if (it == truth.end()) {
      bad.push_back(v.name);
      continue;
    }
    if (it->second != v.satisfied && !(v.boundary && !v.satisfied)) bad.push_back(v.name);
  }
  if (truth.size() != t.verdicts.size()) bad.push_back("<constraint set mismatch>");
  return bad;
}

// ---------------------------------------------------------------------------
// Derived exponents

struct GammaRange {
  double lo = 1.0;  // exclusive
  double hi = std::numeric_limits<double>::infinity();  // inclusive
};

/// gamma = 4p / (4 + 4p - 3 alpha p), defined for p > 4/(3 alpha - 2).
inline double gamma_exponent(double alpha, double p, GammaRange range = {}) {
  if (!(3.0 * alpha > 2.0) || !(p > 4.0 / (3.0 * alpha - 2.0))) {
    throw PreconditionViolated("gamma needs p > 4/(3 alpha - 2); alpha = " + std::to_string(alpha) +
                               ", p = " + std::to_string(p));
  }
  const double den = 4.0 + 4.0 * p - 3.0 * alpha * p;
  if (!(den > 0.0)) throw PreconditionViolated("gamma denominator is not positive");
  const double g = 4.0 * p / den;
  if (!(g > range.lo && g <= range.hi)) {
    throw PreconditionViolated("gamma = " + std::to_string(g) + " outside (" + std::to_string(range.lo) + ", " +
                               std::to_string(range.hi) + "]");
  }
  return g;
}

// ---------------------------------------------------------------------------
// Differences between the two windows

/// Fixed descriptions of where the two windows disagree, followed by their
/// values at the given alpha.
inline std::vector<std::string> window_discrepancies(double alpha) {
  auto num = [](double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
  };
  return {
      "s0 lower bound: well-posedness window requires s0 > 3 - 2 alpha (" + num(wp_s0_lower(alpha)) +
          "), decay-estimate window for d = 2 requires s0 > alpha (" + num(alpha) + ")",
      "q upper bound: well-posedness window uses min{2, 4 alpha / (3 (2 alpha - 1))} (" + num(wp_q_upper(alpha)) +
          "), decay-estimate window for d = 2 uses min{2, 4 alpha / (3 (3 alpha - 2))} (" +
          num(de2_q_upper(alpha)) + ")",
      "s0 lower bound, general d = 2 form: alpha d / q + (d + 2) / 2 - alpha (d + 4) / 2 = 2 alpha / q + 2 - 3 alpha "
      "differs from the specialised bound alpha",
      "gamma = 4p / (4 + 4p - 3 alpha p) exceeds 2 for every admissible p at this alpha: gamma(p_min) = " +
          num(3.0 * alpha > 2.0 ? 4.0 * wp_p_lower(alpha) / (4.0 + 4.0 * wp_p_lower(alpha) -
                                                              3.0 * alpha * wp_p_lower(alpha))
                                : std::nan("")),
  };
}

// ---------------------------------------------------------------------------
// Region scans

struct RegionSummary {
  double alpha = 0.0;
  std::size_t scanned = 0;
  std::size_t passing = 0;
  double q_min = 0.0, q_max = 0.0, s0_min = 0.0, s0_max = 0.0;
  std::string binding;  // most frequent failing hard constraint when empty
  std::size_t recheck_mismatches = 0;
  bool empty() const { return passing == 0; }
};

struct Region {
  std::vector<AdmissibleTuple> tuples;  // passing tuples
  std::vector<RegionSummary> summaries;
};

struct ScanBox {
  double q_lo = 1.0, q_hi = 2.0;    // open interval, sampled at interior points
  double s0_lo = 0.0, s0_hi = 3.0;  // open interval
  double epsilon = 0.05;
  double c_mu = 1.0;
};

/// Scans (q, s0, p) over a fixed box for each alpha, independent of the
/// analytic window endpoints. Every verdict is re-checked exactly.
inline Region enumerate_region(const std::vector<double>& alpha_grid, std::size_t q_steps, std::size_t s0_steps,
                               const std::vector<double>& p_samples, const ScanBox& box = {}) {
  if (alpha_grid.empty() || q_steps == 0 || s0_steps == 0 || p_samples.empty())
    throw PreconditionViolated("region scan needs nonempty grids");
  Region out;
  for (double alpha : alpha_grid) {
    RegionSummary sum;
    sum.alpha = alpha;
    sum.q_min = sum.s0_min = detail::kInf;
    sum.q_max = sum.s0_max = -detail::kInf;
    std::map<std::string, std::size_t> fails;
    for (std::size_t iq = 1; iq <= q_steps; ++iq) {
      const double q = box.q_lo + (box.q_hi - box.q_lo) * static_cast<double>(iq) / static_cast<double>(q_steps + 1);
      for (std::size_t is = 1; is <= s0_steps; ++is) {
        const double s0 =
            box.s0_lo + (box.s0_hi - box.s0_lo) * static_cast<double>(is) / static_cast<double>(s0_steps + 1);
        for (double p : p_samples) {
          auto t = check_wellposedness(alpha, p, q, s0, box.epsilon, box.c_mu);
          ++sum.scanned;
          if (!recheck(t, true, box.c_mu).empty()) ++sum.recheck_mismatches;
          if (t.passed()) {
            ++sum.passing;
            sum.q_min = std::min(sum.q_min, q);
            sum.q_max = std::max(sum.q_max, q);
            sum.s0_min = std::min(sum.s0_min, s0);
            sum.s0_max = std::max(sum.s0_max, s0);
            out.tuples.push_back(std::move(t));
          } else {
            for (const auto& v : t.verdicts)
              if (v.hard && !v.satisfied) ++fails[v.name];
          }
        }
      }
    }
    if (sum.empty()) {
      std::size_t best = 0;
      for (const auto& [name, count] : fails)
        if (count > best) {
          best = count;
          sum.binding = name;
        }
    }
    out.summaries.push_back(sum);
  }
  return out;
}

/// Human-readable window description at one alpha, e.g. for alpha = 1:
/// q in (1, 1.33333), s0 in (1, 4/q - 2), p > 8.
inline std::string describe_windows(double alpha) {
  std::ostringstream os;
  os.precision(6);
  if (!(alpha > 2.0 / 3.0 && alpha <= 1.0)) {
    os << "empty region: alpha = " << alpha << " violates alpha_" << (alpha <= 2.0 / 3.0 ? "lower" : "upper");
    return os.str();
  }
  const double b = 6.0 - 8.0 * alpha;
  os << "q in (" << wp_q_lower(alpha) << ", " << wp_q_upper(alpha) << "), s0 in (" << wp_s0_lower(alpha) << ", "
     << 4.0 * alpha << "/q " << (b < 0 ? "- " : "+ ") << std::abs(b) << "), p > " << wp_p_lower(alpha);
  return os.str();
}

}  // namespace fbsq
