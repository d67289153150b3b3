#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fbsq/errors.hpp"
#include "fbsq/field.hpp"
#include "fbsq/littlewood_paley.hpp"
#include "fbsq/random.hpp"
#include "fbsq/solver.hpp"

// Co-evolution of nearby solutions. With d = solution 1 - solution 2,
//
//   Y(t) = sup_{s<=t} ||du||_2^2 + sup ||dtheta||_2^2 + sup ||dtheta||^2_{B^0_{gamma,inf}}
//
// where the Besov norm is the homogeneous sup over dyadic blocks.
namespace fbsq {

struct StabilityOptions {
  double dt = 1e-3;
  double t_end = 1.0;
  std::size_t sample_every = 10;
  double gamma = 2.0;
};

struct StabilitySample {
  double t = 0.0;
  double du_l2 = 0.0;
  double dtheta_l2 = 0.0;
  double dtheta_besov = 0.0;
  double y = 0.0;  // built from running maxima
  bool bitwise_equal = false;
};

struct StabilityResult {
  std::vector<StabilitySample> samples;
  double y_first = 0.0;  // Y at the first sample after t = 0
  double growth = 0.0;   // Y(T) / y_first, 0 when y_first = 0
  double k_fit = 0.0;    // smallest K with Y(t) <= y_first e^{K t} on every sample
  bool identical() const {
    for (const auto& s : samples)
      if (!s.bitwise_equal || s.y != 0.0) return false;
    return true;
  }
};

namespace detail {

inline bool same_bits(const SpectralField& a, const SpectralField& b) {
  auto x = a.coeffs();
  auto y = b.coeffs();
  return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size_bytes()) == 0;
}

inline bool same_bits(const FlowState& a, const FlowState& b) {
  return same_bits(a.theta, b.theta) && same_bits(a.u.x, b.u.x) && same_bits(a.u.y, b.u.y);
}

struct RunningY {
  double u2 = 0.0, th2 = 0.0, b2 = 0.0;

  StabilitySample observe(const FlowState& a, const FlowState& b, const lp::DyadicPartition& part, double gamma) {
    StabilitySample out;
    out.t = a.t;
    out.bitwise_equal = same_bits(a, b);
    const VectorField du = a.u - b.u;
    const SpectralField dth = a.theta - b.theta;
    out.du_l2 = l2_norm(du);
    out.dtheta_l2 = l2_norm(dth);
    const auto blocks = lp::block_lp_norms(part, dth, gamma, lp::Flavor::homogeneous);
    out.dtheta_besov = lp::ell_r(blocks, kInfinity);
    u2 = std::max(u2, out.du_l2 * out.du_l2);
    th2 = std::max(th2, out.dtheta_l2 * out.dtheta_l2);
    b2 = std::max(b2, out.dtheta_besov * out.dtheta_besov);
    out.y = u2 + th2 + b2;
    return out;
  }
};

inline void summarize(StabilityResult& r) {
  if (r.samples.size() < 2) return;
  r.y_first = r.samples[1].y;
  if (r.y_first == 0.0) return;
  r.growth = r.samples.back().y / r.y_first;
  for (std::size_t k = 2; k < r.samples.size(); ++k) {
    const double dt = r.samples[k].t - r.samples[1].t;
    r.k_fit = std::max(r.k_fit, std::log(r.samples[k].y / r.y_first) / dt);
  }
}

}  // namespace detail

/// Called after every step of the base trajectory with its stepper.
using BaseObserver = std::function<void(const FlowState&, const Stepper&)>;

/// Evolves `base` and every state in `others` with the same fixed dt and
/// records Y for each pair (base, other). Solver errors propagate.
inline std::vector<StabilityResult> stability_experiment(const FlowState& base, const std::vector<FlowState>& others,
                                                         const PhysParams& params, const StabilityOptions& opt,
                                                         const BaseObserver& observe_base = {}) {
  for (const auto& o : others)
    if (!o.grid().same_shape(base.grid())) throw GridMismatch("stability runs need identical grids");
  if (!(opt.dt > 0.0) || !(opt.t_end > 0.0)) throw PreconditionViolated("stability run needs dt > 0 and T > 0");
  const auto part = lp::build_partition(base.grid_ptr(), std::nullopt);
  const auto every = std::max<std::size_t>(1, opt.sample_every);
  const auto steps = static_cast<std::size_t>(std::llround(opt.t_end / opt.dt));

  Stepper base_stepper(base.grid_ptr(), params);
  std::vector<Stepper> steppers(others.size(), Stepper(base.grid_ptr(), params));
  FlowState a = base;
  std::vector<FlowState> b = others;
  std::vector<detail::RunningY> running(others.size());
  std::vector<StabilityResult> results(others.size());
  for (std::size_t m = 0; m < others.size(); ++m) results[m].samples.push_back(running[m].observe(a, b[m], part, opt.gamma));

  for (std::size_t n = 1; n <= steps; ++n) {
    base_stepper.advance(a, opt.dt);
    if (observe_base) observe_base(a, base_stepper);
    for (std::size_t m = 0; m < others.size(); ++m) steppers[m].advance(b[m], opt.dt);
    if (n % every == 0 || n == steps)
      for (std::size_t m = 0; m < others.size(); ++m)
        results[m].samples.push_back(running[m].observe(a, b[m], part, opt.gamma));
  }
  for (auto& r : results) detail::summarize(r);
  return results;
}

inline StabilityResult stability_experiment(const FlowState& s1, const FlowState& s2, const PhysParams& params,
                                            const StabilityOptions& opt) {
  return stability_experiment(s1, std::vector<FlowState>{s2}, params, opt, {}).front();
}

/// s with theta shifted by a random mean-zero field whose L^2 norm is
/// delta ||theta - mean||_2 (or delta when theta is constant).
inline FlowState perturb_theta(const FlowState& s, double delta, std::uint64_t seed) {
  Rng rng(seed);
  auto shape = dealias(random_smooth_field(s.grid_ptr(), rng));
  shape[0] = Complex(0.0, 0.0);
  SpectralField fl = s.theta;
  fl[0] = Complex(0.0, 0.0);
  const double ref = l2_norm(fl) > 0.0 ? l2_norm(fl) : 1.0;
  shape *= delta * ref / l2_norm(shape);
  FlowState out = s;
  out.theta += shape;
  return out;
}

/// sqrt(Y_a / Y_b) at every sample after t = 0; two perturbations in ratio 2
/// should give values near 2 in the linear regime.
inline std::vector<double> sqrt_y_ratios(const StabilityResult& a, const StabilityResult& b) {
  if (a.samples.size() != b.samples.size()) throw PreconditionViolated("stability series differ in length");
  std::vector<double> out;
  for (std::size_t k = 1; k < a.samples.size(); ++k)
    out.push_back(b.samples[k].y > 0.0 ? std::sqrt(a.samples[k].y / b.samples[k].y)
                                       : std::numeric_limits<double>::infinity());
  return out;
}

}  // namespace fbsq
