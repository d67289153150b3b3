#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fbsq/errors.hpp"
#include "fbsq/field.hpp"
#include "fbsq/operators.hpp"
#include "fbsq/random.hpp"

// Pseudo-spectral integrator for the temperature / velocity system
//
//   d_t theta + u . grad theta + kappa |D|^alpha theta = 0
//   d_t u + u . grad u - div(2 mu(theta) d(u)) + grad Pi = theta e_2,  div u = 0
//
// with the viscous term split as  Delta u + div(2 (mu - 1) d(u)).
namespace fbsq {

enum class MuProfile : std::uint8_t { exp_saturating = 0, tanh_saturating = 1 };

inline const char* to_string(MuProfile p) {
  return p == MuProfile::exp_saturating ? "exp_saturating" : "tanh_saturating";
}

inline std::optional<MuProfile> parse_mu_profile(const std::string& s) {
  if (s == "exp_saturating") return MuProfile::exp_saturating;
  if (s == "tanh_saturating") return MuProfile::tanh_saturating;
  return std::nullopt;
}

struct PhysParams {
  double alpha = 0.8;
  double epsilon = 0.05;
  double kappa = 1.0;
  MuProfile mu_profile = MuProfile::exp_saturating;
  // Switches for verification runs; a physical run keeps both on.
  bool advection = true;
  bool buoyancy = true;
};

struct FlowState {
  SpectralField theta;
  VectorField u;
  double t = 0.0;

  const GridPtr& grid_ptr() const { return theta.grid_ptr(); }
  const Grid& grid() const { return theta.grid(); }
  bool all_finite() const { return theta.all_finite() && u.x.all_finite() && u.y.all_finite(); }
};

/// mu(theta) for a single value; theta < 0 is treated as 0.
inline double mu_value(double theta, double epsilon, MuProfile profile) {
  const double s = std::max(theta, 0.0);
  return profile == MuProfile::exp_saturating ? 1.0 - epsilon * std::expm1(-s) : 1.0 + epsilon * std::tanh(s);
}

inline PhysicalField viscosity(const PhysicalField& theta, const PhysParams& params) {
  PhysicalField mu(theta.grid_ptr());
  auto th = theta.values();
  auto m = mu.values();
  for (std::size_t id = 0; id < m.size(); ++id) m[id] = mu_value(th[id], params.epsilon, params.mu_profile);
  return mu;
}

/// Instantaneous energy rates of a state, evaluated the way the scheme sees
/// them: all integrals are grid quadratures of band-limited fields.
struct EnergyRates {
  double theta_dissipation = 0.0;     // ||theta||^2 in H^{alpha/2}-dot
  double velocity_dissipation = 0.0;  // 2 int mu d(u):d(u)
  double buoyancy_work = 0.0;         // int theta u_2
};

namespace detail {

/// Explicit parts of both equations at one state, plus the energy rates
/// and peak speed that fall out of the same physical-space fields.
struct NonlinearTerms {
  SpectralField theta;
  VectorField u;
  EnergyRates rates;
  double umax = 0.0;
};

inline NonlinearTerms nonlinear_terms(const FlowState& s, const PhysParams& params, bool want_rates,
                                      bool want_terms = true) {
  const auto& g = s.grid_ptr();
  const auto n = g->size();
  NonlinearTerms out{SpectralField(g), VectorField(g), {}, 0.0};
  const bool variable_mu = params.epsilon != 0.0;
  const bool need_grad = params.advection || variable_mu || want_rates;

  // Velocity gradient in physical space: g_ab = d_b u_a.
  PhysicalField gxx, gxy, gyx, gyy;
  if (need_grad) {
    gxx = to_physical(ddx(s.u.x));
    gxy = to_physical(ddy(s.u.x));
    gyx = to_physical(ddx(s.u.y));
    gyy = to_physical(ddy(s.u.y));
  }

  VectorField force(g);
  if (params.advection) {
    const auto ux = to_physical(s.u.x);
    const auto uy = to_physical(s.u.y);
    const auto tx = to_physical(ddx(s.theta));
    const auto ty = to_physical(ddy(s.theta));
    PhysicalField at(g), ax(g), ay(g);
    double umax2 = 0.0;
    for (std::size_t id = 0; id < n; ++id) {
      at[id] = ux[id] * tx[id] + uy[id] * ty[id];
      ax[id] = ux[id] * gxx[id] + uy[id] * gxy[id];
      ay[id] = ux[id] * gyx[id] + uy[id] * gyy[id];
      umax2 = std::max(umax2, ux[id] * ux[id] + uy[id] * uy[id]);
    }
    out.umax = std::sqrt(umax2);
    out.theta = -dealias(to_spectral(at));
    force.x = -dealias(to_spectral(ax));
    force.y = -dealias(to_spectral(ay));
  }

  if (variable_mu || want_rates) {
    const auto th = to_physical(s.theta);
    PhysicalField txx(g), txy(g), tyy(g);
    double dissipation = 0.0;
    for (std::size_t id = 0; id < n; ++id) {
      const double mu = mu_value(th[id], params.epsilon, params.mu_profile);
      const double excess = 2.0 * (mu - 1.0);
      const double dxy = 0.5 * (gxy[id] + gyx[id]);
      txx[id] = excess * gxx[id];
      txy[id] = excess * dxy;
      tyy[id] = excess * gyy[id];
      dissipation += mu * (gxx[id] * gxx[id] + 2.0 * dxy * dxy + gyy[id] * gyy[id]);
    }
    if (variable_mu && want_terms) {
      SymmetricTensorField tau{dealias(to_spectral(txx)), dealias(to_spectral(txy)), dealias(to_spectral(tyy))};
      force += divergence(tau);
    }
    if (want_rates) out.rates.velocity_dissipation = 2.0 * dissipation * g->cell_area();
  }

  if (params.buoyancy) {
    // The mean of theta e_2 is balanced by a hydrostatic pressure.
    force.y += s.theta;
    force.y[0] = Complex(0.0, 0.0);
  }
  if (want_terms) out.u = leray_project(force);

  if (want_rates) {
    auto m = g->k_norm();
    double h = 0.0;
    auto c = s.theta.coeffs();
    for (std::size_t id = 1; id < n; ++id) h += std::pow(m[id], params.alpha) * std::norm(c[id]);
    out.rates.theta_dissipation = h * g->area();
    out.rates.buoyancy_work = inner(s.theta, s.u.y);
  }
  return out;
}

/// C min(dx / umax, 1 / (4 eps k_max^2)), infinite when neither bound applies.
inline double cfl_limit(const Grid& g, const PhysParams& params, double umax, double cfl_factor) {
  double bound = std::numeric_limits<double>::infinity();
  if (params.advection && umax > 0.0) bound = std::min(bound, g.dx() / umax);
  if (params.epsilon > 0.0) {
    const double kmax = std::sqrt(2.0) * g.dealias_cutoff();
    bound = std::min(bound, 1.0 / (4.0 * params.epsilon * kmax * kmax));
  }
  return cfl_factor * bound;
}

}  // namespace detail

inline EnergyRates energy_rates(const FlowState& s, const PhysParams& params) {
  PhysParams quiet = params;
  quiet.advection = false;
  quiet.buoyancy = false;
  return detail::nonlinear_terms(s, quiet, true, false).rates;
}

/// Full right side of the temperature equation.
inline SpectralField rhs_theta(const FlowState& s, const PhysParams& params) {
  auto out = params.advection ? -advect(s.u, s.theta) : SpectralField(s.grid_ptr());
  auto k = s.grid().k_norm();
  auto c = s.theta.coeffs();
  for (std::size_t id = 1; id < c.size(); ++id) out[id] -= params.kappa * std::pow(k[id], params.alpha) * c[id];
  return out;
}

/// Velocity right side, split into the projected explicit part and the
/// Laplacian that the integrator treats exactly.
struct VelocityRhs {
  VectorField projected;  // P[-u.grad u + div(2(mu-1)d(u)) + theta e_2]
  VectorField laplacian;  // Delta u
  VectorField total() const { return projected + laplacian; }
};

inline VelocityRhs rhs_u(const FlowState& s, const PhysParams& params) {
  return {detail::nonlinear_terms(s, params, false).u, laplacian(s.u)};
}

/// Options shared by the stepper and the time-step rule.
struct StepOptions {
  double cfl_factor = 0.4;
  double dt_max = 1e-2;
  bool check_cfl = true;
};

/// dt = C min(dx / max|u|, 1 / (4 eps k_max^2)), capped at dt_max. k_max is
/// the largest wavenumber magnitude kept by the dealias rule.
inline double cfl_dt(const FlowState& s, const PhysParams& params, const StepOptions& opt = {}) {
  double umax = 0.0;
  if (params.advection) {
    const auto ux = to_physical(s.u.x);
    const auto uy = to_physical(s.u.y);
    for (std::size_t id = 0; id < s.grid().size(); ++id) umax = std::max(umax, std::hypot(ux[id], uy[id]));
  }
  return std::min(detail::cfl_limit(s.grid(), params, umax, opt.cfl_factor), opt.dt_max);
}

namespace detail {

/// phi_1(z) = (e^z - 1)/z and phi_2(z) = (e^z - 1 - z)/z^2, Taylor near 0.
inline double etd_phi1(double z) {
  if (std::abs(z) < 1e-2) return 1.0 + z / 2.0 * (1.0 + z / 3.0 * (1.0 + z / 4.0 * (1.0 + z / 5.0)));
  return std::expm1(z) / z;
}
inline double etd_phi2(double z) {
  if (std::abs(z) < 1e-2) return 0.5 + z / 6.0 * (1.0 + z / 4.0 * (1.0 + z / 5.0 * (1.0 + z / 6.0)));
  return (std::expm1(z) - z) / (z * z);
}

struct EtdTable {
  std::vector<double> e, h1, h2;  // e^{hL}, h phi_1(hL), h phi_2(hL)
  void build(std::span<const double> lin, double h) {
    e.resize(lin.size());
    h1.resize(lin.size());
    h2.resize(lin.size());
    for (std::size_t id = 0; id < lin.size(); ++id) {
      const double z = h * lin[id];
      e[id] = std::exp(z);
      h1[id] = h * etd_phi1(z);
      h2[id] = h * etd_phi2(z);
    }
  }
};

/// a = e x + h1 n
inline void etd_predict(const EtdTable& t, const SpectralField& x, const SpectralField& nl, SpectralField& a) {
  auto xc = x.coeffs();
  auto nc = nl.coeffs();
  auto ac = a.coeffs();
  for (std::size_t id = 0; id < ac.size(); ++id) ac[id] = t.e[id] * xc[id] + t.h1[id] * nc[id];
}

/// a += h2 (n2 - n1)
inline void etd_correct(const EtdTable& t, const SpectralField& n1, const SpectralField& n2, SpectralField& a) {
  auto c1 = n1.coeffs();
  auto c2 = n2.coeffs();
  auto ac = a.coeffs();
  for (std::size_t id = 0; id < ac.size(); ++id) ac[id] += t.h2[id] * (c2[id] - c1[id]);
}

}  // namespace detail

/// ETD-RK2 (exponential Heun). Linear symbols: -kappa |k|^alpha for theta,
/// -|k|^2 for each velocity component; coefficient tables are cached per dt.
class Stepper {
 public:
  Stepper(GridPtr grid, PhysParams params, StepOptions opt = {})
      : grid_(std::move(grid)), params_(params), opt_(opt) {
    const auto n = grid_->size();
    auto k = grid_->k_norm();
    lin_theta_.resize(n);
    lin_u_.resize(n);
    for (std::size_t id = 0; id < n; ++id) {
      lin_theta_[id] = id == 0 ? 0.0 : -params_.kappa * std::pow(k[id], params_.alpha);
      lin_u_[id] = -grid_->k_squared()[id];
    }
  }

  const PhysParams& params() const { return params_; }
  const StepOptions& options() const { return opt_; }

  /// Energy rates of the state at the start of the last step, computed from
  /// the first-stage fields at no extra transform cost.
  const EnergyRates& last_rates() const { return rates_; }

  /// Advances `s` by dt in place.
  void advance(FlowState& s, double dt) { advance_impl(s, dt, false); }

  /// Advances by min(dt_cap, CFL limit at the current state); returns the
  /// step taken. The limit comes from the first-stage fields.
  double advance_capped(FlowState& s, double dt_cap) { return advance_impl(s, dt_cap, true); }

 private:
  double advance_impl(FlowState& s, double dt, bool clamp) {
    if (!(dt > 0.0)) throw CflViolation("time step must be positive");
    auto n1 = detail::nonlinear_terms(s, params_, true);
    if (opt_.check_cfl || clamp) {
      const double limit = detail::cfl_limit(*grid_, params_, n1.umax, opt_.cfl_factor);
      if (clamp) {
        dt = std::min(dt, limit);
      } else if (dt > limit * (1.0 + 1e-12)) {
        throw CflViolation("dt = " + std::to_string(dt) + " exceeds the CFL limit " + std::to_string(limit) +
                           " at t = " + std::to_string(s.t));
      }
    }
    if (dt != cached_dt_) {
      theta_tab_.build(lin_theta_, dt);
      u_tab_.build(lin_u_, dt);
      cached_dt_ = dt;
    }
    rates_ = n1.rates;
    FlowState a{SpectralField(grid_), VectorField(grid_), s.t + dt};
    detail::etd_predict(theta_tab_, s.theta, n1.theta, a.theta);
    detail::etd_predict(u_tab_, s.u.x, n1.u.x, a.u.x);
    detail::etd_predict(u_tab_, s.u.y, n1.u.y, a.u.y);
    auto n2 = detail::nonlinear_terms(a, params_, false);
    detail::etd_correct(theta_tab_, n1.theta, n2.theta, a.theta);
    detail::etd_correct(u_tab_, n1.u.x, n2.u.x, a.u.x);
    detail::etd_correct(u_tab_, n1.u.y, n2.u.y, a.u.y);
    if (!a.all_finite()) {
      throw NonFiniteState("non-finite coefficient after the step from t = " + std::to_string(s.t));
    }
    s = std::move(a);
    return dt;
  }

  GridPtr grid_;
  PhysParams params_;
  StepOptions opt_;
  std::vector<double> lin_theta_, lin_u_;
  detail::EtdTable theta_tab_, u_tab_;
  double cached_dt_ = std::numeric_limits<double>::quiet_NaN();
  EnergyRates rates_;
};

/// One step from a fresh stepper. Loops should hold a Stepper instead.
inline FlowState step(const FlowState& s, double dt, const PhysParams& params, const StepOptions& opt = {}) {
  Stepper st(s.grid_ptr(), params, opt);
  FlowState out = s;
  st.advance(out, dt);
  return out;
}

/// Pressure from -Delta Pi = -div F, with F the unprojected explicit force.
inline SpectralField recover_pressure(const FlowState& s, const PhysParams& params) {
  const auto& g = s.grid();
  const auto& gp = s.grid_ptr();
  VectorField force(gp);
  if (params.advection) {
    force.x -= advect(s.u, s.u.x);
    force.y -= advect(s.u, s.u.y);
  }
  if (params.epsilon != 0.0) {
    const auto th = to_physical(s.theta);
    const auto d = deformation(s.u);
    PhysicalField w(gp);
    auto tensor = [&](const SpectralField& comp) {
      const auto c = to_physical(comp);
      for (std::size_t id = 0; id < g.size(); ++id)
        w[id] = 2.0 * (mu_value(th[id], params.epsilon, params.mu_profile) - 1.0) * c[id];
      return dealias(to_spectral(w));
    };
    force += divergence(SymmetricTensorField{tensor(d.xx), tensor(d.xy), tensor(d.yy)});
  }
  if (params.buoyancy) {
    force.y += s.theta;
    force.y[0] = Complex(0.0, 0.0);
  }
  SpectralField p(gp);
  const auto n = g.n();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto id = g.index(i, j);
      const double kx = g.kd(i);
      const double ky = g.kd(j);
      const double k2 = kx * kx + ky * ky;
      if (k2 == 0.0) continue;
      p[id] = Complex(0.0, -1.0) * (kx * force.x[id] + ky * force.y[id]) / k2;
    }
  return p;
}

/// Random initial data. Spectral shape |k/xi_c|^a exp(-|k|^2 / (2 xi_c^2))
/// with uniform phases, xi_c in physical wavenumber units. The amplitudes are
/// root-mean-square values of the theta fluctuation and of the velocity.
struct InitSpec {
  std::uint64_t seed = 1;
  double amp_theta = 1.0;
  double amp_u = 0.0;
  double envelope_exponent = 1.0;
  double xi_c = 4.0;
  bool nonnegative_shift = true;
};

struct InitialData {
  FlowState state;
  double shift = 0.0;  // constant added to theta to make it nonnegative
};

/// Dealiased random field with the envelope shape and unit root-mean-square.
inline SpectralField envelope_field(const GridPtr& grid, Rng& rng, double a, double xi_c) {
  auto f = dealias(random_phase_field(grid, rng, [&](double k) {
    if (k == 0.0) return 0.0;
    const double r = k / xi_c;
    return std::pow(r, a) * std::exp(-0.5 * r * r);
  }));
  const double rms = l2_norm(f) / grid->box_length();
  if (rms > 0.0) f *= 1.0 / rms;
  return f;
}

inline InitialData make_initial_data(const InitSpec& spec, const GridPtr& grid) {
  Rng rng(spec.seed);
  auto theta = envelope_field(grid, rng, spec.envelope_exponent, spec.xi_c);
  theta *= spec.amp_theta;
  InitialData out{FlowState{std::move(theta), VectorField(grid), 0.0}, 0.0};
  auto u = perp_gradient(envelope_field(grid, rng, spec.envelope_exponent, spec.xi_c));
  const double rms = l2_norm(u) / grid->box_length();
  if (rms > 0.0) u *= spec.amp_u / rms;
  out.state.u = std::move(u);
  if (spec.nonnegative_shift) {
    const double lo = to_physical(out.state.theta).min();
    if (lo < 0.0) {
      out.shift = -lo;
      out.state.theta[0] += Complex(out.shift, 0.0);
    }
  }
  return out;
}

}  // namespace fbsq
