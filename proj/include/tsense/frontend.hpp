#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "device_model.hpp"
#include "errors.hpp"
#include "stats.hpp"
#include "units.hpp"

namespace tsense {

// ---------------------------------------------------------------------------
// Temperature-to-current converter

/// Two diode stacks sharing the virtual rail: m1 mirrors I_H from the
/// 3-device stack (V_SG = V_VDD/3), m2 mirrors I_L from the 2-device stack
/// (V_SG = V_VDD/2).
struct TccParams {
  DeviceParams m1;
  DeviceParams m2;

  double sizing_ratio() const { return m1.w_over_l / m2.w_over_l; }
  /// True when m1 and m2 have identical i0, vth and n, which is what the
  /// closed-form current ratio assumes. Die mismatch breaks it on purpose.
  bool shares_process() const { return m1.i0 == m2.i0 && m1.vth == m2.vth && m1.n == m2.n; }

  friend bool operator==(const TccParams&, const TccParams&) = default;
};

inline std::vector<std::string> check_invariants(const TccParams& p) {
  std::vector<std::string> issues;
  if (!(p.sizing_ratio() > 1.0)) issues.emplace_back("tcc: m1.w_over_l / m2.w_over_l must exceed 1");
  if (!p.shares_process()) issues.emplace_back("tcc: m1 and m2 must share i0, vth and n");
  return issues;
}

struct TccCurrents {
  double i_h = 0.0;
  double i_l = 0.0;
  bool ordering_ok() const { return i_h > i_l; }
};

inline TccCurrents tcc_currents(const TccParams& p, double v_vdd, Celsius t) {
  if (!(v_vdd > 0.0)) throw DomainError("tcc_currents: v_vdd must be positive");
  const Kelvin tk = t.kelvin();
  // V_DS of each diode-connected device equals its V_SG.
  const auto ih = subthreshold_current(p.m1, v_vdd / 3.0, v_vdd / 3.0, tk);
  const auto il = subthreshold_current(p.m2, v_vdd / 2.0, v_vdd / 2.0, tk);
  return {ih.amps, il.amps};
}

/// I_H/I_L = ([W/L]1/[W/L]2) exp(-q V_VDD / (6 n k_B T)); uses m1.n.
inline double current_ratio_model(const TccParams& p, double v_vdd, Celsius t) {
  if (!(v_vdd >= 0.0)) throw DomainError("current_ratio_model: v_vdd must be non-negative");
  const double vt = thermal_voltage(t);
  return p.sizing_ratio() * std::exp(-v_vdd / (6.0 * p.m1.n * vt));
}

struct RatioSample {
  double temp_c = 0.0;
  double value = 0.0;
};

/// Least-squares line through (temperature, ratio) samples.
inline LinearFit fit_linear_ratio(std::span<const RatioSample> samples) {
  if (samples.size() < 3) throw InputError("fit_linear_ratio: at least 3 samples required");
  std::vector<double> x, y;
  x.reserve(samples.size());
  y.reserve(samples.size());
  for (const auto& s : samples) {
    x.push_back(s.temp_c);
    y.push_back(s.value);
  }
  return ordinary_least_squares(x, y);
}

// ---------------------------------------------------------------------------
// Native-device line regulator

/// Regulator and load I(V,T) families. `headroom` adds a finite V_DD
/// dependence to the regulator: I_R = alpha_R exp((headroom*(V_DD - ref) - V)/(beta_R V_T)).
/// With headroom = 0 the rail is independent of V_DD.
struct RegulatorParams {
  ExpIVCoeffs reg;
  ExpIVCoeffs load;
  double headroom = 0.0;
  double headroom_ref_vdd = 0.6;

  friend bool operator==(const RegulatorParams&, const RegulatorParams&) = default;
};

inline constexpr double vvdd_tolerance = 1e-9;
inline constexpr int vvdd_max_iterations = 200;
inline constexpr double min_supported_vdd = 0.6;
inline constexpr double max_supported_vdd = 1.8;

struct RailSolution {
  double v_vdd = 0.0;
  /// No usable crossing inside (0, v_dd): the result is clamped to 0 or v_dd.
  bool headroom_violation = false;
  int iterations = 0;
};

namespace detail {

/// log I_R - log I_load; strictly decreasing in v.
inline double rail_mismatch(const RegulatorParams& rp, double v, double v_dd, Celsius t) {
  const double vt = thermal_voltage(t);
  const double lr =
      log_exp_iv_current(rp.reg, v, t) + rp.headroom * (v_dd - rp.headroom_ref_vdd) / (rp.reg.beta(t.value) * vt);
  return lr - log_exp_iv_current(rp.load, v, t);
}

}  // namespace detail

/// Load-line intersection of regulator and load, by bisection on the log
/// current difference. The bracket is [0, max(v_dd, 1.8 V)] so that the
/// iterate sequence does not depend on v_dd; a crossing at or above v_dd is
/// clamped to v_dd and flagged.
inline RailSolution solve_vvdd(const RegulatorParams& rp, double v_dd, Celsius t) {
  if (!(v_dd > 0.0)) throw DomainError("solve_vvdd: v_dd must be positive");
  double lo = 0.0, hi = std::max(v_dd, max_supported_vdd);
  const double g_lo = detail::rail_mismatch(rp, lo, v_dd, t);
  if (g_lo <= 0.0) return {0.0, true, 0};
  if (detail::rail_mismatch(rp, v_dd, v_dd, t) > 0.0) return {v_dd, true, 0};
  int it = 0;
  while (hi - lo > vvdd_tolerance && it < vvdd_max_iterations) {
    const double mid = 0.5 * (lo + hi);
    if (detail::rail_mismatch(rp, mid, v_dd, t) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++it;
  }
  const double v = 0.5 * (lo + hi);
  if (v >= v_dd) return {v_dd, true, it};
  return {v, false, it};
}

/// V_VDD = beta_eq V_T log(alpha_R/alpha_L) (+ the headroom shift), with
/// beta_eq = beta_L beta_R / (beta_L + beta_R).
inline double vvdd_closed_form(const RegulatorParams& rp, Celsius t, double v_dd = min_supported_vdd) {
  const double ar = rp.reg.alpha(t.value), al = rp.load.alpha(t.value);
  const double br = rp.reg.beta(t.value), bl = rp.load.beta(t.value);
  if (!(al > 0.0) || !(ar > 0.0)) throw DomainError("vvdd_closed_form: alpha must be positive");
  const double beq = bl * br / (bl + br);
  return beq * thermal_voltage(t) * std::log(ar / al) + beq / br * rp.headroom * (v_dd - rp.headroom_ref_vdd);
}

struct FrontEndState {
  double v_vdd = 0.0;     // V
  double i_h = 0.0;       // A
  double i_l = 0.0;       // A
  double i_supply = 0.0;  // A
  Celsius temp{};
  double v_dd = 0.0;  // V
  bool headroom_violation = false;
};

inline FrontEndState frontend_state(const TccParams& tcc, const RegulatorParams& rp, double v_dd, Celsius t) {
  const auto rail = solve_vvdd(rp, v_dd, t);
  if (!(rail.v_vdd > 0.0)) throw DomainError("frontend_state: regulator produced a zero rail");
  const auto cur = tcc_currents(tcc, rail.v_vdd, t);
  FrontEndState s;
  s.v_vdd = rail.v_vdd;
  s.i_h = cur.i_h;
  s.i_l = cur.i_l;
  s.i_supply = exp_iv_current(rp.load, rail.v_vdd, t);
  s.temp = t;
  s.v_dd = v_dd;
  s.headroom_violation = rail.headroom_violation;
  return s;
}

}  // namespace tsense
