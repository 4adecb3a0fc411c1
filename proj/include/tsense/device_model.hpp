#pragma once

#include <cmath>
#include <vector>

#include "errors.hpp"
#include "table.hpp"
#include "units.hpp"

namespace tsense {

/// Subthreshold transistor description. Voltages are magnitudes; the
/// caller handles polarity.
struct DeviceParams {
  double w_over_l = 1.0;
  double i0 = 1e-9;   // A, current extrapolated at |V_GS| = |V_th|
  double vth = 0.45;  // V
  double n = 1.3;     // subthreshold slope factor

  friend bool operator==(const DeviceParams&, const DeviceParams&) = default;
};

inline void validate(const DeviceParams& p) {
  if (!(p.w_over_l > 0.0)) throw ConfigError("must be positive", "w_over_l");
  if (!(p.i0 > 0.0)) throw ConfigError("must be positive", "i0");
  if (!(p.n >= 1.0)) throw ConfigError("must be >= 1", "n");
  if (!(p.vth >= 0.0)) throw ConfigError("must be non-negative", "vth");
}

struct SubthresholdCurrent {
  double amps = 0.0;
  /// Set when |V_DS| < 4 V_T. Advisory only: the drain-independent form
  /// assumes a saturated subthreshold device.
  bool saturation_violation = false;
};

inline SubthresholdCurrent subthreshold_current(const DeviceParams& p, double v_gs_mag, double v_ds_mag, Kelvin t) {
  const double vt = thermal_voltage(t);
  const double amps = p.w_over_l * p.i0 * std::exp((v_gs_mag - p.vth) / (p.n * vt));
  return {amps, v_ds_mag < 4.0 * vt};
}

enum class IvSign { regulator, load };

/// I(V,T) = alpha(T) * exp(-+ q V / (beta(T) k_B T)). Tables are indexed in
/// Celsius and never extrapolated.
struct ExpIVCoeffs {
  PiecewiseLinear alpha;  // A
  PiecewiseLinear beta;   // dimensionless
  IvSign sign = IvSign::load;

  friend bool operator==(const ExpIVCoeffs&, const ExpIVCoeffs&) = default;
};

/// Knots used by the fitted regulator/load tables: 0, 10, ..., 100 degC.
inline std::vector<double> standard_temperature_knots() {
  std::vector<double> k;
  for (int i = 0; i <= 10; ++i) k.push_back(10.0 * i);
  return k;
}

/// Natural log of the current; used by the regulator solver to keep the
/// bisection well conditioned.
inline double log_exp_iv_current(const ExpIVCoeffs& c, double v, Celsius t) {
  const double a = c.alpha(t.value);
  const double b = c.beta(t.value);
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("alpha/beta must be positive");
  const double slope = 1.0 / (b * thermal_voltage(t));
  return std::log(a) + (c.sign == IvSign::regulator ? -slope : slope) * v;
}

inline double exp_iv_current(const ExpIVCoeffs& c, double v, Celsius t) {
  if (v < 0.0) throw DomainError("exp_iv_current: negative voltage");
  const double a = c.alpha(t.value);
  const double b = c.beta(t.value);
  const double x = v / (b * thermal_voltage(t));
  return a * std::exp(c.sign == IvSign::regulator ? -x : x);
}

}  // namespace tsense
