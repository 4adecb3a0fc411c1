#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cfc.hpp"
#include "fdc.hpp"
#include "frontend.hpp"
#include "seeds.hpp"

namespace tsense {

/// Back-end (counters + level shifters) power, affine in the supply.
struct BackendPower {
  double offset = 0.0;     // W
  double per_volt = 0.0;   // W/V

  double operator()(double v_dd) const { return offset + per_volt * v_dd; }
  friend bool operator==(const BackendPower&, const BackendPower&) = default;
};

struct SensorConfig {
  TccParams tcc;
  RegulatorParams regulator;
  OscPair osc;
  FdcConfig fdc;
  BackendPower backend;

  friend bool operator==(const SensorConfig&, const SensorConfig&) = default;
};

/// Structural checks only; a config can pass and still hit domain errors
/// at a given operating point.
inline void validate(const SensorConfig& c) {
  validate(c.tcc.m1);
  validate(c.tcc.m2);
  if (!(c.tcc.sizing_ratio() > 1.0)) throw ConfigError("m1.w_over_l / m2.w_over_l must exceed 1", "tcc");
  if (c.regulator.reg.sign != IvSign::regulator) throw ConfigError("must have regulator sign", "regulator.reg");
  if (c.regulator.load.sign != IvSign::load) throw ConfigError("must have load sign", "regulator.load");
  for (const auto* t : {&c.regulator.reg.alpha, &c.regulator.reg.beta, &c.regulator.load.alpha,
                        &c.regulator.load.beta}) {
    for (double v : t->values()) {
      if (!(v > 0.0)) throw ConfigError("table values must be positive", "regulator");
    }
  }
  if (!(c.regulator.headroom >= 0.0)) throw ConfigError("must be non-negative", "regulator.headroom");
  validate(c.osc);
  validate(c.fdc);
}

inline FrontEndState frontend_state(const SensorConfig& cfg, double v_dd, Celsius t) {
  return frontend_state(cfg.tcc, cfg.regulator, v_dd, t);
}

struct OperatingPoint {
  FrontEndState fe;
  Frequencies f;
};

inline OperatingPoint operating_point(const SensorConfig& cfg, double v_dd, Celsius t) {
  OperatingPoint op;
  op.fe = frontend_state(cfg, v_dd, t);
  op.f = frequencies(cfg.osc, op.fe.i_h, op.fe.i_l);
  return op;
}

/// Phase-averaged code, window_cycles * f_h / f_l, without quantization.
inline double expected_code(const SensorConfig& cfg, double v_dd, Celsius t) {
  const auto op = operating_point(cfg, v_dd, t);
  return cfg.fdc.window_cycles * op.f.f_h / op.f.f_l;
}

/// Jitter-free code at phase 0.
inline std::int64_t noiseless_code(const SensorConfig& cfg, double v_dd, Celsius t) {
  const auto op = operating_point(cfg, v_dd, t);
  return code_closed_form(op.f.f_h, op.f.f_l, cfg.fdc);
}

inline double total_power(const SensorConfig& cfg, const FrontEndState& s) {
  return s.v_dd * s.i_supply + cfg.backend(s.v_dd);
}

inline double conversion_energy(const SensorConfig& cfg, const FrontEndState& s, double t_conv) {
  if (!(t_conv > 0.0)) throw DomainError("conversion_energy: t_conv must be positive");
  return total_power(cfg, s) * t_conv;
}

inline ConversionResult noiseless_conversion(const SensorConfig& cfg, const OperatingPoint& op);

/// One jittered conversion. The hi/lo streams and the START phase are
/// derived from `seed`; the same seed always reproduces the same result.
/// Without jitter the phase is pinned too, so every read gives the
/// noiseless code.
inline ConversionResult noisy_conversion(const SensorConfig& cfg, const OperatingPoint& op, std::uint64_t seed) {
  const double sigma = cfg.osc.jitter_rel_sigma;
  if (sigma == 0.0) return noiseless_conversion(cfg, op);
  JitteredPeriodStream hi(1.0 / op.f.f_h, sigma, derive_seed(seed, 1));
  JitteredPeriodStream lo(1.0 / op.f.f_l, sigma, derive_seed(seed, 2));
  std::mt19937_64 prng(derive_seed(seed, 3));
  const double phase = unit_uniform(prng);
  auto r = run_conversion(hi, lo, phase, cfg.fdc);
  r.energy = conversion_energy(cfg, op.fe, r.t_conv);
  return r;
}

inline ConversionResult noiseless_conversion(const SensorConfig& cfg, const OperatingPoint& op) {
  const double ph = 1.0 / op.f.f_h, pl = 1.0 / op.f.f_l;
  auto r = run_conversion([ph] { return ph; }, [pl] { return pl; }, 0.0, cfg.fdc);
  r.energy = conversion_energy(cfg, op.fe, r.t_conv);
  return r;
}

}  // namespace tsense
