#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "sensor.hpp"
#include "seeds.hpp"

namespace tsense {

enum class CornerName { TT, FF, SS, FS, SF };

inline std::string_view to_string(CornerName c) {
  switch (c) {
    case CornerName::TT: return "TT";
    case CornerName::FF: return "FF";
    case CornerName::SS: return "SS";
    case CornerName::FS: return "FS";
    case CornerName::SF: return "SF";
  }
  return "?";
}

inline std::optional<CornerName> parse_corner(std::string_view s) {
  for (auto c : {CornerName::TT, CornerName::FF, CornerName::SS, CornerName::FS, CornerName::SF}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

/// Global process shift. dvth_p moves the PMOS threshold of the current
/// mirrors (positive = slower). dvth_n is the equivalent threshold shift of
/// the native regulator stack (positive = weaker regulator), applied to the
/// regulator alpha table as exp(-dvth_n / (beta_R V_T)).
struct Corner {
  CornerName name = CornerName::TT;
  double dvth_p = 0.0;  // V
  double dvth_n = 0.0;  // V
};

/// Corner magnitudes. Names are PMOS-first, so FS is fast PMOS with a slow
/// native stack: FS = (-p, +n), SF = (+p, -n), FF = (-p, -n), SS = (+p, +n)
/// as (dvth_p, dvth_n).
struct CornerMagnitudes {
  double p = 0.0;
  double n = 0.0;
};

inline Corner make_corner(CornerName name, const CornerMagnitudes& k) {
  switch (name) {
    case CornerName::TT: return {name, 0.0, 0.0};
    case CornerName::FF: return {name, -k.p, -k.n};
    case CornerName::SS: return {name, k.p, k.n};
    case CornerName::FS: return {name, -k.p, k.n};
    case CornerName::SF: return {name, k.p, -k.n};
  }
  return {};
}

namespace detail {

inline PiecewiseLinear shift_regulator_alpha(const RegulatorParams& rp, double dvth) {
  return rp.reg.alpha.transformed([&](double t, double a) {
    return a * std::exp(-dvth / (rp.reg.beta(t) * thermal_voltage(Celsius{t})));
  });
}

}  // namespace detail

inline SensorConfig apply_corner(const SensorConfig& cfg, const Corner& c) {
  SensorConfig out = cfg;
  if (c.dvth_p != 0.0) {
    out.tcc.m1.vth += c.dvth_p;
    out.tcc.m2.vth += c.dvth_p;
  }
  if (c.dvth_n != 0.0) out.regulator.reg.alpha = detail::shift_regulator_alpha(cfg.regulator, c.dvth_n);
  return out;
}

/// Random die-to-die magnitudes (one sigma each).
struct VariationSpec {
  double sigma_vth = 0.0;     // V, independent per mirror device
  double sigma_native = 0.0;  // V, regulator stack equivalent
  double sigma_i0 = 0.0;      // log-normal sigma of the per-device i0 scale
  double sigma_cap = 0.0;     // log-normal sigma of the per-oscillator load
  double jitter_rel_sigma = 0.0;
  // Fixed i0 scale shared by every die of a campaign (where the lot sits
  // relative to the typical model). Not random.
  double lot_i0_scale = 1.0;

  friend bool operator==(const VariationSpec&, const VariationSpec&) = default;
};

inline void validate(const VariationSpec& v) {
  if (!(v.sigma_vth >= 0.0)) throw ConfigError("must be non-negative", "variation.sigma_vth");
  if (!(v.sigma_native >= 0.0)) throw ConfigError("must be non-negative", "variation.sigma_native");
  if (!(v.sigma_i0 >= 0.0)) throw ConfigError("must be non-negative", "variation.sigma_i0");
  if (!(v.sigma_cap >= 0.0)) throw ConfigError("must be non-negative", "variation.sigma_cap");
  if (!(v.jitter_rel_sigma >= 0.0 && 5.0 * v.jitter_rel_sigma < 1.0)) {
    throw ConfigError("must be in [0, 0.2)", "variation.jitter_rel_sigma");
  }
  if (!(v.lot_i0_scale > 0.0 && std::isfinite(v.lot_i0_scale))) {
    throw ConfigError("must be positive", "variation.lot_i0_scale");
  }
}

struct DieSample {
  std::uint64_t seed = 0;
  std::array<double, 3> vth_offsets{};       // m1, m2, native stack (V)
  std::array<double, 2> i0_scales{1.0, 1.0};  // m1, m2
  std::array<double, 2> cap_scales{1.0, 1.0};  // slow, fast
  double jitter_rel_sigma = 0.0;

  friend bool operator==(const DieSample&, const DieSample&) = default;
};

/// The unperturbed die for `cfg`.
inline DieSample nominal_die(const SensorConfig& cfg) {
  DieSample d;
  d.jitter_rel_sigma = cfg.osc.jitter_rel_sigma;
  return d;
}

/// Gaussian draws from a generator seeded with `seed` only. Draw order is
/// fixed: m1, m2, native, i0 m1, i0 m2, cap slow, cap fast. The lot scale
/// multiplies both i0 draws.
inline DieSample sample_die(const VariationSpec& spec, std::uint64_t seed) {
  validate(spec);
  std::mt19937_64 g(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  DieSample d;
  d.seed = seed;
  d.vth_offsets[0] = spec.sigma_vth * z(g);
  d.vth_offsets[1] = spec.sigma_vth * z(g);
  d.vth_offsets[2] = spec.sigma_native * z(g);
  d.i0_scales[0] = spec.lot_i0_scale * std::exp(spec.sigma_i0 * z(g));
  d.i0_scales[1] = spec.lot_i0_scale * std::exp(spec.sigma_i0 * z(g));
  d.cap_scales[0] = std::exp(spec.sigma_cap * z(g));
  d.cap_scales[1] = std::exp(spec.sigma_cap * z(g));
  d.jitter_rel_sigma = spec.jitter_rel_sigma;
  return d;
}

/// Die i of a campaign seeded with `master`.
inline DieSample sample_die(const VariationSpec& spec, std::uint64_t master, std::uint64_t index) {
  return sample_die(spec, derive_seed(master, index));
}

/// Mismatch deliberately makes m1 and m2 differ, so the result no longer
/// satisfies TccParams::shares_process().
inline SensorConfig apply_die(const SensorConfig& cfg, const DieSample& d) {
  SensorConfig out = cfg;
  out.tcc.m1.vth += d.vth_offsets[0];
  out.tcc.m2.vth += d.vth_offsets[1];
  out.tcc.m1.i0 *= d.i0_scales[0];
  out.tcc.m2.i0 *= d.i0_scales[1];
  if (d.vth_offsets[2] != 0.0) out.regulator.reg.alpha = detail::shift_regulator_alpha(cfg.regulator, d.vth_offsets[2]);
  out.osc.slow.c_load *= d.cap_scales[0];
  out.osc.fast.c_load *= d.cap_scales[1];
  out.osc.jitter_rel_sigma = d.jitter_rel_sigma;
  return out;
}

}  // namespace tsense
