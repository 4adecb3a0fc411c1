#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "lm.hpp"
#include "metrology.hpp"
#include "population.hpp"
#include "sensor.hpp"
#include "stats.hpp"
#include "variation.hpp"

namespace tsense {

/// Fixed choices made before fitting.
struct FitDesign {
  double n = 1.75;
  double sizing_ratio = 24.0;    // [W/L]1 / [W/L]2
  double i0 = 100e-9;            // A
  double log_alpha_ratio = 12.0;  // log(alpha_R / alpha_L), constant over T
  double delta_v = 0.44;         // V
  double edge_fraction = 0.5;    // t_edge share of the fast period at 100 degC
  double slow_edge_fraction = 0.225;  // same for the slow oscillator
  double i_supply_0 = 0.6e-6;    // A at 0 degC
  double i_supply_100 = 4.1e-6;  // A at 100 degC
};

/// Free parameters. The rail follows v25 * (1 + a1 z + a2 z^2 + a3 z^3) with
/// z = (T - 25) / 100, and the regulator tables are derived from it.
struct FitParams {
  double vth = 0.0;
  double ln_c_slow = 0.0;
  double ln_c_fast = 0.0;
  double ln_t_edge = 0.0;
  double v25 = 0.44;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double ln_t_edge_slow = 0.0;

  Eigen::VectorXd vec() const {
    Eigen::VectorXd v(9);
    v << vth, ln_c_slow, ln_c_fast, ln_t_edge, v25, a1, a2, a3, ln_t_edge_slow;
    return v;
  }
  static FitParams from(const Eigen::VectorXd& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
  }
};

struct Anchors {
  double f_l_0 = 17e3;
  double f_l_100 = 31.8e3;
  double f_h_0 = 4.3e6;
  double f_h_100 = 9.6e6;
  double v_vdd_25 = 0.44;
  double v_vdd_spread = 0.04;  // cap on max/min - 1 of the rail over 0-100 degC
  double power_low = 1.57e-6;   // W at 0.6 V, 25 degC
  double power_high = 5.61e-6;  // W at 1.8 V, 25 degC
  double energy_30 = 1.06e-9;   // J at 0.6 V, 30 degC
  double noise_lsb = 1.84;
  double corner_fs = -1.14;
  double corner_sf = 1.16;
  double line_sensitivity = 8.21;  // degC/V magnitude, 30 degC, cal 0.9 V
};

inline double rail_profile(const FitParams& p, double t_c) {
  const double z = (t_c - 25.0) / 100.0;
  return p.v25 * (1.0 + z * (p.a1 + z * (p.a2 + z * p.a3)));
}

/// Arrhenius interpolation of the supply current between the 0 and 100 degC
/// anchors.
inline double supply_profile(const FitDesign& d, double t_c) {
  const double k0 = 1.0 / Celsius{0.0}.kelvin().value, k1 = 1.0 / Celsius{100.0}.kelvin().value;
  const double s = (k0 - 1.0 / Celsius{t_c}.kelvin().value) / (k0 - k1);
  return d.i_supply_0 * std::pow(d.i_supply_100 / d.i_supply_0, s);
}

inline SensorConfig build_config(const FitDesign& d, const FitParams& p, const BackendPower& backend = {},
                                 double jitter = 0.0) {
  SensorConfig c;
  c.tcc.m1 = {d.sizing_ratio, d.i0, p.vth, d.n};
  c.tcc.m2 = {1.0, d.i0, p.vth, d.n};
  const auto knots = standard_temperature_knots();
  std::vector<double> al, ar, beta;
  for (double t : knots) {
    const double v = rail_profile(p, t);
    const double vt = thermal_voltage(Celsius{t});
    if (!(v > 0.0)) throw ConfigError("rail profile must stay positive", "fit");
    // Equal regulator and load slopes keep beta_eq = beta / 2 exact under
    // linear interpolation.
    beta.push_back(2.0 * v / (vt * d.log_alpha_ratio));
    al.push_back(supply_profile(d, t) * std::exp(-v / (beta.back() * vt)));
    ar.push_back(al.back() * std::exp(d.log_alpha_ratio));
  }
  c.regulator.reg = {PiecewiseLinear(knots, ar), PiecewiseLinear(knots, beta), IvSign::regulator};
  c.regulator.load = {PiecewiseLinear(knots, al), PiecewiseLinear(knots, beta), IvSign::load};
  c.osc.slow = {13, std::exp(p.ln_c_slow), d.delta_v, d.slow_edge_fraction > 0.0 ? std::exp(p.ln_t_edge_slow) : 0.0};
  c.osc.fast = {7, std::exp(p.ln_c_fast), d.delta_v, d.edge_fraction > 0.0 ? std::exp(p.ln_t_edge) : 0.0};
  c.osc.jitter_rel_sigma = jitter;
  c.backend = backend;
  return c;
}

namespace detail {

inline std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> g;
  const int n = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i <= n; ++i) g.push_back(lo + step * i);
  return g;
}

}  // namespace detail

inline FitParams initial_guess(const FitDesign& d, const Anchors& a) {
  FitParams p;
  p.vth = 0.22 + 0.055 * d.n;
  const double vt0 = thermal_voltage(Celsius{0.0});
  const double il = d.i0 * std::exp((0.22 - p.vth) / (d.n * vt0));
  const double ih = d.sizing_ratio * d.i0 * std::exp((0.44 / 3.0 - p.vth) / (d.n * vt0));
  p.ln_c_slow = std::log(il / (13.0 * d.delta_v * a.f_l_0));
  p.ln_c_fast = std::log(ih / (7.0 * d.delta_v * a.f_h_0));
  p.ln_t_edge = std::log(std::max(d.edge_fraction, 1e-3) / (7.0 * a.f_h_100));
  p.ln_t_edge_slow = std::log(std::max(d.slow_edge_fraction, 1e-3) / (13.0 * a.f_l_100));
  p.v25 = a.v_vdd_25;
  p.a1 = 0.05;
  p.a2 = -0.06;
  return p;
}

/// Weighted residuals of the front-end fit, evaluated through the full
/// regulator / TCC / oscillator chain at 0.6 V.
inline Eigen::VectorXd frontend_residuals(const FitDesign& d, const Anchors& a, const FitParams& p) {
  const auto cfg = build_config(d, p);
  const auto temps = detail::grid(0.0, 100.0, 1.0);
  std::vector<double> ratio;
  std::vector<Frequencies> f;
  std::vector<OperatingPoint> ops;
  for (double t : temps) {
    ops.push_back(operating_point(cfg, min_supported_vdd, Celsius{t}));
    ratio.push_back(ops.back().f.f_h / ops.back().f.f_l);
  }
  const auto lin = ordinary_least_squares(temps, ratio);
  const auto& o0 = ops.front();
  const auto& o1 = ops.back();
  double v_min = rail_profile(p, 0.0), v_max = v_min;
  for (double t : temps) {
    v_min = std::min(v_min, rail_profile(p, t));
    v_max = std::max(v_max, rail_profile(p, t));
  }
  std::vector<double> r = {
      100.0 * (o0.f.f_l / a.f_l_0 - 1.0),
      100.0 * (o1.f.f_l / a.f_l_100 - 1.0),
      100.0 * (o0.f.f_h / a.f_h_0 - 1.0),
      100.0 * (o1.f.f_h / a.f_h_100 - 1.0),
      30.0 * (rail_profile(p, 25.0) / a.v_vdd_25 - 1.0),
      100.0 * std::max(v_max / v_min - 1.0 - a.v_vdd_spread, 0.0),
  };
  for (std::size_t i = 0; i < temps.size(); ++i) {
    r.push_back(15.0 * (ratio[i] - (lin.slope * temps[i] + lin.intercept)) / ratio[i]);
  }
  const double stage = cfg.osc.fast.c_load * cfg.osc.fast.delta_v / o1.fe.i_h;
  r.push_back(d.edge_fraction > 0.0 ? 10.0 * (cfg.osc.fast.t_edge / (stage + cfg.osc.fast.t_edge) - d.edge_fraction)
                                    : p.ln_t_edge - initial_guess(d, a).ln_t_edge);
  const double stage_slow = cfg.osc.slow.c_load * cfg.osc.slow.delta_v / o1.fe.i_l;
  r.push_back(d.slow_edge_fraction > 0.0
                  ? 10.0 * (cfg.osc.slow.t_edge / (stage_slow + cfg.osc.slow.t_edge) - d.slow_edge_fraction)
                  : p.ln_t_edge_slow - initial_guess(d, a).ln_t_edge_slow);
  return Eigen::Map<Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
}

struct FrontendFit {
  FitParams params;
  LmResult lm;
};

inline FrontendFit fit_frontend(const FitDesign& d, const Anchors& a = {}) {
  Eigen::VectorXd x0 = initial_guess(d, a).vec();
  auto lm = levenberg_marquardt([&](const Eigen::VectorXd& x) { return frontend_residuals(d, a, FitParams::from(x)); },
                                x0);
  return {FitParams::from(lm.x), lm};
}

/// Linear least squares for the back-end power line against the two power
/// anchors and the energy anchor, each weighted relative to its target.
inline BackendPower fit_backend(const SensorConfig& cfg, const Anchors& a = {}) {
  const auto s_lo = frontend_state(cfg, 0.6, Celsius{25.0});
  const auto s_hi = frontend_state(cfg, 1.8, Celsius{25.0});
  const auto op30 = operating_point(cfg, 0.6, Celsius{30.0});
  const double t30 = cfg.fdc.window_cycles / op30.f.f_l;
  Eigen::Matrix<double, 3, 2> A;
  Eigen::Vector3d b;
  A << 1.0 / a.power_low, 0.6 / a.power_low, 1.0 / a.power_high, 1.8 / a.power_high, t30 / a.energy_30,
      0.6 * t30 / a.energy_30;
  b << 1.0 - 0.6 * s_lo.i_supply / a.power_low, 1.0 - 1.8 * s_hi.i_supply / a.power_high,
      1.0 - 0.6 * op30.fe.i_supply * t30 / a.energy_30;
  const Eigen::Vector2d x = A.colPivHouseholderQr().solve(b);
  return {x[0], x[1]};
}

/// Bisection on the jitter sigma so that `repeats` conversions at 25 degC,
/// 0.6 V show the target code sigma. Common random numbers (fixed seed) keep
/// the search monotone enough for bisection.
inline double calibrate_jitter(const SensorConfig& cfg, double target_lsb, int repeats = 4000,
                               std::uint64_t seed = 0x5eed) {
  const auto cal = calibrate(cfg, min_supported_vdd);
  auto sigma_at = [&](double s) {
    SensorConfig c = cfg;
    c.osc.jitter_rel_sigma = s;
    return noise_resolution(c, cal, Celsius{25.0}, min_supported_vdd, repeats, seed).sigma_lsb;
  };
  double lo = 0.0, hi = 0.01;
  if (sigma_at(hi) < target_lsb) throw CalibrationError("jitter target out of reach");
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    (sigma_at(mid) < target_lsb ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Phase-averaged two-point-calibrated error at `t` (0.6 V).
inline double smooth_error(const SensorConfig& cfg, double t, double v_dd = min_supported_vdd) {
  const auto cal = two_point_calibrate(expected_code(cfg, v_dd, Celsius{cal_low_c}),
                                       expected_code(cfg, v_dd, Celsius{cal_high_c}));
  return cal.estimate(expected_code(cfg, v_dd, Celsius{t})) - t;
}

/// Solves for the corner magnitudes that place FS and SF at the target
/// 50 degC errors.
inline CornerMagnitudes calibrate_corners(const SensorConfig& cfg, const Anchors& a = {}) {
  // Magnitudes are solved as squares so both stay non-negative.
  auto mags = [](const Eigen::VectorXd& k) { return CornerMagnitudes{k[0] * k[0], k[1] * k[1]}; };
  auto res = [&](const Eigen::VectorXd& k) {
    const auto m = mags(k);
    Eigen::VectorXd r(2);
    r[0] = smooth_error(apply_corner(cfg, make_corner(CornerName::FS, m)), 50.0) - a.corner_fs;
    r[1] = smooth_error(apply_corner(cfg, make_corner(CornerName::SF, m)), 50.0) - a.corner_sf;
    return r;
  };
  // Several roots exist; keep the smallest shifts among converged starts.
  std::optional<CornerMagnitudes> best;
  for (double p0 : {0.002, 0.01, 0.03}) {
    for (double n0 : {0.02, 0.08, 0.2}) {
      Eigen::VectorXd x0(2);
      x0 << std::sqrt(p0), std::sqrt(n0);
      try {
        const auto lm = levenberg_marquardt(res, x0);
        if (!(lm.cost < 1e-8)) continue;
        const auto m = mags(lm.x);
        if (!best || std::hypot(m.p, m.n) < std::hypot(best->p, best->n)) best = m;
      } catch (const std::exception&) {
      }
    }
  }
  if (!best) throw CalibrationError("corner calibration did not converge");
  return *best;
}

/// Supply sweep used for the line-sensitivity target: cal_vdd +- 0.2 V.
inline std::vector<double> line_sweep(double cal_vdd = 0.9) { return detail::grid(cal_vdd - 0.2, cal_vdd + 0.2, 0.05); }

/// Headroom coefficient giving |line sensitivity| = target at 30 degC with a
/// single calibration at 0.9 V.
inline double fit_headroom(const SensorConfig& cfg, double target = 8.21) {
  const auto sweep = line_sweep();
  auto sens = [&](double h) {
    SensorConfig c = cfg;
    c.regulator.headroom = h;
    return std::abs(line_sensitivity(c, Celsius{30.0}, 0.9, sweep, LineCalMode::single_point));
  };
  double lo = 0.0, hi = 0.01;
  while (sens(hi) < target) {
    hi *= 2.0;
    if (hi > 1.0) throw CalibrationError("line sensitivity target out of reach");
  }
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (sens(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Population used to place the lot: dies, supplies, grid and the fixed
/// mismatch sigmas. Only the lot i0 scale is solved for.
struct PopulationTarget {
  int n_dies = 20;
  std::uint64_t master_seed = 1;
  std::vector<double> vdds{0.6, 1.0, 1.4, 1.8};
  double t_step = 1.0;
  int cal_reads = 8;
  int point_reads = 4;
  double median_peak = 1.3;  // degC
  VariationSpec mismatch{0.5e-3, 5e-3, 0.02, 0.03, 0.0, 1.0};
};

inline double population_median_peak(const SensorConfig& cfg, const VariationSpec& spec, const PopulationTarget& pt) {
  const auto temps = detail::grid(0.0, 100.0, pt.t_step);
  const auto res = run_population(cfg, spec, pt.n_dies, pt.master_seed, pt.vdds, temps, {true, pt.cal_reads, pt.point_reads});
  return summarize(res).peak_median;
}

/// Bisection on log(lot_i0_scale) in [log 0.25, 0]. A slower lot raises the
/// edge share of both oscillators and with it the calibrated bow; the noise
/// draws are fixed by the seed so the median is close to monotone.
inline VariationSpec calibrate_lot(const SensorConfig& cfg, const PopulationTarget& pt = {}) {
  VariationSpec spec = pt.mismatch;
  auto med = [&](double log_lot) {
    spec.lot_i0_scale = std::exp(log_lot);
    return population_median_peak(cfg, spec, pt);
  };
  double lo = std::log(0.25), hi = 0.0;
  if (med(lo) < pt.median_peak || med(hi) > pt.median_peak) {
    throw CalibrationError("population median target out of reach");
  }
  for (int i = 0; i < 10; ++i) {
    const double mid = 0.5 * (lo + hi);
    (med(mid) > pt.median_peak ? lo : hi) = mid;
  }
  spec.lot_i0_scale = std::exp(0.5 * (lo + hi));
  return spec;
}

struct FitResult {
  FitDesign design;
  FitParams params;
  LmResult lm;
  double headroom = 0.0;
  BackendPower backend;
  double jitter = 0.0;
  CornerMagnitudes corners;
  VariationSpec variation;
  SensorConfig config;
};

/// Whole procedure in dependency order: front end, headroom (only moves
/// supplies above 0.6 V), back end, jitter, corners, lot.
inline FitResult fit_all(const FitDesign& d = {}, const Anchors& a = {}, const PopulationTarget& pt = {},
                         bool with_population = true) {
  FitResult r;
  r.design = d;
  const auto fe = fit_frontend(d, a);
  r.params = fe.params;
  r.lm = fe.lm;
  SensorConfig cfg = build_config(d, r.params);
  r.headroom = fit_headroom(cfg, a.line_sensitivity);
  cfg.regulator.headroom = r.headroom;
  r.backend = fit_backend(cfg, a);
  cfg.backend = r.backend;
  r.jitter = calibrate_jitter(cfg, a.noise_lsb);
  cfg.osc.jitter_rel_sigma = r.jitter;
  r.corners = calibrate_corners(cfg, a);
  r.variation = with_population ? calibrate_lot(cfg, pt) : pt.mismatch;
  r.variation.jitter_rel_sigma = r.jitter;
  r.config = cfg;
  return r;
}

}  // namespace tsense
