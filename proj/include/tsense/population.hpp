#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "metrology.hpp"
#include "sensor.hpp"
#include "stats.hpp"
#include "variation.hpp"

namespace tsense {

/// Noise keys are integer millivolts / millidegrees so a point's draws do
/// not depend on where it sits in the grid.
inline std::uint64_t millis(double x) { return static_cast<std::uint64_t>(std::llround(x * 1000.0) + (1LL << 40)); }

inline std::uint64_t die_seed(std::uint64_t master, int die) { return derive_seed(master, static_cast<std::uint64_t>(die)); }
inline std::uint64_t cal_seed(std::uint64_t die_s, double v_dd) { return derive_seed(die_s, 1, millis(v_dd)); }
inline std::uint64_t read_seed(std::uint64_t die_s, double v_dd, double t_c) {
  return derive_seed(derive_seed(die_s, 2, millis(v_dd)), millis(t_c));
}

struct EvalOptions {
  bool noise = false;
  int cal_reads = 8;    // averaged reads per calibration point (noise only)
  int point_reads = 1;  // averaged reads per sweep point (noise only)
};

struct PointResult {
  int die = 0;
  double temp = 0.0;
  double vdd = 0.0;
  FrontEndState fe;
  Frequencies f;
  std::int64_t code = 0;  // first read
  double mean_code = 0.0;  // average over the point's reads
  double t_est = 0.0;
  double power = 0.0;
  double energy = 0.0;
  bool overflow = false;

  double error() const { return t_est - temp; }
};

struct DieVddResult {
  int die = 0;
  double vdd = 0.0;
  TwoPointCalibration cal;
  std::vector<PointResult> points;
  InaccuracyStats stats;
  double adj_r2 = 0.0;  // noiseless code vs T
};

/// One die at one supply: per-supply two-point calibration, then one
/// conversion per temperature.
inline DieVddResult evaluate_die_vdd(const SensorConfig& cfg, int die, std::uint64_t die_s, double v_dd,
                                     std::span<const double> temps, const EvalOptions& opt) {
  DieVddResult r;
  r.die = die;
  r.vdd = v_dd;
  const bool noisy = opt.noise && cfg.osc.jitter_rel_sigma > 0.0;
  r.cal = noisy ? calibrate(cfg, v_dd, opt.cal_reads, cal_seed(die_s, v_dd)) : calibrate(cfg, v_dd);
  std::vector<ErrorSample> errs;
  std::vector<double> tv, clean;
  for (double t : temps) {
    PointResult p;
    p.die = die;
    p.temp = t;
    p.vdd = v_dd;
    const auto op = operating_point(cfg, v_dd, Celsius{t});
    p.fe = op.fe;
    p.f = op.f;
    if (noisy) {
      const auto s = read_seed(die_s, v_dd, t);
      const int n = std::max(opt.point_reads, 1);
      double sum = 0.0;
      for (int k = 0; k < n; ++k) {
        // first read keeps the single-read seed so point_reads = 1 is a prefix
        const auto conv = noisy_conversion(cfg, op, k == 0 ? s : derive_seed(s, static_cast<std::uint64_t>(k)));
        if (k == 0) {
          p.code = conv.code;
          p.energy = conv.energy;
        }
        p.overflow = p.overflow || conv.overflow;
        sum += static_cast<double>(conv.code);
      }
      p.mean_code = sum / n;
    } else {
      const auto conv = noiseless_conversion(cfg, op);
      p.code = conv.code;
      p.energy = conv.energy;
      p.overflow = conv.overflow;
      p.mean_code = static_cast<double>(conv.code);
    }
    p.t_est = r.cal.estimate(p.mean_code);
    p.power = total_power(cfg, op.fe);
    errs.push_back({t, p.t_est});
    tv.push_back(t);
    clean.push_back(static_cast<double>(code_closed_form(op.f.f_h, op.f.f_l, cfg.fdc)));
    r.points.push_back(p);
  }
  // A single-temperature sweep has no span of its own; normalize to the
  // 0-100 degC table domain then.
  const bool flat = temps.front() == temps.back();
  r.stats = flat ? inaccuracy_stats(errs, 100.0) : inaccuracy_stats(errs);
  if (tv.size() >= 3) r.adj_r2 = ordinary_least_squares(tv, clean).adjusted_r2;
  return r;
}

/// The sampled die `index` of a campaign. Jitter comes from the sensor.
inline SensorConfig campaign_die(const SensorConfig& base, VariationSpec spec, std::uint64_t master, int index) {
  spec.jitter_rel_sigma = base.osc.jitter_rel_sigma;
  return apply_die(base, sample_die(spec, die_seed(master, index)));
}

struct PopulationSummary {
  double peak_min = 0.0;
  double peak_median = 0.0;
  double peak_max = 0.0;
  double rms_min = 0.0;
  double rms_max = 0.0;
  double error_min = 0.0;  // most negative error over everything
  double error_max = 0.0;
  double adj_r2_min = 0.0;
  double adj_r2_mean = 0.0;
  double three_sigma = 0.0;  // worst over supplies
};

/// `results` holds one entry per (die, supply); dies share the temperature
/// grid.
inline PopulationSummary summarize(std::span<const DieVddResult> results) {
  if (results.empty()) throw InputError("summarize: no results");
  PopulationSummary s;
  std::vector<double> peaks, rms, adj;
  s.error_min = results.front().stats.min;
  s.error_max = results.front().stats.max;
  std::map<long long, std::vector<std::vector<double>>> by_vdd;
  for (const auto& r : results) {
    peaks.push_back(r.stats.peak());
    rms.push_back(r.stats.rms);
    s.error_min = std::min(s.error_min, r.stats.min);
    s.error_max = std::max(s.error_max, r.stats.max);
    std::vector<double> e;
    for (const auto& p : r.points) e.push_back(p.error());
    by_vdd[std::llround(r.vdd * 1000.0)].push_back(std::move(e));
  }
  // adjusted R^2 is reported per die at the lowest supply only
  const long long low = by_vdd.begin()->first;
  for (const auto& r : results) {
    if (std::llround(r.vdd * 1000.0) == low) adj.push_back(r.adj_r2);
  }
  s.peak_min = *std::min_element(peaks.begin(), peaks.end());
  s.peak_max = *std::max_element(peaks.begin(), peaks.end());
  s.peak_median = median(peaks);
  s.rms_min = *std::min_element(rms.begin(), rms.end());
  s.rms_max = *std::max_element(rms.begin(), rms.end());
  s.adj_r2_min = *std::min_element(adj.begin(), adj.end());
  s.adj_r2_mean = mean(adj);
  for (const auto& [mv, errs] : by_vdd) s.three_sigma = std::max(s.three_sigma, worst_three_sigma(errs));
  return s;
}

/// Serial population run, used by calibration and tests. The campaign
/// runner produces identical numbers with a worker pool.
inline std::vector<DieVddResult> run_population(const SensorConfig& base, const VariationSpec& spec, int n_dies,
                                                std::uint64_t master, std::span<const double> vdds,
                                                std::span<const double> temps, const EvalOptions& opt) {
  std::vector<DieVddResult> out;
  for (int d = 0; d < n_dies; ++d) {
    const auto cfg = campaign_die(base, spec, master, d);
    for (double v : vdds) out.push_back(evaluate_die_vdd(cfg, d, die_seed(master, d), v, temps, opt));
  }
  return out;
}

}  // namespace tsense
