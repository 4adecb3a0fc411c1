#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "sensor.hpp"
#include "stats.hpp"

namespace tsense {

inline constexpr double cal_low_c = 10.0;
inline constexpr double cal_high_c = 90.0;

/// T_est(code) = 10 + (code - c10) * 80 / (c90 - c10). Codes are doubles so
/// that averaged calibration reads can be used directly.
struct TwoPointCalibration {
  double code10 = 0.0;
  double code90 = 0.0;

  double celsius_per_lsb() const { return (cal_high_c - cal_low_c) / (code90 - code10); }
  // Multiply before dividing so both calibration codes map back exactly.
  double estimate(double code) const { return cal_low_c + (code - code10) * (cal_high_c - cal_low_c) / (code90 - code10); }
};

inline TwoPointCalibration two_point_calibrate(double code10, double code90) {
  if (!(code90 > code10)) throw CalibrationError("two-point calibration needs code90 > code10");
  return {code10, code90};
}

/// Offset-only trim: the slope comes from a reference (nominal) device.
struct OnePointCalibration {
  double code_ref = 0.0;
  double temp_ref = 0.0;
  double celsius_per_lsb = 0.0;

  double estimate(double code) const { return temp_ref + (code - code_ref) * celsius_per_lsb; }
};

inline OnePointCalibration one_point_calibrate(double code_ref, double temp_ref, double celsius_per_lsb) {
  if (!(celsius_per_lsb > 0.0)) throw CalibrationError("one-point calibration needs a positive slope");
  return {code_ref, temp_ref, celsius_per_lsb};
}

/// Per-supply calibration entries, keyed by V_DD in volts.
class CalibrationTable {
 public:
  void insert(double v_dd, const TwoPointCalibration& c) {
    if (!(c.code90 > c.code10)) throw CalibrationError("calibration entry is not PTAT");
    entries_[v_dd] = c;
  }
  /// Entry for the nearest stored supply within 1 mV.
  const TwoPointCalibration& at(double v_dd) const {
    for (const auto& [v, c] : entries_) {
      if (std::abs(v - v_dd) < 1e-3) return c;
    }
    throw CalibrationError("no calibration entry for V_DD = " + std::to_string(v_dd));
  }
  std::size_t size() const { return entries_.size(); }
  const std::map<double, TwoPointCalibration>& entries() const { return entries_; }

 private:
  std::map<double, TwoPointCalibration> entries_;
};

struct ErrorSample {
  double t_true = 0.0;
  double t_est = 0.0;
  double error() const { return t_est - t_true; }
};

struct InaccuracyStats {
  double min = 0.0;
  double max = 0.0;
  double rms = 0.0;
  double relative_pct = 0.0;
  double peak() const { return std::max(-min, max); }
};

/// (max - min) / range * 100. `range` defaults to the span of true
/// temperatures in the input.
inline InaccuracyStats inaccuracy_stats(std::span<const ErrorSample> s, std::optional<double> range = {}) {
  if (s.empty()) throw InputError("inaccuracy_stats: no samples");
  InaccuracyStats r;
  r.min = r.max = s.front().error();
  double lo = s.front().t_true, hi = lo, ss = 0.0;
  for (const auto& e : s) {
    const double d = e.error();
    r.min = std::min(r.min, d);
    r.max = std::max(r.max, d);
    ss += d * d;
    lo = std::min(lo, e.t_true);
    hi = std::max(hi, e.t_true);
  }
  const double span = range ? *range : hi - lo;
  if (!(span > 0.0)) throw InputError("inaccuracy_stats: temperature range must be positive");
  r.rms = std::sqrt(ss / static_cast<double>(s.size()));
  r.relative_pct = (r.max - r.min) / span * 100.0;
  return r;
}

/// errors[die][point] with the same point grid for every die. Returns the
/// worst 3 * stddev across dies over all points.
inline double worst_three_sigma(const std::vector<std::vector<double>>& errors) {
  if (errors.size() < 2) return 0.0;
  const auto n = errors.front().size();
  double worst = 0.0;
  std::vector<double> col(errors.size());
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t d = 0; d < errors.size(); ++d) {
      if (errors[d].size() != n) throw InputError("worst_three_sigma: ragged input");
      col[d] = errors[d][j];
    }
    worst = std::max(worst, 3.0 * stddev(col));
  }
  return worst;
}

/// Mean code over `reads` jittered conversions (or the noiseless code when
/// reads == 0 or the die has no jitter).
inline double calibration_code(const SensorConfig& cfg, double v_dd, Celsius t, int reads, std::uint64_t seed) {
  const auto op = operating_point(cfg, v_dd, t);
  if (reads <= 0 || cfg.osc.jitter_rel_sigma == 0.0) return static_cast<double>(noiseless_conversion(cfg, op).code);
  double sum = 0.0;
  for (int r = 0; r < reads; ++r) sum += static_cast<double>(noisy_conversion(cfg, op, derive_seed(seed, r)).code);
  return sum / reads;
}

inline TwoPointCalibration calibrate(const SensorConfig& cfg, double v_dd, int reads = 0, std::uint64_t seed = 0) {
  return two_point_calibrate(calibration_code(cfg, v_dd, Celsius{cal_low_c}, reads, derive_seed(seed, 10)),
                             calibration_code(cfg, v_dd, Celsius{cal_high_c}, reads, derive_seed(seed, 90)));
}

struct NoiseResolution {
  double sigma_c = 0.0;
  double sigma_lsb = 0.0;
  std::vector<std::int64_t> codes;
};

inline NoiseResolution noise_resolution(const SensorConfig& cfg, const TwoPointCalibration& cal, Celsius t,
                                        double v_dd, int repeats, std::uint64_t seed) {
  if (repeats < 2) throw InputError("noise_resolution: repeats must be >= 2");
  const auto op = operating_point(cfg, v_dd, t);
  NoiseResolution r;
  std::vector<double> c;
  for (int i = 0; i < repeats; ++i) {
    const auto code = noisy_conversion(cfg, op, derive_seed(seed, static_cast<std::uint64_t>(i))).code;
    r.codes.push_back(code);
    c.push_back(static_cast<double>(code));
  }
  r.sigma_lsb = stddev(c);
  r.sigma_c = r.sigma_lsb * cal.celsius_per_lsb();
  return r;
}

enum class LineCalMode { single_point, per_vdd };

/// Least-squares slope (degC/V) of the reading error at `t` across the
/// supply sweep. Phase-averaged codes are used so the slope is not
/// dominated by LSB steps.
inline double line_sensitivity(const SensorConfig& cfg, Celsius t, double cal_vdd, std::span<const double> sweep,
                               LineCalMode mode) {
  if (sweep.size() < 3) throw InputError("line_sensitivity: sweep needs at least 3 supplies");
  for (double v : sweep) {
    if (v < min_supported_vdd - 1e-12 || v > max_supported_vdd + 1e-12) {
      throw DomainError("line_sensitivity: sweep outside the supported supply range");
    }
  }
  auto cal_at = [&](double v) {
    return two_point_calibrate(expected_code(cfg, v, Celsius{cal_low_c}), expected_code(cfg, v, Celsius{cal_high_c}));
  };
  const auto single = cal_at(cal_vdd);
  std::vector<double> err;
  for (double v : sweep) {
    const auto cal = mode == LineCalMode::single_point ? single : cal_at(v);
    err.push_back(cal.estimate(expected_code(cfg, v, t)) - t.value);
  }
  return ordinary_least_squares(sweep, err).slope;
}

/// Energy per conversion times resolution squared, in nJ K^2.
inline double r_fom(double energy_j, double resolution_c) {
  if (!(energy_j > 0.0) || !(resolution_c > 0.0)) throw InputError("r_fom: energy and resolution must be positive");
  return energy_j * 1e9 * resolution_c * resolution_c;
}

struct MetricsReport {
  double min_inacc = 0.0;
  double max_inacc = 0.0;
  double rms_inacc = 0.0;
  double three_sigma = 0.0;
  double relative_inacc = 0.0;     // percent
  double counter_resolution = 0.0;  // degC / LSB
  double noise_resolution = 0.0;   // degC
  double line_sensitivity = 0.0;   // degC / V
  double energy_per_conv = 0.0;    // J
  double conv_time = 0.0;          // s
  double r_fom = 0.0;              // nJ K^2
  double adj_r2 = 0.0;
};

// ---------------------------------------------------------------------------
// Comparison table

struct ComparisonRow {
  std::string name;
  double energy_nj = 0.0;
  double resolution_c = 0.0;
  double temp_min_c = 0.0;
  double temp_max_c = 0.0;
  double inacc_min_c = 0.0;
  double inacc_max_c = 0.0;
  std::optional<double> stated_relative_pct;
  std::optional<double> stated_r_fom;
};

struct ComparisonResult {
  ComparisonRow row;
  double relative_pct = 0.0;
  double r_fom = 0.0;
  bool relative_mismatch = false;
  bool r_fom_mismatch = false;
};

inline constexpr double comparison_tolerance = 0.05;

inline std::vector<ComparisonResult> comparison_table(std::span<const ComparisonRow> rows) {
  std::vector<ComparisonResult> out;
  for (const auto& r : rows) {
    const double range = r.temp_max_c - r.temp_min_c;
    if (!(range > 0.0)) throw InputError("comparison_table: row '" + r.name + "' has an empty temperature range");
    ComparisonResult c;
    c.row = r;
    c.relative_pct = (r.inacc_max_c - r.inacc_min_c) / range * 100.0;
    c.r_fom = r_fom(r.energy_nj * 1e-9, r.resolution_c);
    auto off = [](std::optional<double> stated, double v) {
      return stated && std::abs(*stated - v) > comparison_tolerance * std::abs(v);
    };
    c.relative_mismatch = off(r.stated_relative_pct, c.relative_pct);
    c.r_fom_mismatch = off(r.stated_r_fom, c.r_fom);
    out.push_back(std::move(c));
  }
  return out;
}

inline const char* comparison_csv_header =
    "name,energy_nJ,resolution_C,temp_min_C,temp_max_C,inacc_min_C,inacc_max_C,relative_pct,r_fom_nJK2";

/// Reads rows in the comparison_csv_header layout. The last two columns are
/// optional stated values and may be empty.
inline std::vector<ComparisonRow> parse_comparison_csv(std::istream& in) {
  std::vector<ComparisonRow> rows;
  std::string line;
  bool header = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      if (line.rfind("name,", 0) == 0) continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() < 7) throw InputError("comparison csv line " + std::to_string(lineno) + ": missing required fields");
    auto num = [&](std::size_t i) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(f[i], &pos);
        if (pos != f[i].size()) throw std::invalid_argument("trailing");
        return v;
      } catch (const std::exception&) {
        throw InputError("comparison csv line " + std::to_string(lineno) + ": field " + std::to_string(i + 1) +
                         " is not a number");
      }
    };
    ComparisonRow r;
    r.name = f[0];
    r.energy_nj = num(1);
    r.resolution_c = num(2);
    r.temp_min_c = num(3);
    r.temp_max_c = num(4);
    r.inacc_min_c = num(5);
    r.inacc_max_c = num(6);
    if (f.size() > 7 && !f[7].empty()) r.stated_relative_pct = num(7);
    if (f.size() > 8 && !f[8].empty()) r.stated_r_fom = num(8);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace tsense
