#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace tsense {

struct FdcConfig {
  int ref_bits = 5;
  int code_bits = 13;
  int window_cycles = 16;

  std::int64_t code_max() const { return (std::int64_t{1} << code_bits) - 1; }

  friend bool operator==(const FdcConfig&, const FdcConfig&) = default;
};

inline void validate(const FdcConfig& c) {
  if (c.ref_bits < 1 || c.ref_bits > 30) throw ConfigError("out of range [1, 30]", "fdc.ref_bits");
  if (c.code_bits < 1 || c.code_bits > 62) throw ConfigError("out of range [1, 62]", "fdc.code_bits");
  if (c.window_cycles != (1 << (c.ref_bits - 1))) {
    throw ConfigError("must equal 2^(ref_bits - 1)", "fdc.window_cycles");
  }
}

struct ConversionResult {
  std::int64_t code = 0;
  double window = 0.0;  // s, sum of the reference periods
  double t_conv = 0.0;  // s, START to DONE
  double energy = 0.0;  // J, filled in by the sensor layer
  bool overflow = false;
  std::int64_t hi_edges = 0;  // edges seen before saturation was applied
};

/// Event-driven model of the reference/code counter pair.
///
/// START coincides with a rising edge of the slow (lo) oscillator. DONE is
/// its `window_cycles`-th following rising edge. The fast (hi) oscillator's
/// last rising edge before START happened `phase` of its first period
/// earlier. Hi edges are counted on the half-open interval (START, DONE].
template <class HiSource, class LoSource>
  requires std::invocable<HiSource&> && std::invocable<LoSource&>
ConversionResult run_conversion(HiSource&& hi, LoSource&& lo, double phase, const FdcConfig& cfg = {}) {
  if (!(phase >= 0.0 && phase < 1.0)) throw InputError("run_conversion: phase must lie in [0, 1)");
  double done = 0.0;
  for (int i = 0; i < cfg.window_cycles; ++i) {
    const double p = lo();
    if (!(p > 0.0)) throw InputError("run_conversion: non-positive lo period");
    done += p;
  }
  const double p1 = hi();
  if (!(p1 > 0.0)) throw InputError("run_conversion: non-positive hi period");
  double t = p1 - phase * p1;
  std::int64_t count = 0;
  while (t <= done) {
    ++count;
    const double p = hi();
    if (!(p > 0.0)) throw InputError("run_conversion: non-positive hi period");
    t += p;
  }
  ConversionResult r;
  r.hi_edges = count;
  r.overflow = count > cfg.code_max();
  r.code = r.overflow ? cfg.code_max() : count;
  r.window = done;
  r.t_conv = done;
  return r;
}

namespace detail {

class SpanSource {
 public:
  SpanSource(std::span<const double> s, const char* name) : s_(s), name_(name) {}
  double operator()() {
    if (i_ >= s_.size()) throw InputError(std::string("run_conversion: ") + name_ + " period sequence exhausted");
    return s_[i_++];
  }

 private:
  std::span<const double> s_;
  std::size_t i_ = 0;
  const char* name_;
};

}  // namespace detail

inline ConversionResult run_conversion(std::span<const double> hi_periods, std::span<const double> lo_periods,
                                       double phase, const FdcConfig& cfg = {}) {
  return run_conversion(detail::SpanSource(hi_periods, "hi"), detail::SpanSource(lo_periods, "lo"), phase, cfg);
}

/// floor(window_cycles * f_h / f_l), saturated at the code counter capacity.
inline std::int64_t code_closed_form(double f_h, double f_l, const FdcConfig& cfg = {}) {
  if (!(f_l > 0.0) || !(f_h >= f_l)) throw DomainError("code_closed_form: need f_h >= f_l > 0");
  const double x = std::floor(cfg.window_cycles * f_h / f_l);
  return x > static_cast<double>(cfg.code_max()) ? cfg.code_max() : static_cast<std::int64_t>(x);
}

/// One front-end as seen by the shared back-end: factories for fresh hi/lo
/// period sources.
struct MuxInput {
  std::function<std::function<double()>()> hi;
  std::function<std::function<double()>()> lo;
};

inline ConversionResult mux_conversion(std::span<const MuxInput> frontends, std::size_t select, double phase,
                                       const FdcConfig& cfg = {}) {
  if (select >= frontends.size()) throw InputError("mux_conversion: select index out of range");
  const auto& fe = frontends[select];
  return run_conversion(fe.hi(), fe.lo(), phase, cfg);
}

}  // namespace tsense
