#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "errors.hpp"

namespace tsense {

/// Current-starved ring oscillator.
struct OscParams {
  int n_stages = 13;
  double c_load = 1e-12;  // F per stage
  double delta_v = 0.44;  // V, internal swing
  double t_edge = 0.0;    // s per stage, rise + fall

  friend bool operator==(const OscParams&, const OscParams&) = default;
};

inline void validate(const OscParams& p, const std::string& path = "osc") {
  if (p.n_stages < 3 || p.n_stages % 2 == 0) throw ConfigError("must be odd and >= 3", path + ".n_stages");
  if (!(p.c_load > 0.0)) throw ConfigError("must be positive", path + ".c_load");
  if (!(p.delta_v > 0.0)) throw ConfigError("must be positive", path + ".delta_v");
  if (!(p.t_edge >= 0.0)) throw ConfigError("must be non-negative", path + ".t_edge");
}

struct OscPair {
  OscParams slow{13, 1e-12, 0.44, 0.0};
  OscParams fast{7, 1e-14, 0.44, 0.0};
  double jitter_rel_sigma = 0.0;

  friend bool operator==(const OscPair&, const OscPair&) = default;
};

inline void validate(const OscPair& p) {
  validate(p.slow, "osc.slow");
  validate(p.fast, "osc.fast");
  if (!(p.jitter_rel_sigma >= 0.0)) throw ConfigError("must be non-negative", "osc.jitter_rel_sigma");
  if (!(5.0 * p.jitter_rel_sigma < 1.0)) throw ConfigError("5 sigma must stay below 1", "osc.jitter_rel_sigma");
}

/// N (C_L dV / I + t_edge)
inline double osc_period(const OscParams& p, double i_bias) {
  if (!(i_bias > 0.0)) throw DomainError("osc_period: bias current must be positive");
  return p.n_stages * (p.c_load * p.delta_v / i_bias + p.t_edge);
}

struct Frequencies {
  double f_h = 0.0;
  double f_l = 0.0;
};

inline Frequencies frequencies(const OscPair& pair, double i_h, double i_l) {
  Frequencies f{1.0 / osc_period(pair.fast, i_h), 1.0 / osc_period(pair.slow, i_l)};
  if (!(f.f_h > f.f_l)) throw ConfigError("fast oscillator must run faster than the slow one", "osc");
  return f;
}

/// i.i.d. periods nominal*(1 + g), g ~ N(0, sigma) truncated at +-5 sigma.
/// Owns its generator; one consumer per stream.
class JitteredPeriodStream {
 public:
  JitteredPeriodStream(double nominal, double sigma_rel, std::uint64_t seed)
      : nominal_(nominal), sigma_(sigma_rel), rng_(seed), dist_(0.0, sigma_rel > 0.0 ? sigma_rel : 1.0) {
    if (!(nominal > 0.0)) throw DomainError("period must be positive");
    if (!(sigma_rel >= 0.0)) throw ConfigError("must be non-negative", "jitter_rel_sigma");
    if (!(5.0 * sigma_rel < 1.0)) throw ConfigError("5 sigma must stay below 1", "jitter_rel_sigma");
  }

  double operator()() {
    if (sigma_ == 0.0) return nominal_;
    double g;
    do {
      g = dist_(rng_);
    } while (std::abs(g) > 5.0 * sigma_);
    return nominal_ * (1.0 + g);
  }

  double nominal() const { return nominal_; }

 private:
  double nominal_;
  double sigma_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> dist_;
};

inline JitteredPeriodStream jittered_period_stream(const OscParams& p, double i_bias, double sigma_rel,
                                                   std::uint64_t seed) {
  return {osc_period(p, i_bias), sigma_rel, seed};
}

}  // namespace tsense
