#pragma once

// Fitted constants for the default device. They are the output of
// fit_all() with default arguments (see `tsense fit`); the test suite
// re-runs the cheap parts of the fit and checks they still agree.

#include "fitting.hpp"

namespace tsense::canonical {

inline constexpr FitParams params{
    0.34156217737602612,   // vth
    -30.764546375754662,   // ln_c_slow
    -34.378857133072117,   // ln_c_fast
    -18.716370230327357,   // ln_t_edge
    0.43999993952987415,   // v25
    0.029130559830645265,  // a1
    -0.12073380631564448,  // a2
    0.036375076384577536,  // a3
    -14.423760861657691,   // ln_t_edge_slow
};

inline constexpr double headroom = 0.0071542813821387097;
inline constexpr BackendPower backend{-4.5258656359464146e-07, 2.2025031974084212e-06};
inline constexpr double jitter_rel_sigma = 0.0016811817538336985;
inline constexpr CornerMagnitudes corners{0.0068764289019986758, 0.16544328520610585};

inline constexpr int cal_reads = 8;
inline constexpr int point_reads = 4;

/// Population spread. Zero-spread scenarios use VariationSpec{} instead.
inline const VariationSpec variation{0.5e-3, 5e-3, 0.02, 0.03, jitter_rel_sigma, 0.37045823585523768};

}  // namespace tsense::canonical

namespace tsense {

inline SensorConfig canonical_config() {
  SensorConfig c = build_config(FitDesign{}, canonical::params, canonical::backend, canonical::jitter_rel_sigma);
  c.regulator.headroom = canonical::headroom;
  return c;
}

}  // namespace tsense
