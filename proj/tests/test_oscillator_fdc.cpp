#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include <tsense/canonical.hpp>
#include <tsense/sensor.hpp>

using namespace tsense;

TEST(Seeds, SplitMixReferenceValues) {
  // first outputs of the reference splitmix64 generator started at 0
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(splitmix64(0x9e3779b97f4a7c15ULL), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(derive_seed(5, 0), 5ULL ^ 0xe220a8397b1dcdafULL);
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
}

TEST(Oscillator, PeriodFormula) {
  OscParams p{13, 2e-12, 0.44, 1e-6};
  EXPECT_DOUBLE_EQ(osc_period(p, 1e-9), 13 * (2e-12 * 0.44 / 1e-9 + 1e-6));
  EXPECT_THROW(osc_period(p, 0.0), DomainError);
  EXPECT_THROW(validate(OscParams{12, 1e-12, 0.44, 0.0}), ConfigError);
  EXPECT_THROW(validate(OscParams{1, 1e-12, 0.44, 0.0}), ConfigError);
}

TEST(Oscillator, FastMustBeFaster) {
  OscPair pair;
  EXPECT_THROW(frequencies(pair, 1e-12, 1e-6), ConfigError);
  const auto f = frequencies(pair, 1e-8, 1e-9);
  EXPECT_GT(f.f_h, f.f_l);
}

TEST(Oscillator, JitterIsTruncatedAndHasRightSigma) {
  JitteredPeriodStream s(1.0, 0.01, 42);
  std::vector<double> v(100000);
  double mx = 0.0, sum = 0.0, ss = 0.0;
  for (auto& x : v) {
    x = s();
    mx = std::max(mx, std::abs(x - 1.0));
    sum += x;
  }
  const double m = sum / v.size();
  for (double x : v) ss += (x - m) * (x - m);
  EXPECT_LE(mx, 0.05);
  EXPECT_NEAR(std::sqrt(ss / (v.size() - 1)), 0.01, 3e-4);
  EXPECT_NEAR(m, 1.0, 2e-4);
  JitteredPeriodStream z(2.0, 0.0, 1);
  EXPECT_EQ(z(), 2.0);
  EXPECT_THROW(JitteredPeriodStream(1.0, 0.3, 1), ConfigError);
}

TEST(Fdc, EventDrivenMatchesFloorOnRandomPairs) {
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> fl(1e4, 5e4), ratio(50.0, 500.0);
  for (int i = 0; i < 50; ++i) {
    const double f_l = fl(g), f_h = f_l * ratio(g);
    const auto ref = code_closed_form(f_h, f_l);
    for (int k = 0; k < 1000; ++k) {
      const double ph = k / 1000.0;
      const auto r = run_conversion([&] { return 1.0 / f_h; }, [&] { return 1.0 / f_l; }, ph);
      ASSERT_LE(std::llabs(r.code - ref), 1) << f_h << " " << f_l << " " << ph;
    }
  }
}

TEST(Fdc, CountsEdgesOnHalfOpenWindow) {
  // hi period 1, lo period 1, window 16: edges at 1..16 with phase 0
  const auto r = run_conversion([] { return 1.0; }, [] { return 1.0; }, 0.0);
  EXPECT_EQ(r.code, 16);
  EXPECT_DOUBLE_EQ(r.t_conv, 16.0);
  // half a period already elapsed: edges at 0.5, 1.5, ... 15.5
  EXPECT_EQ(run_conversion([] { return 1.0; }, [] { return 1.0; }, 0.5).code, 16);
  EXPECT_THROW(run_conversion([] { return 1.0; }, [] { return 1.0; }, 1.0), InputError);
}

TEST(Fdc, SaturatesAtCounterCapacity) {
  const auto r = run_conversion([] { return 1.0; }, [] { return 1000.0; }, 0.0);
  EXPECT_TRUE(r.overflow);
  EXPECT_EQ(r.code, 8191);
  EXPECT_EQ(r.hi_edges, 16000);
  EXPECT_EQ(code_closed_form(16000.0, 1.0), 8191);
}

TEST(Fdc, SpanSourcesAndExhaustion) {
  std::vector<double> hi(20, 1.0), lo(16, 1.0);
  EXPECT_EQ(run_conversion(std::span<const double>(hi), std::span<const double>(lo), 0.0).code, 16);
  std::vector<double> short_hi(3, 1.0);
  EXPECT_THROW(run_conversion(std::span<const double>(short_hi), std::span<const double>(lo), 0.0), InputError);
  FdcConfig bad{5, 13, 15};
  EXPECT_THROW(validate(bad), ConfigError);
}

TEST(Fdc, MuxSelectsFrontend) {
  std::vector<MuxInput> fe(2);
  fe[0] = {[] { return std::function<double()>([] { return 1.0; }); },
           [] { return std::function<double()>([] { return 1.0; }); }};
  fe[1] = {[] { return std::function<double()>([] { return 0.5; }); },
           [] { return std::function<double()>([] { return 1.0; }); }};
  EXPECT_EQ(mux_conversion(fe, 0, 0.0).code, 16);
  EXPECT_EQ(mux_conversion(fe, 1, 0.0).code, 32);
  EXPECT_THROW(mux_conversion(fe, 2, 0.0), InputError);
}

TEST(Sensor, EndpointCodesAndFrequencies) {
  const auto cfg = canonical_config();
  const auto op0 = operating_point(cfg, 0.6, Celsius{0.0});
  const auto op100 = operating_point(cfg, 0.6, Celsius{100.0});
  EXPECT_NEAR(op0.f.f_l / 17e3, 1.0, 0.01);
  EXPECT_NEAR(op100.f.f_l / 31.8e3, 1.0, 0.01);
  EXPECT_NEAR(op0.f.f_h / 4.3e6, 1.0, 0.01);
  EXPECT_NEAR(op100.f.f_h / 9.6e6, 1.0, 0.01);
  EXPECT_EQ(code_closed_form(4.3e6, 17e3), 4047);
  EXPECT_EQ(code_closed_form(9.6e6, 31.8e3), 4830);
  EXPECT_EQ(noiseless_conversion(cfg, op0).code, noiseless_code(cfg, 0.6, Celsius{0.0}));
}

TEST(Sensor, NoisyConversionIsSeedDeterministic) {
  const auto cfg = canonical_config();
  const auto op = operating_point(cfg, 0.6, Celsius{25.0});
  const auto a = noisy_conversion(cfg, op, 99);
  const auto b = noisy_conversion(cfg, op, 99);
  EXPECT_EQ(a.code, b.code);
  EXPECT_EQ(a.t_conv, b.t_conv);
  EXPECT_NEAR(a.energy, total_power(cfg, op.fe) * a.t_conv, 1e-24);
}

TEST(Sensor, PowerMonotoneInSupplyAndTemperature) {
  const auto cfg = canonical_config();
  double prev = 0.0;
  for (int k = 0; k <= 12; ++k) {
    const double p = total_power(cfg, frontend_state(cfg, 0.6 + 0.1 * k, Celsius{25.0}));
    EXPECT_GT(p, prev);
    prev = p;
  }
  prev = 0.0;
  for (int t = 0; t <= 100; t += 5) {
    const double p = total_power(cfg, frontend_state(cfg, 0.6, Celsius{double(t)}));
    EXPECT_GT(p, prev);
    prev = p;
  }
}
