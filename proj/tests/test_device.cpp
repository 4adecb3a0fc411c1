#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <tsense/canonical.hpp>
#include <tsense/frontend.hpp>

using namespace tsense;

TEST(Units, ThermalVoltageAt300K) {
  // kT/q at 300 K, from CODATA constants worked by hand: 25.852 mV
  EXPECT_NEAR(thermal_voltage(Kelvin{300.0}), 0.0258520, 1e-7);
  EXPECT_NEAR(thermal_voltage(Celsius{26.85}), thermal_voltage(Kelvin{300.0}), 1e-15);
  EXPECT_THROW(thermal_voltage(Kelvin{0.0}), DomainError);
  EXPECT_DOUBLE_EQ(Celsius{25.0}.kelvin().value, 298.15);
  EXPECT_DOUBLE_EQ(Kelvin{273.15}.celsius().value, 0.0);
}

TEST(PiecewiseLinear, InterpolatesAndRefusesToExtrapolate) {
  PiecewiseLinear t({0.0, 10.0, 20.0}, {1.0, 3.0, 2.0});
  EXPECT_DOUBLE_EQ(t(0.0), 1.0);
  EXPECT_DOUBLE_EQ(t(5.0), 2.0);
  EXPECT_DOUBLE_EQ(t(15.0), 2.5);
  EXPECT_DOUBLE_EQ(t(20.0), 2.0);
  EXPECT_THROW(t(-0.5), DomainError);
  EXPECT_THROW(t(20.5), DomainError);
  EXPECT_THROW(PiecewiseLinear({0.0, 0.0}, {1.0, 1.0}), ConfigError);
  EXPECT_THROW(PiecewiseLinear({0.0, 1.0}, {1.0}), ConfigError);
}

TEST(Subthreshold, MatchesHandComputation) {
  DeviceParams p{4.0, 1e-9, 0.4, 1.5};
  const Kelvin t{300.0};
  const double vt = thermal_voltage(t);
  const auto i = subthreshold_current(p, 0.2, 0.2, t);
  EXPECT_NEAR(i.amps / (4e-9 * std::exp(-0.2 / (1.5 * vt))), 1.0, 1e-14);
  EXPECT_FALSE(i.saturation_violation);
  EXPECT_TRUE(subthreshold_current(p, 0.2, 0.05, t).saturation_violation);
  // 60*n mV per decade at room temperature, roughly
  const double decade = 1.5 * vt * std::log(10.0);
  EXPECT_NEAR(subthreshold_current(p, 0.2 + decade, 0.3, t).amps / i.amps, 10.0, 1e-9);
}

TEST(Subthreshold, ValidateRejectsNonsense) {
  EXPECT_THROW(validate(DeviceParams{0.0, 1e-9, 0.4, 1.3}), ConfigError);
  EXPECT_THROW(validate(DeviceParams{1.0, 1e-9, 0.4, 0.9}), ConfigError);
  EXPECT_THROW(validate(DeviceParams{1.0, -1.0, 0.4, 1.3}), ConfigError);
}

TEST(Tcc, RatioModelEqualsTwoDeviceEvaluations) {
  TccParams p{{24.0, 1e-7, 0.35, 1.75}, {1.0, 1e-7, 0.35, 1.75}};
  ASSERT_TRUE(check_invariants(p).empty());
  for (int k = 0; k <= 100; ++k) {
    const Celsius t{static_cast<double>(k)};
    const auto c = tcc_currents(p, 0.44, t);
    EXPECT_TRUE(c.ordering_ok());
    EXPECT_NEAR(current_ratio_model(p, 0.44, t) / (c.i_h / c.i_l), 1.0, 1e-12) << "T=" << k;
  }
}

TEST(Tcc, InvariantsFlagBadSizingAndMismatch) {
  TccParams p{{1.0, 1e-7, 0.35, 1.75}, {1.0, 1e-7, 0.35, 1.75}};
  EXPECT_EQ(check_invariants(p).size(), 1u);
  p.m1.w_over_l = 10.0;
  p.m2.vth = 0.36;
  EXPECT_FALSE(p.shares_process());
  EXPECT_EQ(check_invariants(p).size(), 1u);
}

TEST(Tcc, RatioFallsWithTemperatureWhenCurrentsRise) {
  TccParams p{{24.0, 1e-7, 0.35, 1.75}, {1.0, 1e-7, 0.35, 1.75}};
  // at fixed rail, I_H/I_L rises with T (the exponent shrinks)
  EXPECT_LT(current_ratio_model(p, 0.44, Celsius{0.0}), current_ratio_model(p, 0.44, Celsius{100.0}));
  EXPECT_THROW(tcc_currents(p, 0.0, Celsius{25.0}), DomainError);
}

namespace {

RegulatorParams simple_regulator(double headroom = 0.0) {
  const auto knots = standard_temperature_knots();
  RegulatorParams rp;
  rp.reg = {PiecewiseLinear::sample(knots, [](double t) { return 1e-3 * (1.0 + 0.01 * t); }),
            PiecewiseLinear::sample(knots, [](double t) { return 2.0 + 0.002 * t; }), IvSign::regulator};
  rp.load = {PiecewiseLinear::sample(knots, [](double t) { return 1e-9 * (1.0 + 0.03 * t); }),
             PiecewiseLinear::sample(knots, [](double t) { return 3.0 - 0.001 * t; }), IvSign::load};
  rp.headroom = headroom;
  return rp;
}

}  // namespace

TEST(Regulator, BisectionMatchesClosedFormOnGrid) {
  for (double h : {0.0, 0.01}) {
    const auto rp = simple_regulator(h);
    for (int ti = 0; ti <= 10; ++ti) {
      for (int vi = 0; vi <= 12; ++vi) {
        const Celsius t{10.0 * ti};
        const double vdd = 0.6 + 0.1 * vi;
        const auto s = solve_vvdd(rp, vdd, t);
        ASSERT_FALSE(s.headroom_violation);
        EXPECT_NEAR(s.v_vdd, vvdd_closed_form(rp, t, vdd), 1e-9);
      }
    }
  }
}

TEST(Regulator, CurrentsBalanceAtSolution) {
  const auto rp = simple_regulator(0.0);
  const auto s = solve_vvdd(rp, 0.6, Celsius{40.0});
  const double ir = exp_iv_current(rp.reg, s.v_vdd, Celsius{40.0});
  const double il = exp_iv_current(rp.load, s.v_vdd, Celsius{40.0});
  EXPECT_NEAR(ir / il, 1.0, 1e-6);
}

TEST(Regulator, ClampsAndFlagsWhenRailWouldExceedSupply) {
  const auto rp = simple_regulator(0.0);
  const double v = vvdd_closed_form(rp, Celsius{25.0});
  const auto s = solve_vvdd(rp, 0.8 * v, Celsius{25.0});
  EXPECT_TRUE(s.headroom_violation);
  EXPECT_DOUBLE_EQ(s.v_vdd, 0.8 * v);
  EXPECT_THROW(solve_vvdd(rp, 0.0, Celsius{25.0}), DomainError);
  EXPECT_THROW(solve_vvdd(rp, 0.6, Celsius{120.0}), DomainError);
}

TEST(Regulator, ZeroHeadroomMakesRailSupplyIndependent) {
  const auto rp = simple_regulator(0.0);
  const double a = solve_vvdd(rp, 0.6, Celsius{30.0}).v_vdd;
  const double b = solve_vvdd(rp, 1.8, Celsius{30.0}).v_vdd;
  EXPECT_NEAR(a, b, 2e-9);
}

TEST(Frontend, CanonicalRailAndSupplyCurrent) {
  const auto cfg = canonical_config();
  const auto s25 = frontend_state(cfg.tcc, cfg.regulator, 0.6, Celsius{25.0});
  EXPECT_NEAR(s25.v_vdd, 0.44, 0.01);
  double lo = 1e9, hi = 0.0;
  for (int t = 0; t <= 100; ++t) {
    const double v = frontend_state(cfg.tcc, cfg.regulator, 0.6, Celsius{double(t)}).v_vdd;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_LT(hi / lo - 1.0, 0.05);
  const double i0 = frontend_state(cfg.tcc, cfg.regulator, 0.6, Celsius{0.0}).i_supply;
  const double i100 = frontend_state(cfg.tcc, cfg.regulator, 0.6, Celsius{100.0}).i_supply;
  EXPECT_GE(i100 / i0, 6.0);
  EXPECT_LE(i100 / i0, 8.0);
}
