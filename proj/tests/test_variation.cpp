#include <gtest/gtest.h>

#include <tsense/canonical.hpp>
#include <tsense/population.hpp>

using namespace tsense;

TEST(Corners, PmosFirstSigns) {
  const CornerMagnitudes k{0.01, 0.1};
  EXPECT_EQ(make_corner(CornerName::FS, k).dvth_p, -0.01);
  EXPECT_EQ(make_corner(CornerName::FS, k).dvth_n, 0.1);
  EXPECT_EQ(make_corner(CornerName::SF, k).dvth_p, 0.01);
  EXPECT_EQ(make_corner(CornerName::SF, k).dvth_n, -0.1);
  EXPECT_EQ(make_corner(CornerName::TT, k).dvth_p, 0.0);
  EXPECT_EQ(parse_corner("SS"), CornerName::SS);
  EXPECT_FALSE(parse_corner("XX").has_value());
}

TEST(Corners, NativeShiftScalesRegulatorAlpha) {
  const auto cfg = canonical_config();
  const auto c = apply_corner(cfg, {CornerName::SS, 0.0, 0.02});
  for (double t : {0.0, 50.0, 100.0}) {
    const double expect = std::exp(-0.02 / (cfg.regulator.reg.beta(t) * thermal_voltage(Celsius{t})));
    EXPECT_NEAR(c.regulator.reg.alpha(t) / cfg.regulator.reg.alpha(t), expect, 1e-12);
  }
  // weaker regulator -> lower rail
  EXPECT_LT(frontend_state(c, 0.6, Celsius{25.0}).v_vdd, frontend_state(cfg, 0.6, Celsius{25.0}).v_vdd);
}

TEST(Corners, CalibratedFsSfErrorsAt50C) {
  const auto cfg = canonical_config();
  for (auto [name, target] : {std::pair{CornerName::FS, -1.14}, std::pair{CornerName::SF, 1.16}}) {
    const auto c = apply_corner(cfg, make_corner(name, canonical::corners));
    const auto cal = calibrate(c, 0.6);
    const double e = cal.estimate(double(noiseless_code(c, 0.6, Celsius{50.0}))) - 50.0;
    EXPECT_NEAR(e, target, 0.3) << to_string(name);
  }
}

TEST(Variation, SampleDieIsSeededAndOrdered) {
  const auto& spec = canonical::variation;
  const auto a = sample_die(spec, 1, 3);
  const auto b = sample_die(spec, 1, 3);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, sample_die(spec, 1, 4));
  // lot scale multiplies both i0 draws
  VariationSpec unit = spec;
  unit.lot_i0_scale = 1.0;
  const auto u = sample_die(unit, 1, 3);
  EXPECT_NEAR(a.i0_scales[0] / u.i0_scales[0], spec.lot_i0_scale, 1e-12);
  EXPECT_EQ(a.vth_offsets, u.vth_offsets);
  VariationSpec zero;
  const auto z = sample_die(zero, 9);
  EXPECT_EQ(z.vth_offsets[0], 0.0);
  EXPECT_EQ(z.i0_scales[1], 1.0);
  VariationSpec bad;
  bad.lot_i0_scale = 0.0;
  EXPECT_THROW(validate(bad), ConfigError);
}

TEST(Variation, MismatchBreaksSharedProcess) {
  const auto cfg = canonical_config();
  EXPECT_TRUE(cfg.tcc.shares_process());
  const auto d = apply_die(cfg, sample_die(canonical::variation, 1, 0));
  EXPECT_FALSE(d.tcc.shares_process());
  EXPECT_EQ(apply_die(cfg, nominal_die(cfg)), cfg);
}

TEST(Population, NoiselessZeroAtCalibrationPointsForEveryDie) {
  const auto cfg = canonical_config();
  std::vector<double> temps;
  for (int t = 0; t <= 100; t += 10) temps.push_back(t);
  const std::vector<double> vdds{0.6, 1.8};
  const auto res = run_population(cfg, canonical::variation, 5, 3, vdds, temps, {});
  ASSERT_EQ(res.size(), 10u);
  for (const auto& r : res) {
    for (const auto& p : r.points) {
      if (p.temp == 10.0 || p.temp == 90.0) EXPECT_DOUBLE_EQ(p.error(), 0.0);
    }
    EXPECT_GE(r.adj_r2, 0.999);
  }
}

TEST(Population, SingleNominalDieSummaryEqualsItsStats) {
  const auto cfg = canonical_config();
  std::vector<double> temps;
  for (int t = 0; t <= 100; t += 10) temps.push_back(t);
  const std::vector<double> vdds{0.6};
  const auto res = run_population(cfg, VariationSpec{}, 1, 1, vdds, temps, {});
  const auto s = summarize(res);
  EXPECT_EQ(s.peak_min, res[0].stats.peak());
  EXPECT_EQ(s.peak_max, res[0].stats.peak());
  EXPECT_EQ(s.rms_min, res[0].stats.rms);
  EXPECT_EQ(s.error_min, res[0].stats.min);
  EXPECT_EQ(s.three_sigma, 0.0);
  // codes monotone and the single-die smoke shape
  ASSERT_EQ(res[0].points.size(), 11u);
  for (std::size_t i = 1; i < res[0].points.size(); ++i) EXPECT_GT(res[0].points[i].code, res[0].points[i - 1].code);
}

TEST(Population, PointSeedsDependOnValuesNotPosition) {
  const auto cfg = canonical_config();
  const std::vector<double> full{0, 10, 20, 30}, part{20};
  const std::vector<double> v{0.6};
  EvalOptions opt{true, 8, 1};
  const auto a = evaluate_die_vdd(cfg, 0, die_seed(1, 0), 0.6, full, opt);
  const auto b = evaluate_die_vdd(cfg, 0, die_seed(1, 0), 0.6, part, opt);
  EXPECT_EQ(a.points[2].code, b.points[0].code);
  EXPECT_EQ(millis(0.6), millis(0.6000000001));
}
