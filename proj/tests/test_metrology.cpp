#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <sstream>

#include <tsense/canonical.hpp>
#include <tsense/metrology.hpp>

using namespace tsense;

TEST(Stats, OlsAgreesWithEigenLeastSquares) {
  std::vector<double> x, y;
  for (int i = 0; i < 30; ++i) {
    x.push_back(i * 0.7);
    y.push_back(3.0 - 1.25 * i * 0.7 + 0.1 * std::sin(i));
  }
  const auto f = ordinary_least_squares(x, y);
  Eigen::MatrixXd A(x.size(), 2);
  Eigen::VectorXd b(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    A(i, 0) = x[i];
    A(i, 1) = 1.0;
    b[i] = y[i];
  }
  const Eigen::VectorXd s = A.colPivHouseholderQr().solve(b);
  EXPECT_NEAR(f.slope, s[0], 1e-12);
  EXPECT_NEAR(f.intercept, s[1], 1e-12);
  const double ssr = (A * s - b).squaredNorm();
  const double sst = (b.array() - b.mean()).matrix().squaredNorm();
  const double r2 = 1.0 - ssr / sst;
  EXPECT_NEAR(f.r2, r2, 1e-12);
  EXPECT_NEAR(f.adjusted_r2, 1.0 - (1.0 - r2) * 29.0 / 28.0, 1e-12);
}

TEST(Stats, ExactLineAndDegenerateInput) {
  std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8};
  const auto f = ordinary_least_squares(x, y);
  EXPECT_DOUBLE_EQ(f.r2, 1.0);
  EXPECT_DOUBLE_EQ(f.adjusted_r2, 1.0);
  std::vector<double> same{1, 1, 1};
  EXPECT_THROW(ordinary_least_squares(same, same), InputError);
  EXPECT_THROW(ordinary_least_squares(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InputError);
  EXPECT_DOUBLE_EQ(median({3, 1, 2, 10}), 2.5);
  EXPECT_NEAR(stddev(std::vector<double>{1, 2, 3, 4}), std::sqrt(5.0 / 3.0), 1e-15);
}

TEST(Calibration, TwoPointIsExactAtAnchors) {
  const auto c = two_point_calibrate(4100.0, 4700.0);
  EXPECT_DOUBLE_EQ(c.estimate(4100.0), 10.0);
  EXPECT_EQ(c.estimate(4700.0), 90.0);
  EXPECT_DOUBLE_EQ(c.celsius_per_lsb(), 80.0 / 600.0);
  EXPECT_THROW(two_point_calibrate(10.0, 10.0), CalibrationError);
  const auto one = one_point_calibrate(4000.0, 25.0, 0.13);
  EXPECT_DOUBLE_EQ(one.estimate(4010.0), 26.3);
  EXPECT_THROW(one_point_calibrate(1.0, 1.0, 0.0), CalibrationError);
}

TEST(Calibration, TableLookupByNearestMillivolt) {
  CalibrationTable t;
  t.insert(0.6, {100, 200});
  t.insert(1.0, {110, 210});
  EXPECT_EQ(t.at(0.6004).code10, 100);
  EXPECT_EQ(t.at(1.0).code10, 110);
  EXPECT_THROW(t.at(0.8), CalibrationError);
  EXPECT_THROW(t.insert(1.2, {200, 100}), CalibrationError);
}

TEST(Calibration, CanonicalZeroErrorAtCalibrationPoints) {
  const auto cfg = canonical_config();
  for (double v : {0.6, 1.2, 1.8}) {
    const auto cal = calibrate(cfg, v);
    EXPECT_EQ(cal.estimate(double(noiseless_code(cfg, v, Celsius{10.0}))), 10.0);
    EXPECT_EQ(cal.estimate(double(noiseless_code(cfg, v, Celsius{90.0}))), 90.0);
  }
}

TEST(Inaccuracy, StatsByHand) {
  std::vector<ErrorSample> s{{0, 0.5}, {50, 49.0}, {100, 100.2}};
  const auto st = inaccuracy_stats(s);
  EXPECT_DOUBLE_EQ(st.min, -1.0);
  EXPECT_DOUBLE_EQ(st.max, 0.5);
  EXPECT_NEAR(st.rms, std::sqrt((0.25 + 1.0 + 0.04) / 3.0), 1e-12);
  EXPECT_NEAR(st.relative_pct, 1.5, 1e-12);
  EXPECT_DOUBLE_EQ(st.peak(), 1.0);
  EXPECT_NEAR(inaccuracy_stats(s, 50.0).relative_pct, 3.0, 1e-12);
  EXPECT_THROW(inaccuracy_stats({}), InputError);
}

TEST(Inaccuracy, WorstThreeSigma) {
  std::vector<std::vector<double>> e{{0.0, 1.0}, {0.0, -1.0}, {0.0, 0.0}};
  EXPECT_NEAR(worst_three_sigma(e), 3.0, 1e-12);
  EXPECT_EQ(worst_three_sigma({{1.0, 2.0}}), 0.0);
}

TEST(LineSensitivity, PerSupplyCalibrationBeatsSinglePoint) {
  auto cfg = canonical_config();
  const auto sweep = line_sweep(0.9);
  const double single = std::abs(line_sensitivity(cfg, Celsius{30.0}, 0.9, sweep, LineCalMode::single_point));
  const double per = std::abs(line_sensitivity(cfg, Celsius{30.0}, 0.9, sweep, LineCalMode::per_vdd));
  EXPECT_NEAR(single, 8.21, 0.05);
  EXPECT_LT(per, single);
  cfg.regulator.headroom = 0.0;
  EXPECT_NEAR(line_sensitivity(cfg, Celsius{30.0}, 0.9, sweep, LineCalMode::single_point), 0.0, 1e-6);
  EXPECT_THROW(line_sensitivity(cfg, Celsius{30.0}, 0.9, std::vector<double>{0.5, 0.6, 0.7}, LineCalMode::per_vdd),
               DomainError);
}

TEST(Comparison, RecomputesAndFlags) {
  std::istringstream in(
      "# external designs\n"
      "name,energy_nJ,resolution_C,temp_min_C,temp_max_C,inacc_min_C,inacc_max_C,relative_pct,r_fom_nJK2\n"
      "a,1.06,0.24,0,100,-1.45,1.4,2.85,0.061\n"
      "b,2.0,0.1,0,50,-1,1,10,\n"
      "c,1.0,1.0,0,100,-1,1,,\n");
  const auto rows = parse_comparison_csv(in);
  ASSERT_EQ(rows.size(), 3u);
  const auto r = comparison_table(rows);
  EXPECT_NEAR(r[0].relative_pct, 2.85, 1e-12);
  EXPECT_NEAR(r[0].r_fom, 1.06 * 0.0576, 1e-12);
  EXPECT_FALSE(r[0].relative_mismatch);
  EXPECT_FALSE(r[0].r_fom_mismatch);
  EXPECT_NEAR(r[1].relative_pct, 4.0, 1e-12);
  EXPECT_TRUE(r[1].relative_mismatch);
  EXPECT_FALSE(r[2].relative_mismatch);
  std::istringstream bad("x,1,2,3\n");
  EXPECT_THROW(parse_comparison_csv(bad), InputError);
  std::istringstream bad2("x,1,abc,0,100,-1,1\n");
  EXPECT_THROW(parse_comparison_csv(bad2), InputError);
  EXPECT_THROW(r_fom(0.0, 1.0), InputError);
}
