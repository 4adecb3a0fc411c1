#include <gtest/gtest.h>

#include <tsense/canonical.hpp>
#include <tsense/fitting.hpp>

using namespace tsense;

TEST(Lm, RecoversExponentialDecay) {
  std::vector<double> t, y;
  for (int i = 0; i < 20; ++i) {
    t.push_back(i * 0.25);
    y.push_back(2.5 * std::exp(-0.8 * t.back()) + 0.3);
  }
  auto f = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) r[i] = p[0] * std::exp(-p[1] * t[i]) + p[2] - y[i];
    return r;
  };
  Eigen::VectorXd x0(3);
  x0 << 1.0, 0.3, 0.0;
  const auto r = levenberg_marquardt(f, x0);
  EXPECT_NEAR(r.x[0], 2.5, 1e-6);
  EXPECT_NEAR(r.x[1], 0.8, 1e-6);
  EXPECT_NEAR(r.x[2], 0.3, 1e-6);
  EXPECT_LT(r.cost, 1e-14);
}

TEST(Lm, Rosenbrock) {
  auto f = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(2);
    r << 10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0];
    return r;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const auto r = levenberg_marquardt(f, x0);
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], 1.0, 1e-6);
}

TEST(Fit, BuildConfigRailFollowsProfile) {
  // the load-line closed form must land on the rail profile at every knot
  const auto cfg = build_config(FitDesign{}, canonical::params);
  for (double t : standard_temperature_knots()) {
    EXPECT_NEAR(vvdd_closed_form(cfg.regulator, Celsius{t}), rail_profile(canonical::params, t), 1e-12);
    EXPECT_NEAR(frontend_state(cfg, 0.6, Celsius{t}).i_supply / supply_profile(FitDesign{}, t), 1.0, 1e-6);
  }
}

TEST(Fit, FrontendReproducesCanonicalParameters) {
  const auto fe = fit_frontend(FitDesign{});
  const auto a = fe.params.vec(), b = canonical::params.vec();
  for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6 * std::max(1.0, std::abs(b[i]))) << i;
  EXPECT_LT(fe.lm.cost, 1e-3);
}

TEST(Fit, HeadroomBackendAndCornersReproduce) {
  auto cfg = build_config(FitDesign{}, canonical::params);
  const double h = fit_headroom(cfg);
  EXPECT_NEAR(h, canonical::headroom, 1e-9);
  cfg.regulator.headroom = h;
  const auto be = fit_backend(cfg);
  EXPECT_NEAR(be.offset, canonical::backend.offset, 1e-12);
  EXPECT_NEAR(be.per_volt, canonical::backend.per_volt, 1e-12);
  cfg.backend = be;
  cfg.osc.jitter_rel_sigma = canonical::jitter_rel_sigma;
  const auto k = calibrate_corners(cfg);
  EXPECT_NEAR(k.p, canonical::corners.p, 1e-6);
  EXPECT_NEAR(k.n, canonical::corners.n, 1e-4);
  EXPECT_EQ(cfg, canonical_config());
}

TEST(Fit, CanonicalJitterHitsTargetSigma) {
  const auto cfg = canonical_config();
  const auto cal = calibrate(cfg, 0.6);
  const auto r = noise_resolution(cfg, cal, Celsius{25.0}, 0.6, 4000, 0x5eed);
  EXPECT_NEAR(r.sigma_lsb, 1.84, 0.01);
}

TEST(Fit, CanonicalLotGivesTargetMedianPeak) {
  PopulationTarget pt;
  VariationSpec spec = canonical::variation;
  spec.jitter_rel_sigma = 0.0;
  const double med = population_median_peak(canonical_config(), spec, pt);
  EXPECT_NEAR(med, pt.median_peak, 0.02);
}
