#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "ratchet/engine.hpp"
#include "ratchet/random.hpp"
#include "ratchet/renewal.hpp"

using namespace ratchet;

TEST(Tracker, NeedsAJumpBetweenRenewals) {
  RenewalTracker tr;
  tr.on_touch({0.0, 0.0});
  tr.on_touch({0.5, 0.0});  // no jump yet: not a renewal
  tr.on_jump({1.0, 1.0, 0.0, 0.4});
  tr.on_touch({1.5, 0.4});
  tr.on_touch({1.6, 0.4});
  tr.on_jump({2.0, 1.0, 0.4, 0.9});
  tr.on_jump({2.1, 1.0, 0.9, 0.95});
  tr.on_touch({3.0, 0.95});
  const auto& p = tr.points();
  ASSERT_EQ(p.size(), 3u);
  EXPECT_DOUBLE_EQ(p[1].t, 1.5);
  EXPECT_DOUBLE_EQ(p[2].x, 0.95);
  const auto c = cycles_from_points(p);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_DOUBLE_EQ(c[0].duration, 1.5);
  EXPECT_DOUBLE_EQ(c[1].displacement, 0.55);
}

TEST(Tracker, JumpsBeforeTheFirstTouchDoNotArm) {
  RenewalTracker tr;
  tr.on_jump({0.5, 1.0, 0.0, 0.5});
  tr.on_touch({1.0, 0.5});
  tr.on_touch({1.2, 0.5});
  EXPECT_EQ(tr.points().size(), 1u);
}

TEST(Remainder, UsesTheFirstRenewalAfterT) {
  const std::vector<RenewalPoint> pts{{1.0, 0.2}, {3.0, 1.0}, {6.0, 2.5}};
  EXPECT_NEAR(*remainder(pts, 4.0, 1.7), 0.2 + 1.7 - 2.5, 1e-15);
  EXPECT_NEAR(*remainder(pts, 0.5, 0.1), 0.2 + 0.1 - 0.2, 1e-15);
  EXPECT_FALSE(remainder(pts, 6.0, 2.5).has_value());
}

TEST(Decomposition, ExactOnASimulatedPath) {
  RatchetParams p;
  p.gamma = 1.0;
  p.t_max = 200.0;
  p.seed = 3;
  const auto t = simulate_path(p, 0);
  const auto pts = renewal_points(t, 0.0);
  ASSERT_GT(pts.size(), 10u);
  const auto d = check_decomposition(t, pts);
  EXPECT_GT(d.checked, 100000u);
  EXPECT_LE(d.max_residual, 1e-9);
}

TEST(Decomposition, ToleranceModeOnCsvPaths) {
  RatchetParams p;
  p.t_max = 50.0;
  auto t = simulate_path(p, 1);
  t.touches.clear();
  const auto pts = renewal_points(t, kCsvRenewalTolerance);
  EXPECT_FALSE(pts.empty());
  EXPECT_LE(check_decomposition(t, pts).max_residual, 1e-9);
}

TEST(CycleStatistics, IidCyclesRecoverSpeedAndSigma) {
  // Durations Exp(1), displacements 0.5 * duration + N(0, 0.3^2):
  // speed 0.5, beta^2 = 0.09, r = 1, sigma = 0.3.
  RandomStream r(5, 0, Substream::aux);
  std::vector<RenewalCycle> cs;
  for (int i = 0; i < 20000; ++i) {
    const double d = r.exponential();
    cs.push_back({d, 0.5 * d + 0.3 * r.normal()});
  }
  const auto st = cycle_statistics(cs);
  EXPECT_NEAR(st.speed, 0.5, 4 * st.speed_se);
  EXPECT_NEAR(st.sigma_hat, 0.3, 4 * st.sigma_se);
  EXPECT_NEAR(st.speed_se, 0.3 / std::sqrt(20000.0), 3e-4);
  EXPECT_NEAR(st.displacement_lag1, 0.0, 0.03);
  EXPECT_THROW(cycle_statistics(std::vector<RenewalCycle>(5)), std::invalid_argument);
}

TEST(Kolmogorov, SurvivalReferenceValues) {
  // scipy.special.kolmogorov
  EXPECT_NEAR(kolmogorov_survival(0.3), 0.9999906941986655, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(0.5), 0.9639452436648751, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(1.0), 0.26999967167735456, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(1.36), 0.049485876755377876, 1e-12);
  EXPECT_DOUBLE_EQ(kolmogorov_survival(0.0), 1.0);
}

TEST(Ks, StatisticsMatchReference) {
  // scipy.stats.kstest / ks_2samp statistics for the same data.
  const std::vector<double> a{0.1, 0.4, 0.7, 1.3, 2.2, 0.05, 0.9, 1.7, 0.33, 0.61};
  const std::vector<double> b{0.2, 0.5, 1.1, 1.9, 2.5, 0.8, 0.15, 3.1, 1.4, 0.95, 0.7};
  const auto one = ks_one_sample(a, [](double x) { return 1.0 - std::exp(-x); });
  EXPECT_NEAR(one.statistic, 0.1108031583623339, 1e-12);
  const auto two = ks_two_sample(a, b);
  EXPECT_NEAR(two.statistic, 0.24545454545454543, 1e-12);
  EXPECT_GT(two.p_value, 0.5);
  EXPECT_THROW(ks_one_sample(std::vector<double>(3, 1.0), [](double) { return 0.5; }),
               std::invalid_argument);
}

TEST(Ks, RejectsAShiftedSample) {
  RandomStream r(6, 0, Substream::aux);
  std::vector<double> v;
  for (int i = 0; i < 2000; ++i) v.push_back(r.normal() + 0.2);
  EXPECT_LT(ks_one_sample(v, normal_cdf).p_value, 1e-4);
}

TEST(Clt, StandardisedNormalSamplePasses) {
  RandomStream r(7, 0, Substream::aux);
  const double t = 100.0, c = special::asymptotic_constants(1.0).speed;
  std::vector<double> x;
  for (int i = 0; i < 1000; ++i) x.push_back(c * t + 0.6 * std::sqrt(t) * r.normal());
  const auto chk = clt_check(x, t, 1.0);
  EXPECT_NEAR(chk.sigma_hat, 0.6, 4 * chk.sigma_se);
  EXPECT_GT(chk.ks_normal.p_value, 0.001);
  EXPECT_THROW(clt_check(std::vector<double>(10, 1.0), t, 1.0), std::invalid_argument);
}

TEST(TailFit, ExponentialQuantilesAreExactlyLogLinear) {
  std::vector<double> v;
  const int n = 1000;
  for (int i = 0; i < n; ++i) v.push_back(-std::log(1.0 - (i + 0.0) / n) / 2.0);
  const auto f = exp_tail_fit(v);
  EXPECT_NEAR(f.rate, 2.0, 1e-9);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
}

TEST(Csv, CyclesHeader) {
  std::ostringstream out;
  write_cycles_csv(out, std::vector<RenewalCycle>{{1.0, 0.5}});
  EXPECT_EQ(out.str(), "n,duration,displacement\n1,1,0.5\n");
}
