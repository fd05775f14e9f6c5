#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ratchet/special.hpp"
#include "ratchet/variants.hpp"

using namespace ratchet;

TEST(BoundSet, ReflectionPointIsTheMaximum) {
  BoundSet s;
  EXPECT_EQ(s.reflection_point(), 0.0);
  s.add(1.0);
  s.add(3.0);
  s.add(2.0);
  EXPECT_EQ(s.reflection_point(), 3.0);
  s.remove(1);
  EXPECT_EQ(s.reflection_point(), 2.0);
  EXPECT_EQ(s.size(), 2u);
  s.remove(0);
  s.remove(0);
  EXPECT_TRUE(s.empty());
  EXPECT_EQ(s.reflection_point(), 0.0);
}

TEST(Delta, ClosedForms) {
  EXPECT_NEAR(delta_ratchet_speed(2.0), 1.0, 1e-15);
  const double g = delta_crossover_gamma();
  EXPECT_NEAR(g, 0.0750542, 1e-6);
  EXPECT_NEAR(delta_ratchet_speed(g), special::asymptotic_constants(g).speed, 1e-12);
  EXPECT_THROW(delta_ratchet_speed(0.0), std::domain_error);
}

TEST(Delta, JumpsResetTheGap) {
  const auto t = simulate_variant(delta_params(2.0, 20.0, 1e-3, 1), 0);
  ASSERT_FALSE(t.jumps.empty());
  for (const auto& j : t.jumps) EXPECT_EQ(j.r_post, j.x_pre);
}

TEST(Delta, JumpPositionsAreExponential) {
  const auto c = delta_jump_position_check(1.0, 2000, 1e-3, 5);
  EXPECT_EQ(c.positions.size(), 2000u);
  EXPECT_GT(c.ks.p_value, 0.001);
  EXPECT_NEAR(c.mean, 1.0 / std::sqrt(2.0), 4 * c.mean_se);
}

TEST(Dissociation, PathInvariantsAndCounts) {
  RatchetParams p;
  p.t_max = 30.0;
  p.variant.kind = VariantKind::dissociation;
  p.variant.dissociation_rate = 0.5;
  TrajectoryRecorder rec(p);
  BoundCountLog log;
  Tee tee(rec, log);
  simulate_variant(p, 0, tee);
  const auto& t = rec.trajectory();
  ASSERT_FALSE(t.jumps.empty());
  EXPECT_EQ(log.rows.size(), t.jumps.size());
  bool dropped = false;
  for (const auto& s : t.samples) ASSERT_GE(s.x, s.r);
  for (const auto& j : t.jumps) dropped = dropped || j.r_post < j.r_pre;
  EXPECT_TRUE(dropped);
  std::ostringstream out;
  write_bound_counts_csv(out, log);
  EXPECT_EQ(out.str().substr(0, 10), "t,n_bound\n");
}

TEST(Dissociation, NoUnbindingKeepsTheBoundaryMonotone) {
  RatchetParams p;
  p.t_max = 30.0;
  p.variant.kind = VariantKind::dissociation;
  p.variant.bind_above_boundary = true;
  const auto t = simulate_variant(p, 2);
  double r = 0.0;
  for (const auto& s : t.samples) {
    ASSERT_GE(s.r, r);
    r = s.r;
  }
}

TEST(Variant, KindNoneIsRejected) {
  RatchetParams p;
  EXPECT_THROW(simulate_variant(p, 0), std::invalid_argument);
}
