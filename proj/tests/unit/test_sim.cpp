#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "deform/sim.hpp"

using namespace deform;
using namespace deform::sim;

namespace {

double max_displacement(const ObjectState& a, const ObjectState& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, distance(a.positions[i], b.positions[i]));
  return worst;
}

ObjectState drag_end(const SimConfig& config) {
  ObjectState s = make_straight_rope();
  s = grasp_nearest(std::move(s), 0, Vec3(s.positions[0]), 0.02);
  const Vec3 target = s.grasps[0].target + Vec3{0.1, 0.0, 0.0};
  const std::array<GripperMove, 1> mv{GripperMove{0, target}};
  return move_grippers(std::move(s), config, mv, 1.0);
}

}  // namespace

TEST(Topology, RopeAndClothShapes) {
  const auto rope = make_rope_topology();
  EXPECT_EQ(rope->particle_count, 50);
  EXPECT_EQ(rope->constraints.size(), 49u);
  EXPECT_NEAR(rope->spacing * 49, 0.5, 1e-12);
  const auto cloth = make_cloth_topology();
  EXPECT_EQ(cloth->particle_count, 400);
  const auto corners = cloth->corner_indices();
  ASSERT_EQ(corners.size(), 4u);
  // Cyclic order: consecutive corners share a grid edge of the sheet.
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(cloth->rest_distance(corners[i], corners[(i + 1) % 4]), 0.3, 1e-9);
  }
}

TEST(Step, RopeAtRestStaysPut) {
  const ObjectState s0 = make_straight_rope();
  const ObjectState s1 = step(s0, SimConfig{}, 1.0);
  EXPECT_LT(max_displacement(s0, s1), 1e-3);
}

TEST(Step, DroppedRopeComesToRestOnTheTable) {
  ObjectState s = make_straight_rope();
  for (Vec3& p : s.positions) p.z += 0.25;
  s = settle(step(std::move(s), SimConfig{}, 0.5), SimConfig{});
  for (const Vec3& p : s.positions) EXPECT_NEAR(p.z, s.topology->contact_radius, 2e-3);
}

TEST(Step, DraggedEndFollowsGripperAndLengthIsKept) {
  const SimConfig config;
  const ObjectState start = make_straight_rope();
  const ObjectState s = drag_end(config);
  EXPECT_NEAR(s.positions[0].x - start.positions[0].x, 0.1, 1e-3);
  EXPECT_NEAR(rope_arc_length(s), 0.5, 0.025);

  // Reference: same motion at ten times the substeps.
  SimConfig fine = config;
  fine.substeps *= 10;
  const ObjectState ref = drag_end(fine);
  EXPECT_LT(max_displacement(s, ref), 5e-3);
}

TEST(Step, Deterministic) {
  const SimConfig config;
  const ObjectState a = drag_end(config);
  const ObjectState b = drag_end(config);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.positions[i], b.positions[i]);
    EXPECT_EQ(a.velocities[i], b.velocities[i]);
  }
}

TEST(Step, RejectsBadConfig) {
  SimConfig c;
  c.substeps = 0;
  EXPECT_THROW(step(make_straight_rope(), c, 0.1), std::invalid_argument);
}

TEST(Step, NonFiniteStateIsReported) {
  ObjectState s = make_straight_rope();
  s.positions[3].x = std::nan("");
  EXPECT_THROW(step(std::move(s), SimConfig{}, 0.05), NonFiniteState);
}

TEST(Settle, AlreadySettledRopeIsUnchanged) {
  const ObjectState s0 = make_straight_rope();
  EXPECT_LT(max_displacement(s0, settle(s0, SimConfig{})), 1e-3);
}

TEST(Settle, ClothDroppedFromHeightLiesFlat) {
  ObjectState s = make_flat_cloth();
  for (Vec3& p : s.positions) p.z += 0.3;
  s = settle(std::move(s), SimConfig{});
  for (const Vec3& p : s.positions) {
    EXPECT_GE(p.z, -constants::kPenetrationTolerance);
    EXPECT_LE(p.z, s.topology->contact_radius + constants::kClothThicknessBand);
  }
  EXPECT_LT(kinetic_energy(s), 1e-5);
}

TEST(Settle, CrumpledClothEndsWithinConstraintTolerance) {
  // Hoisted by one particle and dropped sideways, the sheet lands in a heap.
  for (int grip : {0, 105, 210, 399}) {
    ObjectState s = make_flat_cloth();
    s = grasp_nearest(std::move(s), 0, Vec3(s.positions[grip]), 1e-6);
    const std::array<GripperMove, 1> up{GripperMove{0, {0.05, -0.08, 0.25}}};
    s = move_grippers(std::move(s), SimConfig{}, up, 0.4);
    s = settle(release_all(std::move(s)), SimConfig{});
    EXPECT_LE(max_constraint_residual(s), constants::kConstraintTolerance) << "grip " << grip;
    EXPECT_GE(min_height(s), -constants::kPenetrationTolerance);
  }
}

TEST(Settle, RefusesHeldObjects) {
  ObjectState s = make_straight_rope();
  s = grasp_nearest(std::move(s), 0, Vec3(s.positions[0]), 0.01);
  EXPECT_THROW(settle(s, SimConfig{}), std::invalid_argument);
}

TEST(Grasp, ExactPointGraspsThatParticle) {
  const ObjectState s0 = make_straight_rope();
  const ObjectState s = grasp_nearest(s0, 0, s0.positions[17], 0.02);
  ASSERT_EQ(s.grasps.size(), 1u);
  EXPECT_EQ(s.grasps[0].particle, 17);
}

TEST(Grasp, FarPointIsOutOfTolerance) {
  const ObjectState s0 = make_straight_rope();
  try {
    grasp_nearest(s0, 0, {0.0, 0.05, 0.0}, 0.02);
    FAIL() << "expected GraspError";
  } catch (const GraspError& e) {
    EXPECT_EQ(e.kind(), GraspError::Kind::OutOfTolerance);
  }
}

TEST(Grasp, BusyGripperAndTakenParticle) {
  ObjectState s = make_straight_rope();
  s = grasp_nearest(std::move(s), 0, Vec3(s.positions[0]), 0.02);
  try {
    grasp_nearest(s, 0, s.positions[10], 0.02);
    FAIL();
  } catch (const GraspError& e) {
    EXPECT_EQ(e.kind(), GraspError::Kind::GripperBusy);
  }
  try {
    grasp_nearest(s, 1, s.positions[0], 0.02);
    FAIL();
  } catch (const GraspError& e) {
    EXPECT_EQ(e.kind(), GraspError::Kind::ParticleTaken);
  }
}

TEST(Grasp, NearestParticleMatchesExhaustiveSearch) {
  const ObjectState s = make_flat_cloth({0.01, -0.02, 0.0}, 0.3);
  for (int t = 0; t < 50; ++t) {
    const Vec3 q{-0.2 + 0.008 * t, 0.15 - 0.006 * t, 0.001 * (t % 3)};
    int best = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (distance(s.positions[i], q) < distance(s.positions[best], q)) best = static_cast<int>(i);
    }
    EXPECT_EQ(nearest_particle(s, q), best);
  }
}

TEST(Grasp, StretchedTwoHandGraspSlips) {
  ObjectState s = make_straight_rope();
  s = grasp_nearest(std::move(s), 0, Vec3(s.positions[0]), 0.01);
  s = grasp_nearest(std::move(s), 1, Vec3(s.positions[49]), 0.01);
  const std::array<GripperMove, 2> apart{GripperMove{0, {-0.4, 0, 0.1}}, GripperMove{1, {0.4, 0, 0.1}}};
  s = move_grippers(std::move(s), SimConfig{}, apart, 1.0);
  EXPECT_LT(s.grasps.size(), 2u);
}

TEST(Invariants, CanonicalStatesPass) {
  EXPECT_TRUE(check_invariants(make_straight_rope()).ok());
  EXPECT_TRUE(check_invariants(make_flat_cloth()).ok());
  ObjectState bad = make_straight_rope();
  bad.positions[5].z = -0.01;
  const auto r = check_invariants(bad);
  EXPECT_FALSE(r.above_table);
  EXPECT_FALSE(r.describe().empty());
}

TEST(Kinds, RoundTripNames) {
  EXPECT_EQ(object_kind_from_string(to_string(ObjectKind::Rope)), ObjectKind::Rope);
  EXPECT_EQ(object_kind_from_string("cloth"), ObjectKind::Cloth);
  EXPECT_THROW(object_kind_from_string("sock"), std::invalid_argument);
}
