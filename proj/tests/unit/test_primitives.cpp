#include <gtest/gtest.h>

#include <algorithm>

#include "deform/ood.hpp"
#include "deform/oracle.hpp"
#include "deform/primitives.hpp"
#include "support/constructions.hpp"

using namespace deform;
using namespace deform::primitives;

namespace {

const scene::Calibration kCalib = scene::Calibration::standard();
const sim::SimConfig kSim;

bool recognizable(const sim::ObjectState& s) {
  return oracle::is_recognizable(s, *recognizer::default_orm(s.kind()), kCalib);
}

sim::ObjectState random_flat(sim::ObjectKind kind, std::uint64_t seed) {
  Rng rng(seed);
  const Vec3 center{rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02), 0.0};
  const double yaw = rng.uniform(0.0, 2.0 * kPi);
  return kind == sim::ObjectKind::Rope ? sim::make_straight_rope(center, yaw) : sim::make_flat_cloth(center, yaw);
}

struct Prepared {
  ActionOutcome outcome;
  recognizer::Representation rep;
};

Prepared prepare_from_view(const sim::ObjectState& s, double p_slip, std::uint64_t seed = 1) {
  const auto obs = scene::render(s, kCalib);
  Prepared p;
  p.rep = recognizer::default_orm(s.kind())->recognize(obs);
  Rng rng(seed);
  PrepareParams params;
  params.p_slip = p_slip;
  p.outcome = prepare(s, p.rep, obs, kSim, rng, params);
  return p;
}

recognizer::Representation rep_at_particles(const sim::ObjectState& s, int a, int b) {
  recognizer::Representation r;
  r.kind = s.kind();
  r.status = recognizer::Status::Extracted;
  r.keypoints = {kCalib.nearest_index(kCalib.project(s.positions[a])),
                 kCalib.nearest_index(kCalib.project(s.positions[b]))};
  return r;
}

}  // namespace

TEST(HighestPoint, PicksMinimumDepth) {
  auto s = sim::make_straight_rope();
  s.positions[30].z = 0.02;
  const Vec3 p = highest_visible_point(scene::render(s, kCalib));
  EXPECT_LT(std::abs(p.x - s.positions[30].x), 0.01);
}

TEST(ExploreRope, FlatRopeUsuallyStaysRecognizable) {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto out = explore_rope(random_flat(sim::ObjectKind::Rope, seed), kSim);
    EXPECT_TRUE(out.succeeded);
    EXPECT_TRUE(out.resulting_state.grasps.empty());
    ok += recognizable(out.resulting_state);
  }
  EXPECT_GE(ok, 45);
}

TEST(ExploreRope, ThrownRopesRecoverWithinFiveExplorations) {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ood::OodSpec spec;
    spec.seed = seed;
    auto s = ood::generate(spec, kSim);
    bool reached = recognizable(s);
    for (int k = 0; k < 5 && !reached; ++k) {
      s = explore_rope(s, kSim).resulting_state;
      reached = recognizable(s);
    }
    ok += reached;
  }
  EXPECT_GE(ok, 25);
}

TEST(ExploreRope, NothingInViewLeavesStateAlone) {
  auto s = sim::make_straight_rope({1.0, 1.0, 0.0});
  const auto out = explore_rope(s, kSim);
  EXPECT_FALSE(out.succeeded);
  EXPECT_FALSE(out.grasp_errors.empty());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_LT(distance(s.positions[i], out.resulting_state.positions[i]), 1e-3);
}

TEST(ExploreCloth, FlatClothUsuallyStaysRecognizable) {
  int ok = 0;
  const int n = 20;
  for (std::uint64_t seed = 0; seed < n; ++seed) {
    const auto out = explore_cloth(random_flat(sim::ObjectKind::Cloth, seed), kSim);
    EXPECT_TRUE(out.succeeded);
    ok += recognizable(out.resulting_state);
  }
  EXPECT_GE(ok, 16);
}

// Fewer seeds than the rope sweep: each cloth exploration costs most of a second.
TEST(ExploreCloth, AreaRatioMedianRisesOverFiveExplorations) {
  const recognizer::ClothCornerOrm orm;
  std::vector<double> before, after;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ood::OodSpec spec;
    spec.object_kind = sim::ObjectKind::Cloth;
    spec.seed = seed;
    auto s = ood::generate(spec, kSim);
    before.push_back(orm.recognize(scene::render(s, kCalib)).diagnostics.area_ratio);
    for (int k = 0; k < 5; ++k) s = explore_cloth(s, kSim).resulting_state;
    after.push_back(orm.recognize(scene::render(s, kCalib)).diagnostics.area_ratio);
  }
  std::sort(before.begin(), before.end());
  std::sort(after.begin(), after.end());
  EXPECT_GT(after[after.size() / 2], before[before.size() / 2]);
}

TEST(ExploreCloth, CollapsedClothUsesOneHand) {
  // Shrunk onto a single pixel center, so both extremes are the same pixel.
  auto s = sim::make_flat_cloth();
  for (Vec3& p : s.positions) {
    p.x = p.x * 0.002 - 0.5 / kCalib.scale;
    p.y = p.y * 0.002 + 0.5 / kCalib.scale;
  }
  const auto obs = scene::render(s, kCalib);
  ASSERT_EQ(obs.mask_area(), 1u);
  const auto ends = extreme_x_points(obs);
  ASSERT_EQ(sim::nearest_particle(s, ends.first), sim::nearest_particle(s, ends.second));
  const auto out = explore_cloth(s, kSim);
  EXPECT_TRUE(out.succeeded);
  const auto report = sim::check_invariants(out.resulting_state);
  EXPECT_TRUE(report.finite);
  EXPECT_TRUE(report.above_table);
  EXPECT_TRUE(out.resulting_state.grasps.empty());
}

TEST(PrepareRope, StraightRopeReachesBottleneck) {
  const auto p = prepare_from_view(sim::make_straight_rope(), 0.0);
  ASSERT_TRUE(p.outcome.succeeded) << (p.outcome.grasp_errors.empty() ? "" : p.outcome.grasp_errors[0]);
  EXPECT_TRUE(verify_bottleneck(p.outcome.resulting_state, BottleneckSpec::for_kind(sim::ObjectKind::Rope)));
}

TEST(PrepareRope, WrongKeypointsGraspButFailVerification) {
  const auto s = sim::make_straight_rope();
  const auto obs = scene::render(s, kCalib);
  const auto rep = rep_at_particles(s, 20, 49);
  Rng rng(1);
  PrepareParams params;
  params.p_slip = 0.0;
  const auto out = prepare(s, rep, obs, kSim, rng, params);
  ASSERT_TRUE(out.succeeded);
  EXPECT_FALSE(verify_bottleneck(out.resulting_state, BottleneckSpec::for_kind(sim::ObjectKind::Rope)));
}

TEST(PrepareRope, CertainSlipAlwaysFails) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = prepare_from_view(sim::make_straight_rope(), 1.0, seed);
    EXPECT_FALSE(p.outcome.succeeded);
    EXPECT_TRUE(p.outcome.resulting_state.grasps.empty());
  }
}

TEST(PrepareRope, RefusesFailedExtraction) {
  const auto s = sim::make_straight_rope();
  recognizer::Representation rep;
  rep.status = recognizer::Status::ExtractionFailed;
  rep.violated_assumption = "no_loop";
  Rng rng(0);
  EXPECT_THROW(prepare(s, rep, scene::render(s, kCalib), kSim, rng), PreconditionViolation);
}

TEST(PrepareCloth, FlatClothReachesBottleneck) {
  const auto p = prepare_from_view(sim::make_flat_cloth({0, 0, 0}, 0.3), 0.0);
  ASSERT_TRUE(p.outcome.succeeded);
  EXPECT_TRUE(verify_bottleneck(p.outcome.resulting_state, BottleneckSpec::for_kind(sim::ObjectKind::Cloth)));
}

TEST(PrepareCloth, HalfFoldedClothFailsVerification) {
  const auto p = prepare_from_view(fixtures::half_folded_cloth(), 0.0);
  ASSERT_TRUE(p.rep.extracted());
  ASSERT_TRUE(p.outcome.succeeded);
  EXPECT_FALSE(verify_bottleneck(p.outcome.resulting_state, BottleneckSpec::for_kind(sim::ObjectKind::Cloth)));
}

TEST(PrepareCloth, CertainSlipAlwaysFails) {
  EXPECT_FALSE(prepare_from_view(sim::make_flat_cloth(), 1.0).outcome.succeeded);
}

TEST(Prepare, SlipDrawsKeepTheStreamAligned) {
  // Two draws per attempt whether or not the first grasp fails.
  Rng a(9), b(9);
  const auto s = sim::make_straight_rope();
  const auto obs = scene::render(s, kCalib);
  const auto rep = recognizer::default_orm(s.kind())->recognize(obs);
  PrepareParams params;
  params.p_slip = 1.0;
  prepare(s, rep, obs, kSim, a, params);
  b.uniform();
  b.uniform();
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Verify, CanonicalAndMidParticles) {
  EXPECT_TRUE(verify_bottleneck(fixtures::canonical_bottleneck(sim::ObjectKind::Rope),
                                BottleneckSpec::for_kind(sim::ObjectKind::Rope)));
  EXPECT_TRUE(verify_bottleneck(fixtures::canonical_bottleneck(sim::ObjectKind::Cloth),
                                BottleneckSpec::for_kind(sim::ObjectKind::Cloth)));
  auto mid = fixtures::canonical_bottleneck(sim::ObjectKind::Rope);
  mid.grasps[0].particle = 10;
  mid.positions[10] = mid.grasps[0].target;
  EXPECT_FALSE(verify_bottleneck(mid, BottleneckSpec::for_kind(sim::ObjectKind::Rope)));
  EXPECT_FALSE(verify_bottleneck(sim::make_straight_rope(), BottleneckSpec::for_kind(sim::ObjectKind::Rope)));
}

TEST(Verify, ValidViewsAlmostAlwaysReachBottleneck) {
  int ok = 0, n = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (auto kind : {sim::ObjectKind::Rope, sim::ObjectKind::Cloth}) {
      const auto s = random_flat(kind, seed);
      const auto p = prepare_from_view(s, 0.0, seed);
      if (!oracle::is_valid(p.rep, oracle::ground_truth_of(s, kCalib))) continue;
      ++n;
      ok += p.outcome.succeeded && verify_bottleneck(p.outcome.resulting_state, BottleneckSpec::for_kind(kind));
    }
  }
  ASSERT_GT(n, 30);
  EXPECT_GE(ok, 0.95 * n);
}

TEST(Task, HoldAndPlace) {
  const auto p = prepare_from_view(sim::make_straight_rope(), 0.0);
  ASSERT_TRUE(p.outcome.succeeded);
  Rng rng(0);
  const auto ok = execute_task(p.outcome.resulting_state, kSim, rng);
  EXPECT_TRUE(ok.succeeded);
  EXPECT_TRUE(ok.resulting_state.grasps.empty());
  TaskParams drop;
  drop.p_task_drop = 1.0;
  EXPECT_FALSE(execute_task(p.outcome.resulting_state, kSim, rng, drop).succeeded);
}
