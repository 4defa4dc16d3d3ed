#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "deform/adp_oracle.hpp"
#include "deform/oracle.hpp"
#include "deform/pipeline.hpp"
#include "support/constructions.hpp"

using namespace deform;
using namespace deform::pipeline;

namespace {

const scene::Calibration kCalib = scene::Calibration::standard();

GroundTruthFn oracle_truth() {
  return [](const sim::ObjectState& s, const recognizer::Representation& rep) {
    return oracle::is_valid(rep, oracle::ground_truth_of(s, kCalib));
  };
}

PipelineConfig deterministic() {
  PipelineConfig c;
  c.prepare.p_slip = 0.0;
  return c;
}

EpisodeRecord run(const sim::ObjectState& s, adp::Policy& policy, const PipelineConfig& config = deterministic(),
                  const GroundTruthFn& truth = oracle_truth()) {
  return run_episode(s, *recognizer::default_orm(s.kind()), policy, truth, config, 1, "test-1");
}

// Wall time is the one field allowed to differ between identical runs.
std::string canonical(EpisodeRecord e) {
  e.wall_seconds = 0.0;
  return to_jsonl_line(e);
}

std::vector<ood::OodSpec> rope_specs(int n) {
  std::vector<ood::OodSpec> specs(n);
  for (int i = 0; i < n; ++i) specs[i].seed = 100 + i;
  return specs;
}

OrmFactory default_orms() {
  return [](sim::ObjectKind k) { return recognizer::default_orm(k); };
}

}  // namespace

TEST(Episode, OracleOnStraightRopeGoesStraightToTask) {
  adp::OraclePolicy policy;
  const auto e = run(sim::make_straight_rope(), policy);
  EXPECT_EQ(e.explorations, 0);
  ASSERT_EQ(e.steps.size(), 1u);
  EXPECT_EQ(e.steps[0].classification, Classification::TP);
  EXPECT_EQ(e.steps[0].action, ActionTaken::Prepare);
  EXPECT_EQ(e.terminal, Terminal::Transitioned);
  EXPECT_TRUE(e.bottleneck_verified);
  EXPECT_TRUE(e.final_task_success);
}

TEST(Episode, AlwaysNoSpendsTheWholeBudget) {
  adp::ConstantPolicy policy(false);
  const auto e = run(sim::make_straight_rope(), policy);
  EXPECT_EQ(e.explorations, 20);
  ASSERT_EQ(e.steps.size(), 21u);
  EXPECT_EQ(e.terminal, Terminal::ExplorationBudgetExhausted);
  for (int k = 0; k < 20; ++k) EXPECT_EQ(e.steps[k].action, ActionTaken::Explore);
  EXPECT_EQ(e.steps.back().action, ActionTaken::None);
  EXPECT_EQ(e.steps.back().index, 20);
  EXPECT_EQ(e.prepares, 0);
}

TEST(Episode, SmallerBudgetIsHonoured) {
  adp::ConstantPolicy policy(false);
  auto c = deterministic();
  c.max_explorations = 2;
  EXPECT_EQ(run(sim::make_straight_rope(), policy, c).explorations, 2);
  c.max_explorations = 0;
  EXPECT_EQ(run(sim::make_straight_rope(), policy, c).steps.size(), 1u);
}

TEST(Episode, AlwaysYesOnWrongKeypointsIsAFalsePositive) {
  const auto s = fixtures::rope_with_hooked_end();
  const auto rep = recognizer::default_orm(s.kind())->recognize(scene::render(s, kCalib));
  ASSERT_TRUE(rep.extracted()) << rep.violated_assumption;
  ASSERT_FALSE(oracle::is_valid(rep, oracle::ground_truth_of(s, kCalib)));
  adp::ConstantPolicy policy(true);
  const auto e = run(s, policy);
  EXPECT_EQ(e.explorations, 0);
  EXPECT_EQ(e.steps[0].classification, Classification::FP);
  EXPECT_EQ(e.steps[0].action, ActionTaken::Prepare);
  EXPECT_FALSE(e.bottleneck_verified);
  EXPECT_FALSE(e.final_task_success);
}

TEST(Episode, HeuristicFooledByHalfFoldedCloth) {
  adp::HeuristicPolicy policy;
  const auto e = run(fixtures::half_folded_cloth(), policy);
  ASSERT_FALSE(e.steps.empty());
  EXPECT_EQ(e.steps[0].classification, Classification::FP);
  EXPECT_EQ(e.steps[0].prepare_succeeded, std::optional<bool>(true));
  EXPECT_EQ(e.terminal, Terminal::Transitioned);
  EXPECT_FALSE(e.bottleneck_verified);
}

TEST(Episode, YesOnFailedExtractionFailsThePrepareInPlace) {
  adp::ConstantPolicy policy(true);
  const auto e = run(fixtures::rope_folded_in_half(), policy);
  EXPECT_EQ(e.terminal, Terminal::GraspFailedTerminal);
  EXPECT_EQ(e.prepares, 3);
  ASSERT_EQ(e.steps.size(), 3u);
  for (const auto& s : e.steps) {
    EXPECT_EQ(s.index, 0);
    EXPECT_EQ(s.prepare_succeeded, std::optional<bool>(false));
  }
}

TEST(Episode, SlippingGraspsEndAfterThePrepareCap) {
  adp::OraclePolicy policy;
  auto c = deterministic();
  c.prepare.p_slip = 1.0;
  const auto e = run(sim::make_straight_rope(), policy, c);
  EXPECT_EQ(e.terminal, Terminal::GraspFailedTerminal);
  EXPECT_EQ(e.prepares, c.max_prepares);
  EXPECT_EQ(e.explorations, 0);
}

TEST(Episode, ObjectOutOfViewIsAHarnessError) {
  adp::ConstantPolicy policy(false);
  const auto e = run(sim::make_straight_rope({2.0, 2.0, 0.0}), policy);
  EXPECT_EQ(e.terminal, Terminal::HarnessError);
  EXPECT_FALSE(e.error.empty());
}

TEST(Episode, ReplaysIdentically) {
  adp::HeuristicPolicy policy;
  ood::OodSpec spec;
  spec.seed = 4;
  const auto s = ood::generate(spec, sim::SimConfig{});
  auto c = deterministic();
  c.prepare.p_slip = 0.3;
  EXPECT_EQ(canonical(run(s, policy, c)), canonical(run(s, policy, c)));
}

TEST(Episode, GroundTruthNeverSteersTheActions) {
  // Same trajectory whatever the labeller says; only the classifications move.
  adp::HeuristicPolicy policy;
  ood::OodSpec spec;
  spec.seed = 8;
  const auto s = ood::generate(spec, sim::SimConfig{});
  const auto a = run(s, policy, deterministic(), [](auto&&, auto&&) { return true; });
  const auto b = run(s, policy, deterministic(), [](auto&&, auto&&) { return false; });
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    EXPECT_EQ(a.steps[i].action, b.steps[i].action);
    EXPECT_EQ(a.steps[i].representation.keypoints, b.steps[i].representation.keypoints);
  }
  EXPECT_EQ(a.terminal, b.terminal);
}

TEST(Batch, ParallelismDoesNotChangeResults) {
  const auto specs = rope_specs(6);
  const adp::PolicyFactory heuristic = [] { return std::make_unique<adp::HeuristicPolicy>(); };
  int sunk = 0;
  BatchOptions serial;
  serial.sink = [&](const EpisodeRecord&) { ++sunk; };
  BatchOptions parallel;
  parallel.parallelism = 8;
  const auto a = run_batch(specs, default_orms(), heuristic, oracle_truth(), PipelineConfig{}, serial);
  const auto b = run_batch(specs, default_orms(), heuristic, oracle_truth(), PipelineConfig{}, parallel);
  EXPECT_EQ(sunk, 6);
  ASSERT_EQ(a.size(), specs.size());
  ASSERT_EQ(b.size(), specs.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].seed, specs[i].seed);
    EXPECT_EQ(canonical(a[i]), canonical(b[i]));
    EXPECT_LE(a[i].explorations, 20);
  }
}

TEST(Batch, SetupFailuresBecomeHarnessErrors) {
  int made = 0;
  const OrmFactory flaky = [&](sim::ObjectKind k) -> std::unique_ptr<recognizer::Orm> {
    if (made++ == 0) throw std::runtime_error("no recognizer today");
    return recognizer::default_orm(k);
  };
  const adp::PolicyFactory no = [] { return std::make_unique<adp::ConstantPolicy>(false); };
  auto c = deterministic();
  c.max_explorations = 0;
  const auto out = run_batch(rope_specs(2), flaky, no, oracle_truth(), c);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].terminal, Terminal::HarnessError);
  EXPECT_NE(out[0].error.find("no recognizer today"), std::string::npos);
  EXPECT_EQ(out[1].terminal, Terminal::ExplorationBudgetExhausted);
}

TEST(Batch, RejectsBadInput) {
  const adp::PolicyFactory no = [] { return std::make_unique<adp::ConstantPolicy>(false); };
  EXPECT_THROW(run_batch({}, default_orms(), no, oracle_truth(), PipelineConfig{}), std::invalid_argument);
  BatchOptions zero;
  zero.parallelism = 0;
  EXPECT_THROW(run_batch(rope_specs(1), default_orms(), no, oracle_truth(), PipelineConfig{}, zero),
               std::invalid_argument);
  auto c = deterministic();
  c.max_prepares = 0;
  EXPECT_THROW(run_batch(rope_specs(1), default_orms(), no, oracle_truth(), c), std::invalid_argument);
}
