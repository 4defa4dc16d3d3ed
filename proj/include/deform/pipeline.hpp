#pragma once

// Episode loop: judge, then explore or prepare, until the object reaches the
// bottleneck pose or the budget runs out.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "deform/adp.hpp"
#include "deform/ood.hpp"
#include "deform/primitives.hpp"
#include "deform/recognizer.hpp"
#include "deform/record.hpp"
#include "deform/scene.hpp"
#include "deform/sim.hpp"

namespace deform::pipeline {

/// Evaluation-only label for a judgment. Its value is written to the log and
/// never consulted when choosing an action.
using GroundTruthFn = std::function<bool(const sim::ObjectState&, const recognizer::Representation&)>;

struct PipelineConfig {
  sim::SimConfig sim;
  scene::Calibration calib = scene::Calibration::standard();
  int max_explorations = 20;
  int max_prepares = 3;
  primitives::ExploreParams explore;
  primitives::PrepareParams prepare;
  primitives::TaskParams task;
  /// Stable-state logging: mask IoU above this for `stable_window` consecutive explorations.
  double stable_iou = 0.98;
  int stable_window = 3;

  void validate() const;
};

using OrmFactory = std::function<std::unique_ptr<recognizer::Orm>(sim::ObjectKind)>;

std::string episode_id_for(sim::ObjectKind kind, std::uint64_t seed);

/// Runs one episode from `initial`. Simulation failures end the episode as a
/// harness error; they are never swallowed silently.
EpisodeRecord run_episode(const sim::ObjectState& initial, const recognizer::Orm& orm, adp::Policy& policy,
                          const GroundTruthFn& ground_truth, const PipelineConfig& config, std::uint64_t seed,
                          const std::string& episode_id);

struct BatchOptions {
  int parallelism = 1;
  /// Called once per finished episode, in completion order, from a single thread at a time.
  std::function<void(const EpisodeRecord&)> sink;
};

/// Generates the starting state for each spec, runs its episode, and returns
/// records in spec order. Each worker owns its policy and recognizer.
std::vector<EpisodeRecord> run_batch(const std::vector<ood::OodSpec>& specs, const OrmFactory& orms,
                                     const adp::PolicyFactory& policies, const GroundTruthFn& ground_truth,
                                     const PipelineConfig& config, const BatchOptions& options = {});

}  // namespace deform::pipeline
