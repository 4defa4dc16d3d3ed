#pragma once

// Evaluation-only ground truth. Nothing on the task-execution path may include
// this header; only the oracle decision policy and the harness do.

#include <vector>

#include "deform/geometry.hpp"
#include "deform/recognizer.hpp"
#include "deform/scene.hpp"
#include "deform/sim.hpp"

namespace deform::oracle {

inline constexpr double kDefaultEpsilonPx = 30.0;

struct GroundTruth {
  sim::ObjectKind kind = sim::ObjectKind::Rope;
  /// Rope: projections of the first and last particle. Cloth: the four grid corners in cyclic order.
  std::vector<Pixel> keypoints;
  double epsilon_px = kDefaultEpsilonPx;
};

GroundTruth ground_truth_of(const sim::ObjectState& state, const scene::Calibration& calib,
                            double epsilon_px = kDefaultEpsilonPx);

/// Every detected keypoint strictly within epsilon of its matched ground-truth point.
bool is_valid(const recognizer::Representation& rep, const GroundTruth& gt);

/// Render, recognize, validate. An empty mask is not recognizable.
bool is_recognizable(const sim::ObjectState& state, const recognizer::Orm& orm, const scene::Calibration& calib,
                     double epsilon_px = kDefaultEpsilonPx);

}  // namespace deform::oracle
