#pragma once

// Scripted gripper procedures. Exploration reads only the rendered scene, never a
// Representation; preparation is driven by one and refuses failed extractions.

#include <stdexcept>
#include <string>
#include <vector>

#include "deform/recognizer.hpp"
#include "deform/rng.hpp"
#include "deform/scene.hpp"
#include "deform/sim.hpp"

namespace deform::primitives {

inline constexpr int kLeftGripper = 0;
inline constexpr int kRightGripper = 1;

struct BottleneckSpec {
  sim::ObjectKind kind = sim::ObjectKind::Rope;
  Vec3 left{-0.15, 0.0, 0.2};
  Vec3 right{0.15, 0.0, 0.2};
  double tolerance = 0.01;

  static BottleneckSpec for_kind(sim::ObjectKind kind);
};

struct ExploreParams {
  double rope_grasp_tolerance = 0.03;
  double rope_lift_height = 0.05;
  double rope_lift_duration = 1.0;
  double rope_translate = 0.05;  // toward the table center
  double rope_translate_duration = 0.5;
  /// Lower to this height after translating, before letting go (<= 0: release where the move ends).
  double rope_release_height = 0.0;
  double rope_lower_duration = 0.5;

  double cloth_grasp_tolerance = 0.03;
  double cloth_lift_height = 0.3;
  double cloth_lift_duration = 1.0;
  /// Held corners are pulled to this fraction of their rest distance before laying down.
  double cloth_stretch_fraction = 0.9;
  double cloth_reposition_duration = 0.7;
  /// Forward sweep while lowering (<= 0: release at lift height).
  double cloth_lay_distance = 0.15;
  /// How far past the table center the sweep ends.
  double cloth_lay_overshoot = 0.1;
  double cloth_lay_height = 0.05;
  double cloth_lay_duration = 0.8;
};

struct PrepareParams {
  double grasp_tolerance = 0.02;
  double p_slip = 0.15;
  double move_duration = 2.0;
};

struct TaskParams {
  double p_task_drop = 0.0;
  double duration = 1.5;
  Vec3 place_offset{0.0, 0.05, -0.15};
};

enum class ActionKind { Exploration, Preparation };
std::string to_string(ActionKind kind);

struct ActionOutcome {
  ActionKind kind = ActionKind::Exploration;
  bool succeeded = false;
  std::vector<std::string> grasp_errors;
  sim::ObjectState resulting_state;
};

/// Raised when preparation is handed a failed extraction.
class PreconditionViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// --- exploration ----------------------------------------------------------

/// Highest visible point (minimum depth; lowest pixel index on ties). Throws scene::OffMask on an empty view.
Vec3 highest_visible_point(const scene::Observation& obs);
/// Visible points at the minimum and maximum image column (lowest pixel index on ties).
std::pair<Vec3, Vec3> extreme_x_points(const scene::Observation& obs);

ActionOutcome explore_rope(const sim::ObjectState& state, const sim::SimConfig& config,
                           const ExploreParams& params = {});
ActionOutcome explore_cloth(const sim::ObjectState& state, const sim::SimConfig& config,
                            const ExploreParams& params = {});
ActionOutcome explore(const sim::ObjectState& state, const sim::SimConfig& config, const ExploreParams& params = {});

// --- preparation ----------------------------------------------------------

ActionOutcome prepare_rope(const sim::ObjectState& state, const recognizer::Representation& rep,
                           const scene::Observation& obs, const sim::SimConfig& config, Rng& rng,
                           const PrepareParams& params = {});
ActionOutcome prepare_cloth(const sim::ObjectState& state, const recognizer::Representation& rep,
                            const scene::Observation& obs, const sim::SimConfig& config, Rng& rng,
                            const PrepareParams& params = {});
ActionOutcome prepare(const sim::ObjectState& state, const recognizer::Representation& rep,
                      const scene::Observation& obs, const sim::SimConfig& config, Rng& rng,
                      const PrepareParams& params = {});

bool verify_bottleneck(const sim::ObjectState& state, const BottleneckSpec& spec);

/// Hold-and-place script standing in for learned task execution. True when both
/// grasps survive to the place pose.
struct TaskOutcome {
  bool succeeded = false;
  std::string failure;
  sim::ObjectState resulting_state;
};
TaskOutcome execute_task(const sim::ObjectState& state, const sim::SimConfig& config, Rng& rng,
                         const TaskParams& params = {});

}  // namespace deform::primitives
