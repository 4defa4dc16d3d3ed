#include "deform/primitives.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace deform::primitives {
namespace {

const scene::Calibration& camera() {
  static const scene::Calibration calib = scene::Calibration::standard();
  return calib;
}

PixelIndex index_to_pixel(const scene::Observation& obs, std::size_t i) {
  return {static_cast<int>(i % obs.width()), static_cast<int>(i / obs.width())};
}

Vec3 toward_center(const Vec3& p, double distance_xy) {
  const double r = norm_xy(p);
  if (r < 1e-9) return p;
  const double d = std::min(distance_xy, r);
  return {p.x - p.x / r * d, p.y - p.y / r * d, p.z};
}

ActionOutcome settled_failure(ActionKind kind, sim::ObjectState state, const sim::SimConfig& config,
                              std::vector<std::string> errors) {
  ActionOutcome out;
  out.kind = kind;
  out.succeeded = false;
  out.grasp_errors = std::move(errors);
  out.resulting_state = sim::settle(sim::release_all(std::move(state)), config);
  return out;
}

struct Target {
  Vec3 grasp_point;
  Vec3 pose;
  int gripper;
};

ActionOutcome prepare_with(const sim::ObjectState& state, const recognizer::Representation& rep,
                           const scene::Observation& obs, const sim::SimConfig& config, Rng& rng,
                           const PrepareParams& params, sim::ObjectKind kind) {
  if (!rep.extracted()) {
    throw PreconditionViolation("preparation requires an extracted representation (" + rep.violated_assumption + ")");
  }
  if (rep.keypoints.size() != 2) throw PreconditionViolation("preparation requires exactly two keypoints");
  if (state.kind() != kind || rep.kind != kind) throw PreconditionViolation("object kind mismatch");

  const BottleneckSpec spec = BottleneckSpec::for_kind(kind);
  Vec3 a = scene::backproject(rep.keypoints[0], obs);
  Vec3 b = scene::backproject(rep.keypoints[1], obs);
  // The keypoint further to the left (world -x) goes to the left gripper.
  if (b.x < a.x || (b.x == a.x && b.y < a.y)) std::swap(a, b);
  const std::array<Target, 2> targets{Target{a, spec.left, kLeftGripper}, Target{b, spec.right, kRightGripper}};

  sim::ObjectState s = state;
  std::vector<std::string> errors;
  for (const Target& t : targets) {
    // Both slip draws happen regardless of order so the random stream stays aligned.
    const bool slipped = rng.bernoulli(params.p_slip);
    try {
      s = sim::grasp_nearest(std::move(s), t.gripper, t.grasp_point, params.grasp_tolerance);
      if (slipped) {
        s = sim::release(std::move(s), t.gripper);
        throw sim::GraspError(sim::GraspError::Kind::Slipped, "pinch grasp slipped on gripper " + std::to_string(t.gripper));
      }
    } catch (const sim::GraspError& e) {
      errors.push_back(sim::to_string(e.kind()) + ": " + e.what());
    }
  }
  if (!errors.empty()) return settled_failure(ActionKind::Preparation, std::move(s), config, std::move(errors));

  const std::array<sim::GripperMove, 2> moves{sim::GripperMove{kLeftGripper, spec.left},
                                              sim::GripperMove{kRightGripper, spec.right}};
  s = sim::move_grippers(std::move(s), config, moves, params.move_duration);
  if (s.grasps.size() != 2) {
    errors.push_back("slipped: a grasp was lost while moving to the hold poses");
    return settled_failure(ActionKind::Preparation, std::move(s), config, std::move(errors));
  }
  for (const Target& t : targets) {
    const sim::Grasp* g = s.find_grasp(t.gripper);
    if (distance(s.positions[g->particle], t.pose) > spec.tolerance) {
      errors.push_back("gripper " + std::to_string(t.gripper) + " did not reach its hold pose");
    }
  }
  if (!errors.empty()) return settled_failure(ActionKind::Preparation, std::move(s), config, std::move(errors));
  ActionOutcome out;
  out.kind = ActionKind::Preparation;
  out.succeeded = true;
  out.resulting_state = std::move(s);
  return out;
}

}  // namespace

BottleneckSpec BottleneckSpec::for_kind(sim::ObjectKind kind) {
  BottleneckSpec spec;
  spec.kind = kind;
  return spec;
}

std::string to_string(ActionKind kind) { return kind == ActionKind::Exploration ? "explore" : "prepare"; }

Vec3 highest_visible_point(const scene::Observation& obs) {
  std::size_t best = obs.mask.size();
  float best_depth = std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < obs.mask.size(); ++i) {
    if (obs.mask[i] && obs.depth[i] < best_depth) {
      best_depth = obs.depth[i];
      best = i;
    }
  }
  if (best == obs.mask.size()) throw scene::OffMask("nothing visible to explore");
  return scene::backproject(index_to_pixel(obs, best), obs);
}

std::pair<Vec3, Vec3> extreme_x_points(const scene::Observation& obs) {
  const int w = obs.width();
  int lo_col = w, hi_col = -1;
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < obs.mask.size(); ++i) {
    if (!obs.mask[i]) continue;
    const int col = static_cast<int>(i % w);
    if (col < lo_col) {
      lo_col = col;
      lo = i;
    }
    if (col > hi_col) {
      hi_col = col;
      hi = i;
    }
  }
  if (hi_col < 0) throw scene::OffMask("nothing visible to explore");
  return {scene::backproject(index_to_pixel(obs, lo), obs), scene::backproject(index_to_pixel(obs, hi), obs)};
}

ActionOutcome explore_rope(const sim::ObjectState& state, const sim::SimConfig& config, const ExploreParams& params) {
  const scene::Observation obs = scene::render(state, camera());
  sim::ObjectState s = state;
  Vec3 point;
  try {
    point = highest_visible_point(obs);
    s = sim::grasp_nearest(std::move(s), kLeftGripper, point, params.rope_grasp_tolerance);
  } catch (const scene::OffMask& e) {
    return settled_failure(ActionKind::Exploration, std::move(s), config, {std::string("off_mask: ") + e.what()});
  } catch (const sim::GraspError& e) {
    return settled_failure(ActionKind::Exploration, std::move(s), config, {sim::to_string(e.kind()) + ": " + e.what()});
  }
  const Vec3 held = s.find_grasp(kLeftGripper)->target;
  const Vec3 lifted{held.x, held.y, params.rope_lift_height};
  const std::array<sim::GripperMove, 1> lift{sim::GripperMove{kLeftGripper, lifted}};
  s = sim::move_grippers(std::move(s), config, lift, params.rope_lift_duration);
  const std::array<sim::GripperMove, 1> shift{sim::GripperMove{kLeftGripper, toward_center(lifted, params.rope_translate)}};
  s = sim::move_grippers(std::move(s), config, shift, params.rope_translate_duration);
  if (params.rope_release_height > 0.0) {
    Vec3 low = shift[0].target;
    low.z = params.rope_release_height;
    const std::array<sim::GripperMove, 1> lower{sim::GripperMove{kLeftGripper, low}};
    s = sim::move_grippers(std::move(s), config, lower, params.rope_lower_duration);
  }

  ActionOutcome out;
  out.kind = ActionKind::Exploration;
  out.succeeded = true;
  out.resulting_state = sim::settle(sim::release_all(std::move(s)), config);
  return out;
}

ActionOutcome explore_cloth(const sim::ObjectState& state, const sim::SimConfig& config, const ExploreParams& params) {
  const scene::Observation obs = scene::render(state, camera());
  sim::ObjectState s = state;
  std::vector<std::string> errors;
  std::pair<Vec3, Vec3> ends;
  try {
    ends = extreme_x_points(obs);
  } catch (const scene::OffMask& e) {
    return settled_failure(ActionKind::Exploration, std::move(s), config, {std::string("off_mask: ") + e.what()});
  }
  try {
    s = sim::grasp_nearest(std::move(s), kLeftGripper, ends.first, params.cloth_grasp_tolerance);
  } catch (const sim::GraspError& e) {
    errors.push_back(sim::to_string(e.kind()) + ": " + e.what());
  }
  // Degenerate view: both extremes resolve to one particle, so a single hand lifts.
  const int second = sim::nearest_particle(s, ends.second);
  const sim::Grasp* first = s.find_grasp(kLeftGripper);
  if (first == nullptr || first->particle != second) {
    try {
      s = sim::grasp_nearest(std::move(s), kRightGripper, ends.second, params.cloth_grasp_tolerance);
    } catch (const sim::GraspError& e) {
      errors.push_back(sim::to_string(e.kind()) + ": " + e.what());
    }
  }
  if (s.grasps.empty()) return settled_failure(ActionKind::Exploration, std::move(s), config, std::move(errors));

  std::vector<sim::GripperMove> lift;
  for (const sim::Grasp& g : s.grasps) lift.push_back({g.gripper_id, {g.target.x, g.target.y, params.cloth_lift_height}});
  s = sim::move_grippers(std::move(s), config, lift, params.cloth_lift_duration);

  if (params.cloth_lay_distance > 0.0) {
    // Stretch the held edge, then sweep forward and down so the hanging sheet
    // is laid out along the table behind the grippers instead of dropping in a heap.
    Vec3 mid{}, axis{1.0, 0.0, 0.0};
    double half = 0.0;
    if (s.grasps.size() == 2) {
      const sim::Grasp& a = s.grasps[0];
      const sim::Grasp& b = s.grasps[1];
      mid = (a.target + b.target) * 0.5;
      Vec3 d = b.target - a.target;
      d.z = 0.0;
      if (norm(d) > 1e-9) axis = d * (1.0 / norm(d));
      half = 0.5 * params.cloth_stretch_fraction * s.topology->rest_distance(a.particle, b.particle);
    } else {
      mid = s.grasps[0].target;
    }
    Vec3 forward{-axis.y, axis.x, 0.0};
    if (dot(forward, Vec3{-mid.x, -mid.y, 0.0}) < 0.0) forward = forward * -1.0;
    const Vec3 start = forward * -(params.cloth_lay_distance - params.cloth_lay_overshoot);
    const Vec3 finish = forward * params.cloth_lay_overshoot;

    auto place = [&](const Vec3& center, double z) {
      std::vector<sim::GripperMove> moves;
      for (std::size_t i = 0; i < s.grasps.size(); ++i) {
        const double sign = s.grasps.size() == 2 ? (i == 0 ? -1.0 : 1.0) : 0.0;
        Vec3 t = center + axis * (sign * half);
        t.z = z;
        moves.push_back({s.grasps[i].gripper_id, t});
      }
      return moves;
    };
    const auto carry = place(start, params.cloth_lift_height);
    const auto lay = place(finish, params.cloth_lay_height);
    s = sim::move_grippers(std::move(s), config, carry, params.cloth_reposition_duration);
    s = sim::move_grippers(std::move(s), config, lay, params.cloth_lay_duration);
  }

  ActionOutcome out;
  out.kind = ActionKind::Exploration;
  out.succeeded = true;
  out.grasp_errors = std::move(errors);
  out.resulting_state = sim::settle(sim::release_all(std::move(s)), config);
  return out;
}

ActionOutcome explore(const sim::ObjectState& state, const sim::SimConfig& config, const ExploreParams& params) {
  return state.kind() == sim::ObjectKind::Rope ? explore_rope(state, config, params)
                                               : explore_cloth(state, config, params);
}

ActionOutcome prepare_rope(const sim::ObjectState& state, const recognizer::Representation& rep,
                           const scene::Observation& obs, const sim::SimConfig& config, Rng& rng,
                           const PrepareParams& params) {
  return prepare_with(state, rep, obs, config, rng, params, sim::ObjectKind::Rope);
}

ActionOutcome prepare_cloth(const sim::ObjectState& state, const recognizer::Representation& rep,
                            const scene::Observation& obs, const sim::SimConfig& config, Rng& rng,
                            const PrepareParams& params) {
  return prepare_with(state, rep, obs, config, rng, params, sim::ObjectKind::Cloth);
}

ActionOutcome prepare(const sim::ObjectState& state, const recognizer::Representation& rep,
                      const scene::Observation& obs, const sim::SimConfig& config, Rng& rng,
                      const PrepareParams& params) {
  return state.kind() == sim::ObjectKind::Rope ? prepare_rope(state, rep, obs, config, rng, params)
                                               : prepare_cloth(state, rep, obs, config, rng, params);
}

bool verify_bottleneck(const sim::ObjectState& state, const BottleneckSpec& spec) {
  if (state.kind() != spec.kind) return false;
  const sim::Grasp* left = state.find_grasp(kLeftGripper);
  const sim::Grasp* right = state.find_grasp(kRightGripper);
  if (left == nullptr || right == nullptr) return false;
  if (distance(state.positions[left->particle], spec.left) > spec.tolerance) return false;
  if (distance(state.positions[right->particle], spec.right) > spec.tolerance) return false;

  const sim::Topology& topo = *state.topology;
  const int a = left->particle;
  const int b = right->particle;
  if (spec.kind == sim::ObjectKind::Rope) {
    const int last = topo.particle_count - 1;
    return (a == 0 && b == last) || (a == last && b == 0);
  }
  const auto corners = topo.corner_indices();
  for (std::size_t i = 0; i < corners.size(); ++i) {
    const int p = corners[i];
    const int q = corners[(i + 1) % corners.size()];
    if ((a == p && b == q) || (a == q && b == p)) return true;
  }
  return false;
}

TaskOutcome execute_task(const sim::ObjectState& state, const sim::SimConfig& config, Rng& rng,
                         const TaskParams& params) {
  TaskOutcome out;
  sim::ObjectState s = state;
  const bool drop = rng.bernoulli(params.p_task_drop);
  std::vector<sim::GripperMove> moves;
  for (const sim::Grasp& g : s.grasps) moves.push_back({g.gripper_id, g.target + params.place_offset});
  s = sim::move_grippers(std::move(s), config, moves, params.duration);
  if (s.grasps.size() != 2) {
    out.failure = "grasp lost during placement";
  } else if (drop) {
    out.failure = "object dropped during placement";
  } else {
    out.succeeded = true;
  }
  out.resulting_state = sim::settle(sim::release_all(std::move(s)), config);
  return out;
}

}  // namespace deform::primitives
