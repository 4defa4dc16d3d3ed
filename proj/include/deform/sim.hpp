#pragma once

// Position-based dynamics for a rope (particle chain) and a cloth (particle
// grid) resting on a table plane at z = 0, with kinematic single-particle
// grasps driven by scripted gripper targets.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "deform/geometry.hpp"

namespace deform::sim {

enum class ObjectKind { Rope, Cloth };

std::string to_string(ObjectKind kind);
ObjectKind object_kind_from_string(const std::string& text);

/// Declared simulation constants. None of these are measured quantities.
namespace constants {
inline constexpr double kRopeLength = 0.5;
inline constexpr int kRopeParticles = 50;
inline constexpr double kRopeRadius = 0.004;
inline constexpr double kRopeMass = 0.05;

inline constexpr double kClothSize = 0.3;
inline constexpr int kClothGrid = 20;
inline constexpr double kClothContactRadius = 0.001;
inline constexpr double kClothThicknessBand = 0.005;
inline constexpr double kClothMass = 0.04;

inline constexpr double kWorkspaceHalfExtent = 0.3;
inline constexpr double kPenetrationTolerance = 0.001;
inline constexpr double kConstraintTolerance = 0.05;
inline constexpr int kMaxGrasps = 2;
}  // namespace constants

struct Constraint {
  int a = 0;
  int b = 0;
  double rest = 0.0;
};

/// Immutable description of the particle graph. Shared between copies of a state.
struct Topology {
  ObjectKind kind = ObjectKind::Rope;
  int particle_count = 0;
  int rows = 0;  // cloth grid rows; 0 for rope
  int cols = 0;
  double spacing = 0.0;
  double contact_radius = 0.0;
  double particle_mass = 0.0;
  /// Hard constraints: the rope chain, or cloth structural + shear pairs.
  std::vector<Constraint> constraints;
  /// Soft bending springs (second neighbours). Not part of the checked constraint graph.
  std::vector<Constraint> bending;

  int grid_index(int row, int col) const { return row * cols + col; }
  /// Distance between two particles in the undeformed configuration.
  double rest_distance(int i, int j) const;
  /// Cloth corner indices in cyclic order; empty for rope.
  std::vector<int> corner_indices() const;
};

std::shared_ptr<const Topology> make_rope_topology(int particles = constants::kRopeParticles,
                                                   double length = constants::kRopeLength);
std::shared_ptr<const Topology> make_cloth_topology(int grid = constants::kClothGrid,
                                                    double size = constants::kClothSize);

struct Grasp {
  int gripper_id = 0;
  int particle = 0;
  Vec3 target;
};

struct ObjectState {
  std::shared_ptr<const Topology> topology;
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  std::vector<Grasp> grasps;

  ObjectKind kind() const { return topology->kind; }
  std::size_t size() const { return positions.size(); }
  const Grasp* find_grasp(int gripper_id) const;
  bool is_grasped(int particle) const;
};

struct SimConfig {
  double timestep = 1.0 / 120.0;
  int substeps = 4;
  double gravity = 9.81;
  /// Fraction of velocity removed per timestep.
  double damping = 0.02;
  /// Fraction of tangential velocity removed per timestep while touching the table.
  double table_friction = 0.5;
  int solver_iterations = 8;
  std::uint64_t rng_seed = 0;

  /// Isotropic air drag, 1/s.
  double air_drag = 0.3;
  /// Drag along the local cloth normal, 1/s. Lets a released sheet glide and spread.
  double cloth_normal_drag = 6.0;
  /// Per-iteration stiffness of the second-neighbour bending springs.
  double rope_bending_stiffness = 1.0;
  double cloth_bending_stiffness = 0.02;
  bool rope_self_collision = true;
  /// Two-handed grasps slip once the gripper separation exceeds the rest distance by this fraction.
  double grasp_slip_strain = 0.05;

  void validate() const;
};

class NonFiniteState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GraspError : public std::runtime_error {
 public:
  enum class Kind { OutOfTolerance, GripperBusy, ParticleTaken, TooManyGrasps, Slipped };
  GraspError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string to_string(GraspError::Kind kind);

// --- construction ---------------------------------------------------------

/// Straight rope along `direction` (xy), centered at `center`, resting on the table.
ObjectState make_straight_rope(Vec3 center = {}, double yaw = 0.0);
/// Flat cloth centered at `center`, rotated by `yaw`, resting on the table.
ObjectState make_flat_cloth(Vec3 center = {}, double yaw = 0.0);
/// State with the given positions and zero velocity.
ObjectState make_state(std::shared_ptr<const Topology> topology, std::vector<Vec3> positions);

// --- dynamics -------------------------------------------------------------

/// Advance by `duration` seconds with every gripper held at its current target.
ObjectState step(ObjectState state, const SimConfig& config, double duration);

struct GripperMove {
  int gripper_id = 0;
  Vec3 target;
};

/// Interpolate gripper targets from their current values to `moves` over
/// `duration` (smoothstep profile), stepping the dynamics throughout.
/// Grippers not listed stay put.
ObjectState move_grippers(ObjectState state, const SimConfig& config, std::span<const GripperMove> moves,
                          double duration);

/// Run until the maximum particle speed drops below 1 cm/s, capped at 10 s.
/// If the resting body is then strained beyond the constraint tolerance,
/// velocities are zeroed and positions relaxed back to kSettleStrain, falling
/// back to a stiffer settle when the relaxation stalls.
ObjectState settle(ObjectState state, const SimConfig& config);

inline constexpr double kSettleSpeed = 0.01;
inline constexpr double kSettleCap = 10.0;
inline constexpr double kSettleStrain = 0.045;
inline constexpr int kRelaxPasses = 200000;
inline constexpr int kRelaxCheckEvery = 16;
inline constexpr int kUnlockIterations = 40;
inline constexpr double kRelaxSag = 1e-5;
inline constexpr double kRelaxSagHalfLife = 2000.0;

// --- grasping -------------------------------------------------------------

/// Nearest particle to `world_point` (lowest index on ties).
int nearest_particle(const ObjectState& state, const Vec3& world_point);

/// Attach the nearest particle to `gripper_id`. Throws GraspError.
ObjectState grasp_nearest(ObjectState state, int gripper_id, const Vec3& world_point, double tolerance);

/// Detach a gripper; the particle keeps its current velocity.
ObjectState release(ObjectState state, int gripper_id);
ObjectState release_all(ObjectState state);

// --- diagnostics ----------------------------------------------------------

double max_constraint_residual(const ObjectState& state);  // fraction of rest length
double min_height(const ObjectState& state);
double max_speed(const ObjectState& state);
double kinetic_energy(const ObjectState& state);
double potential_energy(const ObjectState& state, double gravity);
double rope_arc_length(const ObjectState& state);

struct InvariantReport {
  bool particle_count_ok = true;
  bool constraints_ok = true;
  bool above_table = true;
  bool grasp_count_ok = true;
  bool finite = true;
  bool ok() const { return particle_count_ok && constraints_ok && above_table && grasp_count_ok && finite; }
  std::string describe() const;
};

InvariantReport check_invariants(const ObjectState& state);

}  // namespace deform::sim
