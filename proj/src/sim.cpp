#include "deform/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "deform/kernels.hpp"

namespace deform::sim {
namespace {

std::span<double> flat(std::vector<Vec3>& v) { return {reinterpret_cast<double*>(v.data()), v.size() * 3}; }

double smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }

class Integrator {
 public:
  Integrator(ObjectState& state, const SimConfig& config)
      : state_(state),
        config_(config),
        topo_(*state.topology),
        dt_(config.timestep / config.substeps),
        damping_factor_(std::pow(1.0 - config.damping, 1.0 / config.substeps)),
        friction_factor_(std::pow(1.0 - config.table_friction, 1.0 / config.substeps)),
        inv_mass_(state.size(), 1.0),
        previous_(state.size()),
        kernels_(kernels::active()) {}

  void substep() {
    enforce_slip();
    refresh_inverse_mass();

    auto& x = state_.positions;
    auto& v = state_.velocities;
    for (std::size_t i = 0; i < v.size(); ++i) v[i].z -= config_.gravity * dt_;
    kernels_.scale(flat(v), 1.0 - config_.air_drag * dt_);
    if (topo_.kind == ObjectKind::Cloth && config_.cloth_normal_drag > 0.0) apply_normal_drag();

    previous_ = x;
    kernels_.axpy(flat(x), flat(previous_), flat(v), dt_);
    for (const Grasp& g : state_.grasps) x[g.particle] = g.target;

    for (int it = 0; it < config_.solver_iterations; ++it) solve_positions();

    kernels_.scaled_difference(flat(v), flat(x), flat(previous_), 1.0 / dt_);
    const double contact = topo_.contact_radius + 1e-6;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].z <= contact && inv_mass_[i] > 0.0) {
        v[i].x *= friction_factor_;
        v[i].y *= friction_factor_;
        if (v[i].z < 0.0) v[i].z = 0.0;
      }
    }
    kernels_.scale(flat(v), damping_factor_);
  }

  /// Quasi-static finish for a body at rest: extra projection passes until the
  /// hard constraints are back within `target` strain. A small, decaying sag
  /// stands in for gravity so the body slumps rather than being lifted.
  /// Bending springs are left out: in a tight fold they pull against the hard constraints.
  void relax(double target, int max_passes) {
    refresh_inverse_mass();
    // Sweeps alternate direction so a locked fold is not always pulled the same way.
    std::vector<Vec3> best = state_.positions;
    double best_residual = max_constraint_residual(state_);
    for (int pass = 0; pass < max_passes && best_residual > target; ++pass) {
      const double sag = kRelaxSag * std::exp2(-pass / kRelaxSagHalfLife);
      for (std::size_t i = 0; i < state_.size(); ++i) {
        if (inv_mass_[i] > 0.0) state_.positions[i].z -= sag;
      }
      if (pass % 2 == 0) {
        solve_positions(/*with_bending=*/false);
      } else {
        relax_backward();
      }
      if (pass % kRelaxCheckEvery != 0) continue;
      const double r = max_constraint_residual(state_);
      if (r < best_residual) {
        best_residual = r;
        best = state_.positions;
      }
    }
    state_.positions = std::move(best);
    std::fill(state_.velocities.begin(), state_.velocities.end(), Vec3{});
  }

  void check_finite() const {
    for (std::size_t i = 0; i < state_.size(); ++i) {
      if (!is_finite(state_.positions[i]) || !is_finite(state_.velocities[i])) {
        throw NonFiniteState("non-finite particle state at index " + std::to_string(i));
      }
    }
  }

  double dt() const { return dt_; }

 private:
  void solve_positions(bool with_bending = true) {
    auto& x = state_.positions;
    for (const Constraint& c : topo_.constraints) project(c, 1.0);
    const double bend = topo_.kind == ObjectKind::Rope ? config_.rope_bending_stiffness : config_.cloth_bending_stiffness;
    if (with_bending && bend > 0.0) {
      for (const Constraint& c : topo_.bending) project(c, bend);
    }
    if (topo_.kind == ObjectKind::Rope && config_.rope_self_collision) collide_self();
    const double floor = topo_.contact_radius;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (inv_mass_[i] > 0.0 && x[i].z < floor) x[i].z = floor;
    }
  }

  void relax_backward() {
    auto& x = state_.positions;
    for (auto c = topo_.constraints.rbegin(); c != topo_.constraints.rend(); ++c) project(*c, 1.0);
    const double floor = topo_.contact_radius;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (inv_mass_[i] > 0.0 && x[i].z < floor) x[i].z = floor;
    }
  }

  void refresh_inverse_mass() {
    std::fill(inv_mass_.begin(), inv_mass_.end(), 1.0);
    for (const Grasp& g : state_.grasps) inv_mass_[g.particle] = 0.0;
  }

  void enforce_slip() {
    if (state_.grasps.size() < 2) return;
    const Grasp& a = state_.grasps[0];
    const Grasp& b = state_.grasps[1];
    const double limit = topo_.rest_distance(a.particle, b.particle) * (1.0 + config_.grasp_slip_strain);
    if (distance(a.target, b.target) > limit) {
      const int loser = std::max(a.gripper_id, b.gripper_id);
      std::erase_if(state_.grasps, [loser](const Grasp& g) { return g.gripper_id == loser; });
    }
  }

  void project(const Constraint& c, double stiffness) {
    auto& x = state_.positions;
    const double wa = inv_mass_[c.a];
    const double wb = inv_mass_[c.b];
    const double w = wa + wb;
    if (w <= 0.0) return;
    const Vec3 d = x[c.b] - x[c.a];
    const double len = norm(d);
    if (len < 1e-12) return;
    const Vec3 corr = d * (stiffness * (len - c.rest) / (len * w));
    x[c.a] += corr * wa;
    x[c.b] -= corr * wb;
  }

  void collide_self() {
    auto& x = state_.positions;
    const double min_dist = 2.0 * topo_.contact_radius;
    const double min_sq = min_dist * min_dist;
    const int n = static_cast<int>(x.size());
    for (int i = 0; i < n; ++i) {
      for (int j = i + 2; j < n; ++j) {
        const Vec3 d = x[j] - x[i];
        const double sq = dot(d, d);
        if (sq >= min_sq || sq < 1e-18) continue;
        const double w = inv_mass_[i] + inv_mass_[j];
        if (w <= 0.0) continue;
        const double len = std::sqrt(sq);
        const Vec3 corr = d * ((len - min_dist) / (len * w));
        x[i] += corr * inv_mass_[i];
        x[j] -= corr * inv_mass_[j];
      }
    }
  }

  void apply_normal_drag() {
    const auto& x = state_.positions;
    auto& v = state_.velocities;
    const int rows = topo_.rows;
    const int cols = topo_.cols;
    const double k = config_.cloth_normal_drag * dt_;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const Vec3 tu = x[topo_.grid_index(r, std::min(c + 1, cols - 1))] - x[topo_.grid_index(r, std::max(c - 1, 0))];
        const Vec3 tv = x[topo_.grid_index(std::min(r + 1, rows - 1), c)] - x[topo_.grid_index(std::max(r - 1, 0), c)];
        Vec3 n = cross(tu, tv);
        const double len = norm(n);
        if (len < 1e-12) continue;
        n *= 1.0 / len;
        Vec3& vel = v[topo_.grid_index(r, c)];
        vel -= n * (k * dot(vel, n));
      }
    }
  }

  ObjectState& state_;
  const SimConfig& config_;
  const Topology& topo_;
  double dt_;
  double damping_factor_;
  double friction_factor_;
  std::vector<double> inv_mass_;
  std::vector<Vec3> previous_;
  const kernels::KernelTable& kernels_;
};

long long substep_count(const SimConfig& config, double duration) {
  if (duration < 0.0) throw std::invalid_argument("duration must be non-negative");
  return std::llround(duration / config.timestep) * config.substeps;
}

}  // namespace

std::string to_string(ObjectKind kind) { return kind == ObjectKind::Rope ? "rope" : "cloth"; }

ObjectKind object_kind_from_string(const std::string& text) {
  if (text == "rope") return ObjectKind::Rope;
  if (text == "cloth") return ObjectKind::Cloth;
  throw std::invalid_argument("unknown object kind '" + text + "'");
}

std::string to_string(GraspError::Kind kind) {
  switch (kind) {
    case GraspError::Kind::OutOfTolerance: return "out_of_tolerance";
    case GraspError::Kind::GripperBusy: return "gripper_busy";
    case GraspError::Kind::ParticleTaken: return "particle_taken";
    case GraspError::Kind::TooManyGrasps: return "too_many_grasps";
    case GraspError::Kind::Slipped: return "slipped";
  }
  return "unknown";
}

double Topology::rest_distance(int i, int j) const {
  if (kind == ObjectKind::Rope) return std::abs(i - j) * spacing;
  const int dr = i / cols - j / cols;
  const int dc = i % cols - j % cols;
  return std::hypot(dr * spacing, dc * spacing);
}

std::vector<int> Topology::corner_indices() const {
  if (kind != ObjectKind::Cloth) return {};
  return {grid_index(0, 0), grid_index(0, cols - 1), grid_index(rows - 1, cols - 1), grid_index(rows - 1, 0)};
}

std::shared_ptr<const Topology> make_rope_topology(int particles, double length) {
  auto topo = std::make_shared<Topology>();
  topo->kind = ObjectKind::Rope;
  topo->particle_count = particles;
  topo->spacing = particles > 1 ? length / (particles - 1) : 0.0;
  topo->contact_radius = constants::kRopeRadius;
  topo->particle_mass = constants::kRopeMass / std::max(particles, 1);
  for (int i = 0; i + 1 < particles; ++i) topo->constraints.push_back({i, i + 1, topo->spacing});
  for (int i = 0; i + 2 < particles; ++i) topo->bending.push_back({i, i + 2, 2.0 * topo->spacing});
  return topo;
}

std::shared_ptr<const Topology> make_cloth_topology(int grid, double size) {
  auto topo = std::make_shared<Topology>();
  topo->kind = ObjectKind::Cloth;
  topo->rows = grid;
  topo->cols = grid;
  topo->particle_count = grid * grid;
  topo->spacing = size / (grid - 1);
  topo->contact_radius = constants::kClothContactRadius;
  topo->particle_mass = constants::kClothMass / topo->particle_count;
  const double s = topo->spacing;
  const double diag = std::sqrt(2.0) * s;
  auto id = [grid](int r, int c) { return r * grid + c; };
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) {
      if (c + 1 < grid) topo->constraints.push_back({id(r, c), id(r, c + 1), s});
      if (r + 1 < grid) topo->constraints.push_back({id(r, c), id(r + 1, c), s});
      if (r + 1 < grid && c + 1 < grid) {
        topo->constraints.push_back({id(r, c), id(r + 1, c + 1), diag});
        topo->constraints.push_back({id(r, c + 1), id(r + 1, c), diag});
      }
      if (c + 2 < grid) topo->bending.push_back({id(r, c), id(r, c + 2), 2.0 * s});
      if (r + 2 < grid) topo->bending.push_back({id(r, c), id(r + 2, c), 2.0 * s});
    }
  }
  return topo;
}

const Grasp* ObjectState::find_grasp(int gripper_id) const {
  for (const Grasp& g : grasps) {
    if (g.gripper_id == gripper_id) return &g;
  }
  return nullptr;
}

bool ObjectState::is_grasped(int particle) const {
  return std::any_of(grasps.begin(), grasps.end(), [particle](const Grasp& g) { return g.particle == particle; });
}

void SimConfig::validate() const {
  if (!(timestep > 0.0)) throw std::invalid_argument("timestep must be > 0");
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  if (!(damping >= 0.0 && damping <= 1.0)) throw std::invalid_argument("damping must be in [0, 1]");
  if (!(table_friction >= 0.0 && table_friction <= 1.0)) throw std::invalid_argument("table_friction must be in [0, 1]");
  if (solver_iterations < 1) throw std::invalid_argument("solver_iterations must be >= 1");
}

ObjectState make_state(std::shared_ptr<const Topology> topology, std::vector<Vec3> positions) {
  ObjectState s;
  s.topology = std::move(topology);
  s.velocities.assign(positions.size(), Vec3{});
  s.positions = std::move(positions);
  return s;
}

ObjectState make_straight_rope(Vec3 center, double yaw) {
  auto topo = make_rope_topology();
  const Vec3 dir{std::cos(yaw), std::sin(yaw), 0.0};
  std::vector<Vec3> pts;
  pts.reserve(topo->particle_count);
  for (int i = 0; i < topo->particle_count; ++i) {
    const double t = i * topo->spacing - constants::kRopeLength / 2.0;
    pts.push_back({center.x + dir.x * t, center.y + dir.y * t, topo->contact_radius});
  }
  return make_state(std::move(topo), std::move(pts));
}

ObjectState make_flat_cloth(Vec3 center, double yaw) {
  auto topo = make_cloth_topology();
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double half = constants::kClothSize / 2.0;
  std::vector<Vec3> pts;
  pts.reserve(topo->particle_count);
  for (int r = 0; r < topo->rows; ++r) {
    for (int k = 0; k < topo->cols; ++k) {
      const double lx = k * topo->spacing - half;
      const double ly = r * topo->spacing - half;
      pts.push_back({center.x + c * lx - s * ly, center.y + s * lx + c * ly, topo->contact_radius});
    }
  }
  return make_state(std::move(topo), std::move(pts));
}

ObjectState step(ObjectState state, const SimConfig& config, double duration) {
  config.validate();
  const long long n = substep_count(config, duration);
  Integrator integrator(state, config);
  for (long long i = 0; i < n; ++i) {
    integrator.substep();
    if ((i + 1) % config.substeps == 0) integrator.check_finite();
  }
  integrator.check_finite();
  return state;
}

ObjectState move_grippers(ObjectState state, const SimConfig& config, std::span<const GripperMove> moves,
                          double duration) {
  config.validate();
  struct Path {
    int gripper_id;
    Vec3 from;
    Vec3 to;
  };
  std::vector<Path> paths;
  for (const GripperMove& m : moves) {
    const Grasp* g = state.find_grasp(m.gripper_id);
    if (g != nullptr) paths.push_back({m.gripper_id, g->target, m.target});
  }
  const long long n = substep_count(config, duration);
  Integrator integrator(state, config);
  for (long long i = 0; i < n; ++i) {
    const double s = smoothstep(static_cast<double>(i + 1) / static_cast<double>(n));
    for (const Path& p : paths) {
      for (Grasp& g : state.grasps) {
        if (g.gripper_id == p.gripper_id) g.target = p.from + (p.to - p.from) * s;
      }
    }
    integrator.substep();
    if ((i + 1) % config.substeps == 0) integrator.check_finite();
  }
  integrator.check_finite();
  return state;
}

namespace {

void run_until_quiet(Integrator& integrator, const ObjectState& state, const SimConfig& config) {
  const long long cap_steps = std::llround(kSettleCap / config.timestep);
  int quiet = 0;
  for (long long s = 0; s < cap_steps; ++s) {
    for (int k = 0; k < config.substeps; ++k) integrator.substep();
    integrator.check_finite();
    quiet = max_speed(state) < kSettleSpeed ? quiet + 1 : 0;
    if (quiet >= 3) break;
  }
}

}  // namespace

ObjectState settle(ObjectState state, const SimConfig& config) {
  if (!state.grasps.empty()) throw std::invalid_argument("settle requires no active grasps");
  config.validate();
  {
    Integrator integrator(state, config);
    run_until_quiet(integrator, state, config);
    // A heap can come to rest with its lower layers stretched by the weight above.
    if (max_constraint_residual(state) > constants::kConstraintTolerance) {
      integrator.relax(kSettleStrain, kRelaxPasses);
      integrator.check_finite();
    }
  }
  if (max_constraint_residual(state) > constants::kConstraintTolerance) {
    // Plain projection stalls on a locked fold; a stiffer dynamic solve
    // lets the sheet slump out of it.
    SimConfig stiff = config;
    stiff.solver_iterations = kUnlockIterations;
    Integrator integrator(state, stiff);
    run_until_quiet(integrator, state, stiff);
    integrator.relax(kSettleStrain, kRelaxPasses);
    integrator.check_finite();
  }
  return state;
}

int nearest_particle(const ObjectState& state, const Vec3& world_point) {
  int best = -1;
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.size(); ++i) {
    const Vec3 d = state.positions[i] - world_point;
    const double sq = dot(d, d);
    if (sq < best_sq) {
      best_sq = sq;
      best = static_cast<int>(i);
    }
  }
  return best;
}

ObjectState grasp_nearest(ObjectState state, int gripper_id, const Vec3& world_point, double tolerance) {
  if (state.find_grasp(gripper_id) != nullptr) {
    throw GraspError(GraspError::Kind::GripperBusy, "gripper " + std::to_string(gripper_id) + " already holds a particle");
  }
  if (static_cast<int>(state.grasps.size()) >= constants::kMaxGrasps) {
    throw GraspError(GraspError::Kind::TooManyGrasps, "both grippers are busy");
  }
  const int idx = nearest_particle(state, world_point);
  if (idx < 0) throw GraspError(GraspError::Kind::OutOfTolerance, "object has no particles");
  const double d = distance(state.positions[idx], world_point);
  if (d > tolerance) {
    std::ostringstream msg;
    msg << "nearest particle " << idx << " is " << d << " m away (tolerance " << tolerance << " m)";
    throw GraspError(GraspError::Kind::OutOfTolerance, msg.str());
  }
  if (state.is_grasped(idx)) {
    throw GraspError(GraspError::Kind::ParticleTaken, "particle " + std::to_string(idx) + " is already held");
  }
  state.grasps.push_back({gripper_id, idx, state.positions[idx]});
  state.velocities[idx] = {};
  return state;
}

ObjectState release(ObjectState state, int gripper_id) {
  std::erase_if(state.grasps, [gripper_id](const Grasp& g) { return g.gripper_id == gripper_id; });
  return state;
}

ObjectState release_all(ObjectState state) {
  state.grasps.clear();
  return state;
}

double max_constraint_residual(const ObjectState& state) {
  double worst = 0.0;
  for (const Constraint& c : state.topology->constraints) {
    const double len = distance(state.positions[c.a], state.positions[c.b]);
    worst = std::max(worst, std::abs(len - c.rest) / c.rest);
  }
  return worst;
}

double min_height(const ObjectState& state) {
  double lo = std::numeric_limits<double>::infinity();
  for (const Vec3& p : state.positions) lo = std::min(lo, p.z);
  return lo;
}

double max_speed(const ObjectState& state) {
  double hi = 0.0;
  for (const Vec3& v : state.velocities) hi = std::max(hi, dot(v, v));
  return std::sqrt(hi);
}

double kinetic_energy(const ObjectState& state) {
  double e = 0.0;
  for (const Vec3& v : state.velocities) e += dot(v, v);
  return 0.5 * state.topology->particle_mass * e;
}

double potential_energy(const ObjectState& state, double gravity) {
  double e = 0.0;
  for (const Vec3& p : state.positions) e += p.z;
  return state.topology->particle_mass * gravity * e;
}

double rope_arc_length(const ObjectState& state) {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < state.size(); ++i) len += distance(state.positions[i], state.positions[i + 1]);
  return len;
}

InvariantReport check_invariants(const ObjectState& state) {
  InvariantReport r;
  const int expected = state.kind() == ObjectKind::Rope ? constants::kRopeParticles
                                                        : constants::kClothGrid * constants::kClothGrid;
  r.particle_count_ok = static_cast<int>(state.size()) == expected && state.velocities.size() == state.size();
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!is_finite(state.positions[i]) || !is_finite(state.velocities[i])) r.finite = false;
  }
  r.constraints_ok = max_constraint_residual(state) <= constants::kConstraintTolerance;
  r.above_table = min_height(state) >= -constants::kPenetrationTolerance;
  r.grasp_count_ok = static_cast<int>(state.grasps.size()) <= constants::kMaxGrasps;
  return r;
}

std::string InvariantReport::describe() const {
  std::ostringstream out;
  out << "count=" << particle_count_ok << " constraints=" << constraints_ok << " table=" << above_table
      << " grasps=" << grasp_count_ok << " finite=" << finite;
  return out.str();
}

}  // namespace deform::sim
