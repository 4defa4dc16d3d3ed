#include "deform/ood.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "deform/rng.hpp"

namespace deform::ood {
namespace {

Vec3 centroid(const std::vector<Vec3>& pts) {
  Vec3 c;
  for (const Vec3& p : pts) c += p;
  return c * (1.0 / static_cast<double>(pts.size()));
}

// Orientation of the long axis of the xy footprint.
double principal_angle(const std::vector<Vec3>& pts, const Vec3& c) {
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const Vec3& p : pts) {
    const double dx = p.x - c.x, dy = p.y - c.y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  return 0.5 * std::atan2(2.0 * sxy, sxx - syy);
}

// Rotation of `p` about unit `axis` by `angle` (Rodrigues).
Vec3 rotate(const Vec3& p, const Vec3& axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return p * c + cross(axis, p) * s + axis * (dot(axis, p) * (1.0 - c));
}

Vec3 random_unit(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

// Carry the bundle rigidly to its release pose and hand it a ballistic velocity
// aimed at a jittered point near the table center, then let it land and settle.
sim::ObjectState throw_and_settle(sim::ObjectState state, const OodSpec& spec, const sim::SimConfig& config, Rng& rng) {
  auto& x = state.positions;
  const Vec3 c0 = centroid(x);
  for (Vec3& p : x) p -= c0;

  const Vec3 tumble_axis = random_unit(rng);
  const double tumble = rng.uniform(0.0, 2.0 * kPi);
  for (Vec3& p : x) p = rotate(p, tumble_axis, tumble);

  double lowest = 0.0;
  for (const Vec3& p : x) lowest = std::min(lowest, p.z);
  const double height = rng.uniform(spec.throw_height.lo, spec.throw_height.hi);
  const double speed = rng.uniform(spec.throw_speed.lo, spec.throw_speed.hi);
  const double heading = rng.uniform(0.0, 2.0 * kPi);
  const Vec3 target{rng.uniform(-spec.landing_target_jitter, spec.landing_target_jitter),
                    rng.uniform(-spec.landing_target_jitter, spec.landing_target_jitter), 0.0};
  const double flight = std::sqrt(2.0 * height / config.gravity);
  const Vec3 dir{std::cos(heading), std::sin(heading), 0.0};
  const Vec3 release = target - dir * (speed * flight) + Vec3{0.0, 0.0, height - lowest};

  const Vec3 spin_axis = random_unit(rng);
  const double spin = rng.uniform(spec.spin.lo, spec.spin.hi);
  for (std::size_t i = 0; i < x.size(); ++i) {
    state.velocities[i] = dir * speed + cross(spin_axis * spin, x[i]);
    x[i] += release;
  }
  state.grasps.clear();
  return sim::settle(std::move(state), config);
}

}  // namespace

void OodSpec::validate() const {
  auto check = [](const Range& r, const char* name) {
    if (!(r.lo > 0.0 && r.hi >= r.lo)) throw std::invalid_argument(std::string("invalid ") + name + " range");
  };
  check(throw_speed, "throw_speed");
  check(throw_height, "throw_height");
  if (!(landing_target_jitter >= 0.0)) throw std::invalid_argument("landing_target_jitter must be >= 0");
  if (!(spin.lo >= 0.0 && spin.hi >= spin.lo)) throw std::invalid_argument("invalid spin range");
}

sim::ObjectState generate_rope_ood(const OodSpec& spec, const sim::SimConfig& config) {
  if (spec.object_kind != sim::ObjectKind::Rope) throw std::invalid_argument("generate_rope_ood needs a rope spec");
  spec.validate();
  Rng rng(Rng::mix(spec.seed ^ 0x726f7065ULL));
  auto topo = sim::make_rope_topology();
  const int n = topo->particle_count;
  const double s = topo->spacing;

  // Hairpin: the two halves run side by side one link apart, joined at the fold.
  const int fold = n / 2 + rng.uniform_int(-3, 3);
  std::vector<Vec3> pts(n);
  for (int i = 0; i < n; ++i) {
    if (i < fold) {
      pts[i] = {-(fold - 1 - i) * s, 0.5 * s, 0.0};
    } else {
      pts[i] = {-(i - fold) * s, -0.5 * s, 0.0};
    }
  }
  // Loose handling: small lateral wiggle so the halves are not perfectly parallel.
  for (Vec3& p : pts) {
    p.y += rng.normal(0.0, 0.002);
    p.z += rng.normal(0.0, 0.002);
  }
  auto state = sim::make_state(std::move(topo), std::move(pts));
  return throw_and_settle(std::move(state), spec, config, rng);
}

sim::ObjectState generate_cloth_ood(const OodSpec& spec, const sim::SimConfig& config) {
  if (spec.object_kind != sim::ObjectKind::Cloth) throw std::invalid_argument("generate_cloth_ood needs a cloth spec");
  spec.validate();
  Rng rng(Rng::mix(spec.seed ^ 0x636c6f74ULL));
  auto state = sim::make_flat_cloth();
  auto& x = state.positions;
  const double layer = 2.0 * state.topology->contact_radius + 0.001;

  // Fold the sheet about random horizontal lines; the moving side lands on top.
  // The first crease runs along the long axis (narrowing the sheet into a strip),
  // later ones are either more lengthwise creases or slanted ones that kink the strip.
  const int folds = rng.uniform_int(2, 4);
  const int lengthwise = std::min(2, folds - 1);
  for (int f = 0; f < folds; ++f) {
    const Vec3 c = centroid(x);
    const double axis = principal_angle(x, c);
    const Vec3 along{std::cos(axis), std::sin(axis), 0.0};
    double angle = axis;
    double offset_along = 0.0;
    double offset_across = rng.uniform(-0.02, 0.02);
    if (f >= lengthwise) {
      const double slant = rng.uniform(kPi / 4.0, 4.0 * kPi / 9.0);
      angle = axis + (rng.bernoulli(0.5) ? slant : kPi - slant);
      offset_along = rng.uniform(-0.06, 0.06);
      offset_across = 0.0;
    }
    const Vec3 dir{std::cos(angle), std::sin(angle), 0.0};
    const Vec3 normal{-dir.y, dir.x, 0.0};
    const Vec3 pivot = c + along * offset_along;
    double top = 0.0;
    for (const Vec3& p : x) top = std::max(top, p.z);
    const double hinge = top + 0.5 * layer;
    int positive = 0;
    for (const Vec3& p : x) positive += dot(p - pivot, normal) > offset_across ? 1 : 0;
    const double side = (positive * 2 <= static_cast<int>(x.size())) ? 1.0 : -1.0;
    for (Vec3& p : x) {
      const double d = dot(p - pivot, normal) - offset_across;
      if (d * side <= 0.0) continue;
      p -= normal * (2.0 * d);
      p.z = 2.0 * hinge - p.z;
    }
  }
  for (Vec3& p : x) p.z += rng.normal(0.0, 0.002);
  return throw_and_settle(std::move(state), spec, config, rng);
}

sim::ObjectState generate(const OodSpec& spec, const sim::SimConfig& config) {
  return spec.object_kind == sim::ObjectKind::Rope ? generate_rope_ood(spec, config) : generate_cloth_ood(spec, config);
}

}  // namespace deform::ood
