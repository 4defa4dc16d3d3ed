#pragma once

// Seeded out-of-distribution initial states: fold, hold rigidly, throw onto the
// table, settle.

#include <cstdint>

#include "deform/sim.hpp"

namespace deform::ood {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct OodSpec {
  sim::ObjectKind object_kind = sim::ObjectKind::Rope;
  std::uint64_t seed = 0;
  Range throw_speed{0.5, 1.5};     // m/s
  Range throw_height{0.15, 0.30};  // m
  double landing_target_jitter = 0.05;  // m, uniform in a square around the table center
  /// Spin about a random axis while airborne, rad/s (magnitude range).
  Range spin{0.0, 6.0};

  void validate() const;
};

sim::ObjectState generate_rope_ood(const OodSpec& spec, const sim::SimConfig& config);
sim::ObjectState generate_cloth_ood(const OodSpec& spec, const sim::SimConfig& config);
/// Dispatch on spec.object_kind.
sim::ObjectState generate(const OodSpec& spec, const sim::SimConfig& config);

}  // namespace deform::ood
