#pragma once

// Data-parallel inner loops used by the simulator, the renderer and the mask
// statistics. Every kernel has a scalar reference implementation; an AVX2
// variant is selected at runtime when the CPU supports it. Variants are
// required to agree bit-for-bit with the reference (no FMA contraction, same
// operation order), which keeps seeded trajectories identical regardless of
// the dispatch decision.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace deform::kernels {

/// One row of a sphere-capped disc composited into a depth buffer.
struct DiscRow {
  float center_col;     // disc center, pixel units
  float row_offset_sq;  // (row - center_row)^2
  float radius_sq_px;   // disc radius^2 in pixels^2
  float px_to_m_sq;     // (meters per pixel)^2
  float center_depth;   // camera distance of the disc center
  int col_begin;        // inclusive
  int col_end;          // exclusive
};

struct KernelTable {
  std::string_view name;

  /// v[i] *= s
  void (*scale)(std::span<double> v, double s);
  /// out[i] = a[i] + s * b[i]
  void (*axpy)(std::span<double> out, std::span<const double> a, std::span<const double> b, double s);
  /// out[i] = (a[i] - b[i]) * s
  void (*scaled_difference)(std::span<double> out, std::span<const double> a, std::span<const double> b,
                            double s);
  /// depth[c] = min(depth[c], disc surface depth); mask[c] = 1 where the disc wins.
  void (*disc_row)(std::span<float> depth_row, std::span<std::uint8_t> mask_row, const DiscRow& disc);
  std::size_t (*count_nonzero)(std::span<const std::uint8_t> a);
  std::size_t (*count_both)(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
  std::size_t (*count_either)(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
};

const KernelTable& scalar();

/// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2();

/// The table used by the library. AVX2 when available unless the environment
/// variable DEFORM_SIMD is set to "scalar".
const KernelTable& active();

}  // namespace deform::kernels
