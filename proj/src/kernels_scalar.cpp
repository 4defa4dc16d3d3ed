#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "deform/kernels.hpp"

namespace deform::kernels {
namespace {

void scale_ref(std::span<double> v, double s) {
  for (double& x : v) x *= s;
}

void axpy_ref(std::span<double> out, std::span<const double> a, std::span<const double> b, double s) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + s * b[i];
}

void scaled_difference_ref(std::span<double> out, std::span<const double> a, std::span<const double> b,
                           double s) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a[i] - b[i]) * s;
}

void disc_row_ref(std::span<float> depth_row, std::span<std::uint8_t> mask_row, const DiscRow& disc) {
  for (int c = disc.col_begin; c < disc.col_end; ++c) {
    const float du = static_cast<float>(c) - disc.center_col;
    const float d2 = du * du + disc.row_offset_sq;
    if (!(d2 <= disc.radius_sq_px)) continue;
    const float depth = disc.center_depth - std::sqrt((disc.radius_sq_px - d2) * disc.px_to_m_sq);
    if (depth < depth_row[c]) {
      depth_row[c] = depth;
      mask_row[c] = 1;
    }
  }
}

std::size_t count_nonzero_ref(std::span<const std::uint8_t> a) {
  return static_cast<std::size_t>(std::count_if(a.begin(), a.end(), [](std::uint8_t x) { return x != 0; }));
}

std::size_t count_both_ref(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] != 0 && b[i] != 0) ? 1 : 0;
  return n;
}

std::size_t count_either_ref(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] != 0 || b[i] != 0) ? 1 : 0;
  return n;
}

constexpr KernelTable kScalar{
    "scalar",       scale_ref,         axpy_ref,       scaled_difference_ref, disc_row_ref,
    count_nonzero_ref, count_both_ref, count_either_ref,
};

}  // namespace

const KernelTable& scalar() { return kScalar; }

const KernelTable& active() {
  static const KernelTable* table = [] {
    const char* env = std::getenv("DEFORM_SIMD");
    if (env != nullptr && std::string(env) == "scalar") return &kScalar;
    const KernelTable* wide = avx2();
    return wide != nullptr ? wide : &kScalar;
  }();
  return *table;
}

}  // namespace deform::kernels
