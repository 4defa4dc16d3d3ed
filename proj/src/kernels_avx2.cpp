// Compiled with -mavx2 (and without -mfma) when the toolchain targets x86-64.

#include "deform/kernels.hpp"

#if defined(DEFORM_HAVE_AVX2)

#include <immintrin.h>

#include <bit>
#include <cmath>

namespace deform::kernels {
namespace {

void scale_avx2(std::span<double> v, double s) {
  const __m256d k = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= v.size(); i += 4) {
    _mm256_storeu_pd(v.data() + i, _mm256_mul_pd(_mm256_loadu_pd(v.data() + i), k));
  }
  for (; i < v.size(); ++i) v[i] *= s;
}

void axpy_avx2(std::span<double> out, std::span<const double> a, std::span<const double> b, double s) {
  const __m256d k = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= out.size(); i += 4) {
    const __m256d prod = _mm256_mul_pd(k, _mm256_loadu_pd(b.data() + i));
    _mm256_storeu_pd(out.data() + i, _mm256_add_pd(_mm256_loadu_pd(a.data() + i), prod));
  }
  for (; i < out.size(); ++i) out[i] = a[i] + s * b[i];
}

void scaled_difference_avx2(std::span<double> out, std::span<const double> a, std::span<const double> b,
                            double s) {
  const __m256d k = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= out.size(); i += 4) {
    const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(diff, k));
  }
  for (; i < out.size(); ++i) out[i] = (a[i] - b[i]) * s;
}

void disc_row_avx2(std::span<float> depth_row, std::span<std::uint8_t> mask_row, const DiscRow& disc) {
  const __m256 center = _mm256_set1_ps(disc.center_col);
  const __m256 dv2 = _mm256_set1_ps(disc.row_offset_sq);
  const __m256 r2 = _mm256_set1_ps(disc.radius_sq_px);
  const __m256 m2 = _mm256_set1_ps(disc.px_to_m_sq);
  const __m256 d0 = _mm256_set1_ps(disc.center_depth);
  const __m256 lane = _mm256_setr_ps(0.f, 1.f, 2.f, 3.f, 4.f, 5.f, 6.f, 7.f);

  int c = disc.col_begin;
  for (; c + 8 <= disc.col_end; c += 8) {
    const __m256 cols = _mm256_add_ps(_mm256_set1_ps(static_cast<float>(c)), lane);
    const __m256 du = _mm256_sub_ps(cols, center);
    const __m256 d2 = _mm256_add_ps(_mm256_mul_ps(du, du), dv2);
    const __m256 inside = _mm256_cmp_ps(d2, r2, _CMP_LE_OQ);
    if (_mm256_movemask_ps(inside) == 0) continue;
    // Lanes outside the disc produce NaN from the sqrt; they are masked out below.
    const __m256 depth = _mm256_sub_ps(d0, _mm256_sqrt_ps(_mm256_mul_ps(_mm256_sub_ps(r2, d2), m2)));
    const __m256 current = _mm256_loadu_ps(depth_row.data() + c);
    const __m256 wins = _mm256_and_ps(inside, _mm256_cmp_ps(depth, current, _CMP_LT_OQ));
    unsigned bits = static_cast<unsigned>(_mm256_movemask_ps(wins));
    if (bits == 0) continue;
    _mm256_storeu_ps(depth_row.data() + c, _mm256_blendv_ps(current, depth, wins));
    while (bits != 0) {
      const int lane_index = std::countr_zero(bits);
      mask_row[c + lane_index] = 1;
      bits &= bits - 1;
    }
  }
  for (; c < disc.col_end; ++c) {
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

std::size_t count_avx2_impl(const std::uint8_t* a, const std::uint8_t* b, std::size_t n, int mode) {
  const __m256i zero = _mm256_setzero_si256();
  std::size_t total = 0;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    __m256i nz = _mm256_xor_si256(_mm256_cmpeq_epi8(va, zero), _mm256_set1_epi8(-1));
    if (mode != 0) {
      const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
      const __m256i nzb = _mm256_xor_si256(_mm256_cmpeq_epi8(vb, zero), _mm256_set1_epi8(-1));
      nz = mode == 1 ? _mm256_and_si256(nz, nzb) : _mm256_or_si256(nz, nzb);
    }
    total += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(_mm256_movemask_epi8(nz))));
  }
  for (; i < n; ++i) {
    const bool x = a[i] != 0;
    const bool y = mode == 0 ? true : b[i] != 0;
    total += (mode == 2 ? (x || y) : (x && y)) ? 1 : 0;
  }
  return total;
}

std::size_t count_nonzero_avx2(std::span<const std::uint8_t> a) { return count_avx2_impl(a.data(), nullptr, a.size(), 0); }
std::size_t count_both_avx2(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  return count_avx2_impl(a.data(), b.data(), a.size(), 1);
}
std::size_t count_either_avx2(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  return count_avx2_impl(a.data(), b.data(), a.size(), 2);
}

constexpr KernelTable kAvx2{
    "avx2",          scale_avx2,        axpy_avx2,      scaled_difference_avx2, disc_row_avx2,
    count_nonzero_avx2, count_both_avx2, count_either_avx2,
};

}  // namespace

const KernelTable* avx2() {
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &kAvx2 : nullptr;
}

}  // namespace deform::kernels

#else

namespace deform::kernels {
const KernelTable* avx2() { return nullptr; }
}  // namespace deform::kernels

#endif
