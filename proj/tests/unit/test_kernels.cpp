#include <gtest/gtest.h>

#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "deform/kernels.hpp"

using namespace deform;

namespace {

const kernels::KernelTable* vector_table() { return kernels::avx2(); }

std::vector<double> random_doubles(std::mt19937_64& g, std::size_t n) {
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(g);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(Kernels, ScalarScaleAxpyDifference) {
  std::vector<double> v{1, 2, 3};
  kernels::scalar().scale(v, 2.0);
  EXPECT_EQ(v, (std::vector<double>{2, 4, 6}));
  std::vector<double> out(3), a{1, 1, 1}, b{1, 2, 3};
  kernels::scalar().axpy(out, a, b, 0.5);
  EXPECT_EQ(out, (std::vector<double>{1.5, 2, 2.5}));
  kernels::scalar().scaled_difference(out, b, a, 2.0);
  EXPECT_EQ(out, (std::vector<double>{0, 2, 4}));
}

TEST(Kernels, ScalarCounts) {
  std::vector<std::uint8_t> a{1, 0, 1, 1, 0}, b{1, 1, 0, 1, 0};
  EXPECT_EQ(kernels::scalar().count_nonzero(a), 3u);
  EXPECT_EQ(kernels::scalar().count_both(a, b), 2u);
  EXPECT_EQ(kernels::scalar().count_either(a, b), 4u);
}

TEST(Kernels, VectorMatchesScalarBitForBit) {
  const auto* vec = vector_table();
  if (vec == nullptr) GTEST_SKIP() << "no AVX2 on this machine";
  std::mt19937_64 g(7);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 150u, 1203u}) {
    const auto a = random_doubles(g, n), b = random_doubles(g, n);
    auto s1 = a, s2 = a;
    kernels::scalar().scale(s1, 0.987654321);
    vec->scale(s2, 0.987654321);
    EXPECT_TRUE(bit_equal(s1, s2)) << "scale n=" << n;

    std::vector<double> o1(n), o2(n);
    kernels::scalar().axpy(o1, a, b, 1.0 / 480.0);
    vec->axpy(o2, a, b, 1.0 / 480.0);
    EXPECT_TRUE(bit_equal(o1, o2)) << "axpy n=" << n;

    kernels::scalar().scaled_difference(o1, a, b, 480.0);
    vec->scaled_difference(o2, a, b, 480.0);
    EXPECT_TRUE(bit_equal(o1, o2)) << "scaled_difference n=" << n;
  }
}

TEST(Kernels, VectorDiscRowMatchesScalar) {
  const auto* vec = vector_table();
  if (vec == nullptr) GTEST_SKIP() << "no AVX2 on this machine";
  std::mt19937_64 g(11);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int trial = 0; trial < 200; ++trial) {
    const int width = 37 + trial % 29;
    std::vector<float> d1(width), d2;
    std::vector<std::uint8_t> m1(width), m2;
    for (int c = 0; c < width; ++c) {
      d1[c] = u(g) < 0.5f ? std::numeric_limits<float>::infinity() : 0.45f + 0.1f * u(g);
      m1[c] = d1[c] < 1.0f;
    }
    d2 = d1;
    m2 = m1;
    kernels::DiscRow disc;
    disc.center_col = width * u(g);
    disc.row_offset_sq = 9.0f * u(g);
    disc.radius_sq_px = 36.0f;
    disc.px_to_m_sq = 1.0f / (1500.0f * 1500.0f);
    disc.center_depth = 0.49f + 0.02f * u(g);
    disc.col_begin = 0;
    disc.col_end = width;
    kernels::scalar().disc_row(d1, m1, disc);
    vec->disc_row(d2, m2, disc);
    ASSERT_EQ(std::memcmp(d1.data(), d2.data(), width * sizeof(float)), 0) << "trial " << trial;
    ASSERT_EQ(m1, m2) << "trial " << trial;
  }
}

TEST(Kernels, VectorCountsMatchScalar) {
  const auto* vec = vector_table();
  if (vec == nullptr) GTEST_SKIP() << "no AVX2 on this machine";
  std::mt19937_64 g(3);
  for (std::size_t n : {0u, 1u, 31u, 32u, 33u, 810000u}) {
    std::vector<std::uint8_t> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = g() % 3 == 0;
      b[i] = g() % 2 == 0;
    }
    EXPECT_EQ(kernels::scalar().count_nonzero(a), vec->count_nonzero(a));
    EXPECT_EQ(kernels::scalar().count_both(a, b), vec->count_both(a, b));
    EXPECT_EQ(kernels::scalar().count_either(a, b), vec->count_either(a, b));
  }
}

TEST(Kernels, ActiveTableHasName) { EXPECT_FALSE(kernels::active().name.empty()); }
