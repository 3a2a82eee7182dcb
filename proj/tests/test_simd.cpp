#include <cstring>
#include <vector>

#include <gtest/gtest.h>

#include "con/rng.hpp"
#include "con/simd.hpp"

namespace {

namespace simd = con::simd;

std::vector<double> random_vec(con::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = 2.0 * con::uniform01(rng) - 1.0;
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

class SimdParity : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!simd::isa_available(simd::Isa::kAvx2)) GTEST_SKIP() << "AVX2 not available";
  }
};

TEST_F(SimdParity, DotIsBitExact) {
  con::Rng rng(31);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 63u, 64u, 65u, 1000u}) {
    const auto a = random_vec(rng, n);
    const auto b = random_vec(rng, n);
    const double s = simd::scalar::dot(a.data(), b.data(), n);
    const double v = simd::avx2::dot(a.data(), b.data(), n);
    EXPECT_EQ(std::memcmp(&s, &v, sizeof s), 0) << n;
  }
}

TEST_F(SimdParity, AxpyScaleFoldAreBitExact) {
  con::Rng rng(32);
  for (std::size_t n : {1u, 2u, 5u, 9u, 17u, 256u, 1001u}) {
    const auto x = random_vec(rng, n);
    auto y1 = random_vec(rng, n);
    auto y2 = y1;
    simd::scalar::axpy(0.37, x.data(), y1.data(), n);
    simd::avx2::axpy(0.37, x.data(), y2.data(), n);
    EXPECT_TRUE(bit_equal(y1, y2)) << n;

    simd::scalar::scale(-1.7, y1.data(), n);
    simd::avx2::scale(-1.7, y2.data(), n);
    EXPECT_TRUE(bit_equal(y1, y2)) << n;

    auto p1 = random_vec(rng, n), s1 = random_vec(rng, n);
    auto p2 = p1, s2 = s1;
    const auto sp = random_vec(rng, n), ss = random_vec(rng, n);
    simd::scalar::max_sum_fold(p1.data(), s1.data(), sp.data(), ss.data(), n);
    simd::avx2::max_sum_fold(p2.data(), s2.data(), sp.data(), ss.data(), n);
    EXPECT_TRUE(bit_equal(p1, p2)) << n;
    EXPECT_TRUE(bit_equal(s1, s2)) << n;
  }
}

TEST(SimdDispatch, ForcingIsaChangesNothingObservable) {
  con::Rng rng(33);
  const auto a = random_vec(rng, 129);
  const auto b = random_vec(rng, 129);
  const simd::Isa before = simd::active_isa();
  simd::set_active_isa(simd::Isa::kScalar);
  EXPECT_EQ(simd::active_isa(), simd::Isa::kScalar);
  const double s = simd::dot(a, b);
  if (simd::isa_available(simd::Isa::kAvx2)) {
    simd::set_active_isa(simd::Isa::kAvx2);
    EXPECT_EQ(simd::dot(a, b), s);
  }
  simd::set_active_isa(before);
}

TEST(SimdDispatch, SizeMismatchThrows) {
  std::vector<double> a(3), b(4);
  EXPECT_THROW(simd::dot(a, b), std::invalid_argument);
  EXPECT_THROW(simd::axpy(1.0, a, b), std::invalid_argument);
}

TEST(SimdDispatch, FoldSemantics) {
  std::vector<double> p{0.2, 0.9}, s{1.0, 2.0};
  const std::vector<double> sp{0.5, 0.1}, ss{0.25, 0.5};
  simd::max_sum_fold(p, s, sp, ss);
  EXPECT_EQ(p, (std::vector<double>{0.5, 0.9}));
  EXPECT_EQ(s, (std::vector<double>{1.25, 2.5}));
}

}  // namespace
