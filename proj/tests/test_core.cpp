#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <random>
#include <set>

#include "qmeanlab/core.hpp"
#include "qmeanlab/rng.hpp"

using namespace qmeanlab;

TEST(Core, NormsOfSmallVectors) {
  const Vec x{3.0, -4.0};
  EXPECT_DOUBLE_EQ(norm_l2(x), 5.0);
  EXPECT_DOUBLE_EQ(norm_l1(x), 7.0);
  EXPECT_DOUBLE_EQ(norm_linf(x), 4.0);
  EXPECT_DOUBLE_EQ(norm_lp(x, 2.0), 5.0);
  EXPECT_DOUBLE_EQ(norm_lp(x, kInf), 4.0);
  EXPECT_THROW(norm_lp(x, 0.5), InvalidArgument);
}

TEST(Core, NormChainHoldsOnRandomVectors) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> g;
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = 1 + static_cast<std::size_t>(t % 9);
    Vec x(d);
    for (double& v : x) v = g(gen);
    const double inf = norm_linf(x), two = norm_l2(x), one = norm_l1(x);
    EXPECT_LE(inf, two * (1 + 1e-15));
    EXPECT_LE(two, one * (1 + 1e-15));
    EXPECT_LE(two, std::sqrt(static_cast<double>(d)) * inf * (1 + 1e-15));
  }
}

TEST(Core, PowerOfTwoHelpers) {
  EXPECT_TRUE(is_power_of_two(1));
  EXPECT_TRUE(is_power_of_two(1024));
  EXPECT_FALSE(is_power_of_two(0));
  EXPECT_FALSE(is_power_of_two(12));
  EXPECT_EQ(log2_exact(1), 0u);
  EXPECT_EQ(log2_exact(32), 5u);
  EXPECT_EQ(pow2_ceil(0.3), 1u);
  EXPECT_EQ(pow2_ceil(1.0), 1u);
  EXPECT_EQ(pow2_ceil(5.0), 8u);
  EXPECT_EQ(pow2_ceil(8.0), 8u);
  EXPECT_EQ(pow2_ceil(8.0001), 16u);
  EXPECT_THROW(pow2_ceil(1e30), CapacityError);
}

TEST(Core, IntegerPowerSaturates) {
  EXPECT_EQ(ipow(4, 3, UINT64_MAX), 64u);
  EXPECT_EQ(ipow(7, 0, UINT64_MAX), 1u);
  EXPECT_EQ(ipow(1u << 20, 4, UINT64_MAX), UINT64_MAX);
  EXPECT_EQ(ipow(10, 5, 1000), 1000u);
}

TEST(Core, FormatG17RoundTrips) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 500; ++i) {
    const double x = u(gen) / 7.0;
    EXPECT_EQ(std::strtod(format_g17(x).c_str(), nullptr), x);
  }
  EXPECT_EQ(format_g17(0.5), "0.5");
  EXPECT_EQ(format_g17(kInf), "Infinity");
  EXPECT_EQ(format_g17(std::nan("")), "NaN");
}

TEST(Rng, SameSeedSameStream) {
  Rng a(99), b(99), c(100);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, SubstreamDoesNotAdvanceParent) {
  Rng a(5), b(5);
  Rng s1 = a.substream(3);
  Rng s2 = a.substream(3);
  EXPECT_EQ(s1.next_u64(), s2.next_u64());
  EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(a.substream(1).seed(), a.substream(2).seed());
}

TEST(Rng, UniformStaysInUnitInterval) {
  Rng r(1);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, BelowIsUniformByChiSquare) {
  Rng r(2024);
  const std::uint64_t k = 7;
  const int n = 70000;
  std::map<std::uint64_t, int> hits;
  for (int i = 0; i < n; ++i) {
    const auto v = r.below(k);
    ASSERT_LT(v, k);
    ++hits[v];
  }
  double chi2 = 0.0;
  const double e = static_cast<double>(n) / static_cast<double>(k);
  for (const auto& [v, c] : hits) chi2 += (c - e) * (c - e) / e;
  // 6 degrees of freedom, 99.9% quantile is about 22.5
  EXPECT_LT(chi2, 22.5);
}

TEST(Rng, SplitmixIsInjectiveOnSmallRange) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(splitmix64(i));
  EXPECT_EQ(seen.size(), 10000u);
}
