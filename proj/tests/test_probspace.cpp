#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <random>

#include "qmeanlab/battery.hpp"
#include "qmeanlab/distribution_io.hpp"
#include "qmeanlab/estimators_classical.hpp"
#include "qmeanlab/probspace.hpp"

using namespace qmeanlab;

namespace {

RandomVariable indicator_rv(const std::vector<double>& p) {
  const std::size_t d = p.size();
  std::vector<Vec> rows;
  for (std::size_t i = 0; i < d; ++i) {
    Vec e(d, 0.0);
    e[i] = 1.0;
    rows.push_back(e);
  }
  return RandomVariable(p, rows);
}

RandomVariable scalar_rv(const std::vector<double>& v, const std::vector<double>& p) {
  std::vector<Vec> rows;
  for (double x : v) rows.push_back({x});
  return RandomVariable(p, rows);
}

RandomVariable random_rv(std::mt19937_64& gen, std::size_t K, std::size_t d) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  std::vector<Vec> rows(K, Vec(d));
  std::vector<double> p(K);
  double tot = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    for (double& x : rows[k]) x = u(gen);
    tot += (p[k] = w(gen) + 0.01);
  }
  for (double& x : p) x /= tot;
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < K; ++k) s += p[k];
  p.back() = 1.0 - s;
  return RandomVariable(p, rows);
}

// Brute-force quantile: largest support point x with Pr[X >= x] >= p.
double brute_quantile(const std::vector<double>& v, const std::vector<double>& p, double q) {
  double best = -kInf;
  for (double x : v) {
    double tail = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k)
      if (v[k] >= x) tail += p[k];
    if (tail >= q - 1e-12) best = std::max(best, x);
  }
  return best;
}

}  // namespace

TEST(RandomVariable, RejectsMalformedInput) {
  EXPECT_THROW(RandomVariable({0.5, 0.4}, {{1.0}, {2.0}}), InvalidArgument);
  EXPECT_THROW(RandomVariable({0.5, 0.5}, {{1.0}, {2.0, 3.0}}), InvalidArgument);
  EXPECT_THROW(RandomVariable({1.0}, {{NAN}}), InvalidArgument);
  EXPECT_THROW(RandomVariable({"a", "a"}, {0.5, 0.5}, {{1.0}, {2.0}}), InvalidArgument);
  EXPECT_THROW(RandomVariable({}, {}), InvalidArgument);
}

TEST(Mean, IndicatorUniformIsQuarterVector) {
  const Vec mu = mean(indicator_rv({0.25, 0.25, 0.25, 0.25}));
  for (double v : mu) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Mean, PointMassAndSymmetricPair) {
  const Vec a = mean(RandomVariable::point_mass({0.3, -0.1}));
  EXPECT_DOUBLE_EQ(a[0], 0.3);
  EXPECT_DOUBLE_EQ(a[1], -0.1);
  const Vec b = mean(RandomVariable::uniform({{1.0, 0.0}, {-1.0, 0.0}}));
  EXPECT_DOUBLE_EQ(b[0], 0.0);
  EXPECT_DOUBLE_EQ(b[1], 0.0);
}

TEST(Moments, IndicatorTraceIsOneMinusSumOfSquares) {
  const auto m = moments(indicator_rv({0.25, 0.25, 0.25, 0.25}));
  EXPECT_NEAR(m.cov_trace, 0.75, 1e-15);
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  double s = 0.0;
  for (double x : p) s += x * x;
  EXPECT_NEAR(moments(indicator_rv(p)).cov_trace, 1.0 - s, 1e-15);
}

TEST(Moments, PointMassAndSignVariable) {
  const auto pm = moments(RandomVariable::point_mass({1.0, 2.0}));
  EXPECT_EQ(pm.cov_trace, 0.0);
  EXPECT_EQ(pm.spectral_norm, 0.0);
  const auto s = moments(scalar_rv({1.0, -1.0}, {0.5, 0.5}));
  EXPECT_NEAR(s.cov_trace, 1.0, 1e-15);
  EXPECT_NEAR(s.spectral_norm, 1.0, 1e-12);
}

TEST(Moments, SpectralNormMatchesClosedForm2x2) {
  std::mt19937_64 gen(11);
  for (int t = 0; t < 50; ++t) {
    const RandomVariable rv = random_rv(gen, 6, 2);
    const Vec c = covariance(rv);
    const double tr = c[0] + c[3], det = c[0] * c[3] - c[1] * c[2];
    const double lmax = tr / 2.0 + std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
    const auto m = moments(rv);
    EXPECT_NEAR(m.spectral_norm, lmax, 1e-8 * lmax);
    EXPECT_LE(m.spectral_norm, m.cov_trace * (1 + 1e-12));
  }
}

TEST(Moments, TraceEqualsSecondMomentMinusMeanSquared) {
  std::mt19937_64 gen(12);
  for (int t = 0; t < 50; ++t) {
    const RandomVariable rv = random_rv(gen, 5, 3);
    const auto m = moments(rv);
    EXPECT_NEAR(m.cov_trace, m.exp_norm2_sq - dot(m.mean, m.mean), 1e-12);
    EXPECT_LE(norm_l2(m.mean), m.exp_norm2 + 1e-12);
  }
}

TEST(Clamp, VectorBoundaries) {
  EXPECT_EQ(clamp_vec(Vec{3, 4}, 0, 5), (Vec{3, 4}));
  EXPECT_EQ(clamp_vec(Vec{3, 4}, 5, 10), (Vec{0, 0}));
  EXPECT_EQ(clamp_vec(Vec{0, 0}, 0, 1), (Vec{0, 0}));
  EXPECT_THROW(clamp_vec(Vec{1}, 2, 1), InvalidArgument);
  EXPECT_THROW(clamp_vec(Vec{1}, -1, 1), InvalidArgument);
}

TEST(Clamp, ScalarBoundaries) {
  EXPECT_EQ(clamp_scalar(-0.7, 0, 1), -0.7);
  EXPECT_EQ(clamp_scalar(1.2, 0, 1), 0.0);
  EXPECT_EQ(clamp_scalar(0.5, 0.5, 1), 0.0);
  EXPECT_EQ(clamp_scalar(kInf, 0, kInf), kInf);
}

TEST(Clamp, IsIdempotentAndNormBounded) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 500; ++t) {
    Vec x(3);
    for (double& v : x) v = u(gen);
    double a = std::abs(u(gen)), b = a + std::abs(u(gen)) + 1e-3;
    const Vec once = clamp_vec(x, a, b);
    EXPECT_EQ(clamp_vec(once, a, b), once);
    const double r = norm_l2(once);
    EXPECT_TRUE(r == 0.0 || (a < r && r <= b));
  }
}

TEST(Clamp, DisjointSlicesTelescope) {
  std::mt19937_64 gen(22);
  for (int t = 0; t < 50; ++t) {
    const RandomVariable rv = random_rv(gen, 7, 2);
    const std::vector<double> cuts{0.0, 0.3, 0.9, 1.5, 2.2};
    Vec total(2, 0.0);
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
      const Vec m = mean(clamp_rv(rv, cuts[j], cuts[j + 1]));
      for (int i = 0; i < 2; ++i) total[i] += m[i];
    }
    const Vec tail = mean(clamp_rv(rv, cuts.back(), kInf));
    const Vec full = mean(rv);
    // The zero vector is excluded by the strict lower bound but contributes nothing.
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(total[i] + tail[i], full[i], 1e-12);
  }
}

TEST(Quantile, UniformOnOneTwoThree) {
  const RandomVariable rv = scalar_rv({1, 2, 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  EXPECT_EQ(exact_quantile(rv, 0.5), 2.0);
  EXPECT_EQ(exact_quantile(rv, 1.0 / 3), 3.0);
  EXPECT_EQ(exact_quantile(rv, 1.0), 1.0);
  EXPECT_EQ(exact_quantile(scalar_rv({7}, {1.0}), 0.3), 7.0);
  EXPECT_EQ(exact_quantile(scalar_rv({7}, {1.0}), 1.0), 7.0);
  EXPECT_THROW(exact_quantile(RandomVariable::point_mass({1, 2}), 0.5), InvalidArgument);
}

TEST(Quantile, MatchesBruteForceAndIsMonotone) {
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<int> val(0, 9);
  std::uniform_real_distribution<double> w(0.05, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(6), p(6);
    double tot = 0.0;
    for (int k = 0; k < 6; ++k) {
      v[k] = val(gen);
      tot += (p[k] = w(gen));
    }
    for (double& x : p) x /= tot;
    const RandomVariable rv = scalar_rv(v, p);
    double prev = kInf;
    for (double q = 0.02; q <= 1.0; q += 0.02) {
      const double Q = exact_quantile(rv, q);
      EXPECT_EQ(Q, brute_quantile(v, p, q)) << "q=" << q;
      EXPECT_LE(Q, prev);
      EXPECT_GE(tail_probability(rv, Q), q - 1e-12);
      prev = Q;
    }
  }
}

TEST(TruncateNormalized, ScalesAndClamps) {
  const auto a = truncate_normalized(RandomVariable::point_mass({3, 4}), 0, 5);
  EXPECT_DOUBLE_EQ(a.value(0)[0], 0.6);
  EXPECT_DOUBLE_EQ(a.value(0)[1], 0.8);
  const auto b = truncate_normalized(RandomVariable::point_mass({3, 4}), 5, 10);
  EXPECT_EQ(norm_l2(b.value(0)), 0.0);
  const auto c = truncate_normalized(RandomVariable::uniform({{1, 0}, {3, 0}}), 2, 4);
  EXPECT_EQ(c.value(0)[0], 0.0);
  EXPECT_DOUBLE_EQ(c.value(1)[0], 0.75);
  EXPECT_DOUBLE_EQ(c.prob(1), 0.5);
  EXPECT_THROW(truncate_normalized(RandomVariable::point_mass({1}), 0, kInf), InvalidArgument);
}

TEST(TruncateNormalized, StaysInUnitBall) {
  std::mt19937_64 gen(41);
  for (int t = 0; t < 50; ++t) {
    const auto rv = truncate_normalized(random_rv(gen, 8, 3), 0.5, 1.7);
    EXPECT_LE(max_norm(rv), 1.0 + 1e-15);
  }
}

TEST(NormRv, Examples) {
  EXPECT_DOUBLE_EQ(norm_rv(RandomVariable::point_mass({3, 4})).value(0)[0], 5.0);
  const auto u = norm_rv(RandomVariable::uniform({{1, 0}, {0, -1}}));
  EXPECT_EQ(u.size(), 2u);
  EXPECT_EQ(u.value(0)[0], 1.0);
  EXPECT_EQ(u.value(1)[0], 1.0);
  EXPECT_EQ(norm_rv(RandomVariable::point_mass({0, 0})).value(0)[0], 0.0);
}

TEST(Shift, MovesMeanByEta) {
  const auto s = shift(RandomVariable::point_mass({1, 1}), Vec{1, 1});
  EXPECT_EQ(mean(s), (Vec{0, 0}));
  std::mt19937_64 gen(51);
  for (int t = 0; t < 20; ++t) {
    const auto rv = random_rv(gen, 4, 3);
    const Vec eta{0.3, -1.0, 2.5};
    const Vec a = mean(shift(rv, eta)), b = mean(rv);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i] - eta[i], 1e-14);
    EXPECT_NEAR(moments(shift(rv, eta)).cov_trace, moments(rv).cov_trace, 1e-12);
  }
  EXPECT_THROW(shift(s, Vec{1}), InvalidArgument);
}

TEST(CommutingObservables, Examples) {
  const std::vector<Complex> basis{1.0, 0.0};
  const auto a = from_commuting_observables(basis, {{2.0, 5.0}});
  EXPECT_DOUBLE_EQ(mean(a)[0], 2.0);
  const double r = 1.0 / std::sqrt(2.0);
  const std::vector<Complex> eq{r, Complex(0, r)};
  EXPECT_NEAR(mean(from_commuting_observables(eq, {{1.0, -1.0}}))[0], 0.0, 1e-15);
  const std::vector<Complex> w{std::sqrt(0.8), std::sqrt(0.2)};
  EXPECT_NEAR(mean(from_commuting_observables(w, {{1.0, 0.0}}))[0], 0.8, 1e-15);
  const std::vector<Complex> bad{1.0, 1.0};
  EXPECT_THROW(from_commuting_observables(bad, {{1.0, 0.0}}), InvalidArgument);
}

TEST(CommutingObservables, PhasesOfAmplitudesDoNotMatter) {
  std::mt19937_64 gen(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<Complex> a(5), b(5);
    double tot = 0.0;
    for (auto& x : a) tot += std::norm(x = u(gen));
    for (std::size_t j = 0; j < 5; ++j) {
      a[j] /= std::sqrt(tot);
      b[j] = a[j] * std::polar(1.0, 2.0 * kPi * u(gen));
    }
    std::vector<Vec> ev(2, Vec(5));
    for (auto& row : ev)
      for (double& x : row) x = u(gen) - 0.5;
    const Vec ma = mean(from_commuting_observables(a, ev));
    const Vec mb = mean(from_commuting_observables(b, ev));
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(ma[i], mb[i], 1e-14);
  }
}

TEST(DistributionSpec, ParsesAndRejects) {
  const auto rv = parse_distribution_spec(R"({"d": 2, "prob": [0.5, 0.5], "values": [[1,0],[0,1]]})");
  EXPECT_EQ(rv.dim(), 2u);
  EXPECT_EQ(rv.size(), 2u);
  try {
    parse_distribution_spec(R"({"d": 1, "prob": [0.5, 0.4], "values": [[1],[0]]})");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("prob"), std::string::npos);
  }
  try {
    parse_distribution_spec(R"({"d": 2, "prob": [0.5, 0.5], "values": [[1,0],[0]]})");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
  EXPECT_THROW(parse_distribution_spec("{not json"), InvalidArgument);
}

TEST(DistributionSpec, SerializeRoundTrip) {
  std::mt19937_64 gen(71);
  for (int t = 0; t < 20; ++t) {
    const auto rv = random_rv(gen, 5, 3);
    const auto back = parse_distribution_spec(serialize_distribution_spec(rv));
    ASSERT_EQ(back.size(), rv.size());
    EXPECT_EQ(back.labels(), rv.labels());
    for (std::size_t k = 0; k < rv.size(); ++k) {
      EXPECT_EQ(back.prob(k), rv.prob(k));
      for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(back.value(k)[j], rv.value(k)[j]);
    }
  }
}

TEST(DistributionSpec, SampleConfigParses) {
  const auto rv = parse_distribution_spec(R"({"d": 2, "omega": ["near", "far"], "prob": [0.75, 0.25],
                                              "values": [[0.1, -0.05], [0.6, 0.7]]})");
  EXPECT_EQ(rv.labels()[1], "far");
  EXPECT_LE(max_norm(rv), 1.0);
}

TEST(Battery, InstancesAreSeededAndBounded) {
  for (auto kind : {BatteryKind::BallPairs, BatteryKind::Indicator, BatteryKind::HeavyLight}) {
    EXPECT_EQ(battery_from_name(battery_name(kind)), kind);
    for (std::size_t d : {1u, 2u, 5u}) {
      const auto a = battery_instance(kind, d, 7);
      const auto b = battery_instance(kind, d, 7);
      EXPECT_EQ(serialize_distribution_spec(a), serialize_distribution_spec(b));
      EXPECT_LE(max_norm(a), 1.0 + 1e-12);
      const auto box = battery_box_instance(kind, d, 7);
      for (std::size_t k = 0; k < box.size(); ++k)
        for (double x : box.value(k)) EXPECT_LE(std::abs(x), 0.25 + 1e-15);
    }
  }
  EXPECT_THROW(battery_from_name("nope"), InvalidArgument);
}

TEST(Sampling, FrequenciesMatchProbabilities) {
  const RandomVariable rv = scalar_rv({0, 1, 2, 3}, {0.1, 0.2, 0.3, 0.4});
  Rng rng(8);
  const std::size_t n = 100000;
  const auto batch = sample(rv, n, rng);
  std::map<double, int> hits;
  for (const Vec& x : batch.draws) ++hits[x[0]];
  for (std::size_t k = 0; k < 4; ++k) {
    const double p = rv.prob(k);
    const double sd = std::sqrt(p * (1 - p) / static_cast<double>(n));
    EXPECT_NEAR(hits[static_cast<double>(k)] / static_cast<double>(n), p, 3.0 * sd + 1e-12);
  }
}
