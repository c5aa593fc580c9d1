#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "qmeanlab/fft.hpp"
#include "qmeanlab/gridqft.hpp"

using namespace qmeanlab;

namespace {

double max_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

std::vector<Complex> random_amplitudes(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  std::vector<Complex> v(n);
  double s = 0.0;
  for (auto& x : v) s += std::norm(x = Complex(g(gen), g(gen)));
  for (auto& x : v) x /= std::sqrt(s);
  return v;
}

// Plain O(n^2) DFT with kernel e^{sign 2πi jk/n}.
std::vector<Complex> naive_dft(const std::vector<Complex>& x, int sign) {
  const std::size_t n = x.size();
  std::vector<Complex> y(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j)
      y[k] += x[j] * std::polar(1.0, sign * 2.0 * kPi * static_cast<double>(j * k % n) / static_cast<double>(n));
  return y;
}

}  // namespace

TEST(Grid, AxisPoints) {
  EXPECT_EQ(axis_points(2), (Vec{-0.25, 0.25}));
  EXPECT_EQ(axis_points(4), (Vec{-0.375, -0.125, 0.125, 0.375}));
  const auto pts = grid_points(GridSpec(2, 2));
  ASSERT_EQ(pts.size(), 4u);
  for (const Vec& p : pts)
    for (double x : p) EXPECT_EQ(std::abs(x), 0.25);
  for (std::uint64_t m : {1u, 8u, 1024u})
    for (std::uint64_t a = 0; a < m; ++a) EXPECT_EQ(axis_index(m, axis_point(m, a)), a);
}

TEST(Grid, SpecValidation) {
  EXPECT_THROW(GridSpec(3, 1), InvalidArgument);
  EXPECT_THROW(GridSpec(4, 0), InvalidArgument);
  EXPECT_THROW(GridSpec(kMaxAxisPoints * 2, 1), CapacityError);
  EXPECT_EQ(GridSpec(1u << 30, 4).size(), UINT64_MAX);
}

TEST(Grid, FlattenRoundTrip) {
  const GridSpec spec(4, 3);
  for (std::uint64_t f = 0; f < spec.size(); ++f) EXPECT_EQ(flatten(spec, unflatten(spec, f)), f);
}

TEST(Grid, LatticeCapIsAHardError) {
  const GridSpec spec(1u << 12, 2);
  EXPECT_THROW(uniform_superposition(spec).to_full(), CapacityError);
}

TEST(GridState, UniformSuperposition) {
  const auto s = uniform_superposition(GridSpec(2, 1)).materialize();
  EXPECT_NEAR(s[0].real(), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(s[1].real(), 1.0 / std::sqrt(2.0), 1e-15);
  for (const Complex& a : uniform_superposition(GridSpec(4, 2)).materialize()) EXPECT_NEAR(std::abs(a - 0.25), 0.0, 1e-15);
}

TEST(PhaseFunction, ZeroAndConstantPhase) {
  const auto s = uniform_superposition(GridSpec(4, 2));
  EXPECT_EQ(apply_phase_function(s, PhaseFunction::zero()).materialize(), s.materialize());
  const auto c = apply_phase_function(s, PhaseFunction::general([](std::span<const double>) { return 1.3; }, "c"));
  const auto pa = measurement_distribution(c).joint_table();
  const auto pb = measurement_distribution(s).joint_table();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_NEAR(pa[i], pb[i], 1e-15);
}

TEST(PhaseFunction, SignFlipOnTwoPoints) {
  const auto s = uniform_superposition(GridSpec(2, 1));
  const auto f = PhaseFunction::general([](std::span<const double> u) { return u[0] > 0 ? kPi : 0.0; }, "flip");
  const auto out = apply_phase_function(s, f).materialize();
  EXPECT_NEAR(std::abs(out[0] - 1.0 / std::sqrt(2.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(out[1] + 1.0 / std::sqrt(2.0)), 0.0, 1e-15);
}

TEST(PhaseFunction, PreservesNorm) {
  std::mt19937_64 gen(5);
  const GridSpec spec(8, 3);
  const auto s = GridState::full(spec, random_amplitudes(spec.size(), gen));
  const auto f = PhaseFunction::general([](std::span<const double> u) { return 37.0 * u[0] * u[1] - u[2]; }, "g");
  EXPECT_NEAR(apply_phase_function(s, f).norm(), 1.0, 1e-13);
}

TEST(PhaseFunction, SeparableMatchesEvaluator) {
  const auto f = PhaseFunction::linear({1.5, -2.0, 0.25}, "lin");
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int t = 0; t < 100; ++t) {
    Vec x{u(gen), u(gen), u(gen)};
    double s = 0.0;
    for (std::size_t j = 0; j < 3; ++j) s += f.axis_term(j, x[j]);
    EXPECT_NEAR(s, f(x), 1e-12);
  }
  // product and full evaluation paths agree
  const GridSpec spec(8, 3);
  const auto prod = apply_phase_function(uniform_superposition(spec), f).materialize();
  const auto full = apply_phase_function(uniform_superposition(spec).to_full(), f).materialize();
  EXPECT_LT(max_diff(prod, full), 1e-14);
}

TEST(Fft, MatchesNaiveDft) {
  std::mt19937_64 gen(9);
  for (std::size_t n : {1u, 2u, 8u, 64u, 256u}) {
    const auto x = random_amplitudes(n, gen);
    for (int sign : {+1, -1}) {
      auto y = x;
      Radix2Fft(n).transform(y, sign);
      EXPECT_LT(max_diff(y, naive_dft(x, sign)), 1e-12) << "n=" << n;
    }
  }
  EXPECT_THROW(Radix2Fft(6), InvalidArgument);
}

TEST(Qft, TwoPointAxisMatrix) {
  const auto q = dense_axis_matrix(2, +1);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_LT(std::abs(q[0] - std::polar(r, kPi / 4)), 1e-15);
  EXPECT_LT(std::abs(q[1] - std::polar(r, -kPi / 4)), 1e-15);
  EXPECT_LT(std::abs(q[2] - std::polar(r, -kPi / 4)), 1e-15);
  EXPECT_LT(std::abs(q[3] - std::polar(r, kPi / 4)), 1e-15);
  const Complex off = q[0] * std::conj(q[2]) + q[1] * std::conj(q[3]);
  const Complex diag = q[0] * std::conj(q[0]) + q[1] * std::conj(q[1]);
  EXPECT_LT(std::abs(off), 1e-15);
  EXPECT_NEAR(diag.real(), 1.0, 1e-15);
}

TEST(Qft, DenseAxisMatrixIsUnitary) {
  for (std::uint64_t m = 1; m <= 64; m *= 2) {
    const auto q = dense_axis_matrix(m);
    double err = 0.0;
    for (std::uint64_t i = 0; i < m; ++i)
      for (std::uint64_t j = 0; j < m; ++j) {
        Complex s(0.0);
        for (std::uint64_t k = 0; k < m; ++k) s += std::conj(q[k * m + i]) * q[k * m + j];
        err = std::max(err, std::abs(s - Complex(i == j ? 1.0 : 0.0)));
      }
    EXPECT_LE(err, 1e-10) << "m=" << m;
  }
}

TEST(Qft, FastPathMatchesDenseReference) {
  std::mt19937_64 gen(10);
  for (auto [m, d] : std::vector<std::pair<std::uint64_t, std::size_t>>{{64, 1}, {16, 2}, {8, 3}, {4, 5}, {2, 12}}) {
    const GridSpec spec(m, d);
    const auto s = GridState::full(spec, random_amplitudes(spec.size(), gen));
    for (int dir : {+1, -1}) {
      const auto fast = (dir > 0 ? qft(s) : inverse_qft(s)).materialize();
      EXPECT_LT(max_diff(fast, dense_qft(s, dir)), 1e-10) << "m=" << m << " d=" << d;
    }
    EXPECT_LT(max_diff(inverse_qft(qft(s)).materialize(), s.materialize()), 1e-12);
  }
}

TEST(Qft, ProductFormEqualsTensorProduct) {
  std::mt19937_64 gen(12);
  for (auto [m, d] : std::vector<std::pair<std::uint64_t, std::size_t>>{{8, 4}, {64, 2}, {4, 6}}) {
    const GridSpec spec(m, d);
    std::vector<std::vector<Complex>> axes;
    for (std::size_t j = 0; j < d; ++j) axes.push_back(random_amplitudes(m, gen));
    const auto prod = GridState::product(spec, axes);
    ASSERT_TRUE(qft(prod).is_product());
    EXPECT_LT(max_diff(qft(prod).materialize(), qft(prod.to_full()).materialize()), 1e-12);
    if (spec.size() <= 4096) {
      EXPECT_LT(max_diff(qft(prod).materialize(), dense_qft(prod)), 1e-10);
    }
  }
}

TEST(Measurement, UniformAndBasis) {
  const GridSpec spec(4, 2);
  for (double p : measurement_distribution(uniform_superposition(spec)).joint_table()) EXPECT_NEAR(p, 1.0 / 16, 1e-15);
  const std::vector<std::uint64_t> idx{1, 3};
  const auto b = GridState::basis(spec, idx);
  EXPECT_EQ(measurement_distribution(b).probability(idx), 1.0);
  Rng rng(4);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(measure(b, rng), point_of(spec, idx));
}

TEST(Measurement, SeedDeterminism) {
  std::mt19937_64 gen(13);
  const GridSpec spec(8, 2);
  const auto s = GridState::full(spec, random_amplitudes(spec.size(), gen));
  Rng a(77), b(77);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(measure(s, a), measure(s, b));
}

TEST(Measurement, FrequenciesPassChiSquare) {
  std::mt19937_64 gen(14);
  const GridSpec spec(4, 2);
  const auto s = GridState::full(spec, random_amplitudes(spec.size(), gen));
  const auto dist = measurement_distribution(s);
  const GridSampler sampler(dist);
  Rng rng(15);
  const int n = 100000;
  std::vector<int> hits(spec.size(), 0);
  for (int i = 0; i < n; ++i) ++hits[flatten(spec, sampler.sample_index(rng))];
  double chi2 = 0.0;
  for (std::uint64_t f = 0; f < spec.size(); ++f) {
    const double e = n * dist.joint[f];
    chi2 += (hits[f] - e) * (hits[f] - e) / e;
  }
  // 15 degrees of freedom, 99.9% quantile is about 37.7
  EXPECT_LT(chi2, 37.7);
}

TEST(PhaseEstimation, ConcentratesWithinFourCells) {
  std::mt19937_64 gen(16);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::uint64_t m : {8u, 64u, 1024u}) {
    for (int t = 0; t < 20; ++t) {
      const double am = u(gen) * 2.0 * kPi / 3.0;  // α·μ
      const GridSpec spec(m, 1);
      const auto f = PhaseFunction::linear({static_cast<double>(m) * am}, "pe");
      const auto dist = measurement_distribution(inverse_qft(apply_phase_function(uniform_superposition(spec), f)));
      double mass = 0.0;
      for (std::uint64_t b = 0; b < m; ++b)
        if (std::abs(axis_point(m, b) - am / (2.0 * kPi)) <= 4.0 / static_cast<double>(m)) mass += dist.marginals[0][b];
      EXPECT_GE(mass, 5.0 / 6.0) << "m=" << m << " am=" << am;
    }
  }
}

TEST(LinearPhaseAxis, ClosedFormMatchesSimulation) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-300.0, 300.0);
  for (std::uint64_t m : {2u, 16u, 128u}) {
    for (int t = 0; t < 10; ++t) {
      const double slope = u(gen);
      const auto dist = measurement_distribution(
          inverse_qft(apply_phase_function(uniform_superposition(GridSpec(m, 1)), PhaseFunction::linear({slope}, "l"))));
      const Vec closed = LinearPhaseAxis(m, slope).marginal();
      double tot = 0.0;
      for (std::uint64_t b = 0; b < m; ++b) {
        EXPECT_NEAR(closed[b], dist.marginals[0][b], 1e-10);
        tot += closed[b];
      }
      EXPECT_NEAR(tot, 1.0, 1e-10);
    }
  }
}

TEST(LinearPhaseAxis, SamplerFollowsMarginal) {
  const std::uint64_t m = 32;
  const LinearPhaseAxis ax(m, 23.7);
  const Vec p = ax.marginal();
  Rng rng(18);
  const int n = 100000;
  std::vector<int> hits(m, 0);
  for (int i = 0; i < n; ++i) ++hits[ax.sample(rng)];
  for (std::uint64_t b = 0; b < m; ++b) {
    const double sd = std::sqrt(p[b] * (1 - p[b]) / n);
    EXPECT_NEAR(hits[b] / static_cast<double>(n), p[b], 4.0 * sd + 1e-4);
  }
}

TEST(LinearPhaseAxis, IntegerPhaseIsDeterministic) {
  const std::uint64_t m = 16;
  const LinearPhaseAxis ax(m, 2.0 * kPi * 3.5);
  Rng rng(19);
  const auto b0 = ax.sample(rng);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(ax.sample(rng), b0);
}

TEST(DebugDump, RowsWithSeventeenDigits) {
  const auto s = uniform_superposition(GridSpec(2, 1));
  const std::string dump = debug_dump(s);
  EXPECT_EQ(dump, "(0) 0.70710678118654746 0\n(1) 0.70710678118654746 0\n");
}
