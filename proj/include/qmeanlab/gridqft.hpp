#pragma once

// The grid register H_G: m^d centered lattice points in (-1/2, 1/2)^d,
// states in product or full form, the centered Fourier transform over G,
// and Born-rule measurement.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qmeanlab/core.hpp"
#include "qmeanlab/fft.hpp"
#include "qmeanlab/rng.hpp"

namespace qmeanlab {

inline constexpr std::uint64_t kDefaultLatticeCap = std::uint64_t{1} << 22;
inline constexpr std::uint64_t kMaxAxisPoints = std::uint64_t{1} << 40;
inline constexpr std::uint64_t kFftAxisCap = std::uint64_t{1} << 22;

/// Full-state amplitude cap; QMEANLAB_LATTICE_CAP overrides the default.
inline std::uint64_t lattice_cap() {
  if (const char* env = std::getenv("QMEANLAB_LATTICE_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return kDefaultLatticeCap;
}

struct GridSpec {
  std::uint64_t m = 1;
  std::size_t d = 1;

  GridSpec() = default;
  GridSpec(std::uint64_t m_, std::size_t d_) : m(m_), d(d_) {
    require(is_power_of_two(m), "GridSpec: m = " + std::to_string(m) + " is not a power of two");
    require(d >= 1, "GridSpec: d must be positive");
    if (m > kMaxAxisPoints)
      throw CapacityError("GridSpec: m = " + std::to_string(m) + " exceeds the per-axis limit " +
                          std::to_string(kMaxAxisPoints));
  }

  /// m^d, saturating at UINT64_MAX.
  std::uint64_t size() const { return ipow(m, d, UINT64_MAX); }

  bool operator==(const GridSpec&) const = default;
};

inline double axis_point(std::uint64_t m, std::uint64_t a) {
  return (static_cast<double>(a) + 0.5) / static_cast<double>(m) - 0.5;
}

inline Vec axis_points(std::uint64_t m) {
  Vec pts(m);
  for (std::uint64_t a = 0; a < m; ++a) pts[a] = axis_point(m, a);
  return pts;
}

/// Row-major multi-index (axis 0 most significant).
inline std::vector<std::uint64_t> unflatten(const GridSpec& spec, std::uint64_t flat) {
  std::vector<std::uint64_t> idx(spec.d);
  for (std::size_t j = spec.d; j-- > 0;) {
    idx[j] = flat % spec.m;
    flat /= spec.m;
  }
  return idx;
}

inline std::uint64_t flatten(const GridSpec& spec, std::span<const std::uint64_t> idx) {
  std::uint64_t flat = 0;
  for (std::size_t j = 0; j < spec.d; ++j) flat = flat * spec.m + idx[j];
  return flat;
}

inline Vec point_of(const GridSpec& spec, std::span<const std::uint64_t> idx) {
  Vec u(spec.d);
  for (std::size_t j = 0; j < spec.d; ++j) u[j] = axis_point(spec.m, idx[j]);
  return u;
}

/// Nearest-lattice index of a coordinate lying on the axis.
inline std::uint64_t axis_index(std::uint64_t m, double u) {
  const double a = std::round((u + 0.5) * static_cast<double>(m) - 0.5);
  return static_cast<std::uint64_t>(std::clamp(a, 0.0, static_cast<double>(m - 1)));
}

inline void check_full_capacity(const GridSpec& spec, const char* what) {
  const std::uint64_t cap = lattice_cap();
  const std::uint64_t n = spec.size();
  if (n > cap)
    throw CapacityError(std::string(what) + ": m^d = " + std::to_string(spec.m) + "^" + std::to_string(spec.d) +
                        (n == UINT64_MAX ? std::string(" (overflow)") : " = " + std::to_string(n)) +
                        " exceeds lattice cap " + std::to_string(cap));
}

/// Every grid point, row-major. Subject to the lattice cap.
inline std::vector<Vec> grid_points(const GridSpec& spec) {
  check_full_capacity(spec, "grid_points");
  std::vector<Vec> pts;
  pts.reserve(spec.size());
  for (std::uint64_t f = 0; f < spec.size(); ++f) pts.push_back(point_of(spec, unflatten(spec, f)));
  return pts;
}

// θ_u over the grid. When `separable` is set, axis_term(j, u_j) gives
// f_j with θ_u = Σ_j f_j(u_j); nonempty `slopes` further means f_j(x) = slopes[j]·x.
struct PhaseFunction {
  std::function<double(std::span<const double>)> evaluator;
  std::function<double(std::size_t, double)> axis_term;
  bool separable = false;
  Vec slopes;
  std::string description;

  bool is_linear() const { return separable && !slopes.empty(); }

  double operator()(std::span<const double> u) const { return evaluator(u); }

  static PhaseFunction zero() {
    PhaseFunction f;
    f.evaluator = [](std::span<const double>) { return 0.0; };
    f.axis_term = [](std::size_t, double) { return 0.0; };
    f.separable = true;
    f.description = "zero";
    return f;
  }

  static PhaseFunction from_axis_terms(std::function<double(std::size_t, double)> terms, std::string desc) {
    PhaseFunction f;
    f.axis_term = std::move(terms);
    f.evaluator = [t = f.axis_term](std::span<const double> u) {
      double s = 0.0;
      for (std::size_t j = 0; j < u.size(); ++j) s += t(j, u[j]);
      return s;
    };
    f.separable = true;
    f.description = std::move(desc);
    return f;
  }

  static PhaseFunction linear(Vec slopes, std::string desc) {
    PhaseFunction f = from_axis_terms([s = slopes](std::size_t j, double x) { return s[j] * x; }, std::move(desc));
    f.slopes = std::move(slopes);
    return f;
  }

  static PhaseFunction general(std::function<double(std::span<const double>)> eval, std::string desc) {
    PhaseFunction f;
    f.evaluator = std::move(eval);
    f.separable = false;
    f.description = std::move(desc);
    return f;
  }
};

class GridState {
 public:
  /// Product form from per-axis vectors (each of length m).
  static GridState product(GridSpec spec, std::vector<std::vector<Complex>> axes) {
    require(axes.size() == spec.d, "GridState: need one axis vector per dimension");
    for (const auto& a : axes) require(a.size() == spec.m, "GridState: axis vector length must equal m");
    GridState s;
    s.spec_ = spec;
    s.axes_ = std::move(axes);
    s.product_ = true;
    return s;
  }

  static GridState full(GridSpec spec, std::vector<Complex> amps) {
    check_full_capacity(spec, "GridState");
    require(amps.size() == spec.size(), "GridState: amplitude vector length must equal m^d");
    GridState s;
    s.spec_ = spec;
    s.amps_ = std::move(amps);
    s.product_ = false;
    return s;
  }

  static GridState basis(GridSpec spec, std::span<const std::uint64_t> idx) {
    std::vector<std::vector<Complex>> axes(spec.d, std::vector<Complex>(spec.m));
    for (std::size_t j = 0; j < spec.d; ++j) axes[j][idx[j]] = 1.0;
    return product(spec, std::move(axes));
  }

  const GridSpec& spec() const { return spec_; }
  bool is_product() const { return product_; }
  const std::vector<std::vector<Complex>>& axes() const { return axes_; }
  std::vector<std::vector<Complex>>& axes() { return axes_; }
  const std::vector<Complex>& amplitudes() const { return amps_; }
  std::vector<Complex>& amplitudes() { return amps_; }

  /// Full amplitude vector (Kronecker product of the axes in product form).
  std::vector<Complex> materialize() const {
    if (!product_) return amps_;
    check_full_capacity(spec_, "materialize");
    std::vector<Complex> out{Complex(1.0)};
    for (std::size_t j = 0; j < spec_.d; ++j) {
      std::vector<Complex> next;
      next.reserve(out.size() * spec_.m);
      for (const Complex& a : out)
        for (const Complex& b : axes_[j]) next.push_back(a * b);
      out = std::move(next);
    }
    return out;
  }

  GridState to_full() const { return product_ ? full(spec_, materialize()) : *this; }

  Complex amplitude(std::span<const std::uint64_t> idx) const {
    if (!product_) return amps_[flatten(spec_, idx)];
    Complex a(1.0);
    for (std::size_t j = 0; j < spec_.d; ++j) a *= axes_[j][idx[j]];
    return a;
  }

  double norm() const {
    if (!product_) return std::sqrt(sum_norm(amps_));
    double n = 1.0;
    for (const auto& ax : axes_) n *= sum_norm(ax);
    return std::sqrt(n);
  }

 private:
  static double sum_norm(const std::vector<Complex>& v) {
    double s = 0.0;
    for (const Complex& c : v) s += std::norm(c);
    return s;
  }

  GridSpec spec_;
  bool product_ = true;
  std::vector<std::vector<Complex>> axes_;
  std::vector<Complex> amps_;
};

inline GridState uniform_superposition(const GridSpec& spec) {
  const double a = 1.0 / std::sqrt(static_cast<double>(spec.m));
  return GridState::product(spec, std::vector<std::vector<Complex>>(spec.d, std::vector<Complex>(spec.m, Complex(a))));
}

/// |u> -> e^{iθ_u}|u>. A non-separable phase on a product state materializes it.
inline GridState apply_phase_function(const GridState& state, const PhaseFunction& theta) {
  const GridSpec& spec = state.spec();
  if (state.is_product() && theta.separable) {
    GridState out = state;
    for (std::size_t j = 0; j < spec.d; ++j)
      for (std::uint64_t a = 0; a < spec.m; ++a)
        out.axes()[j][a] *= std::polar(1.0, theta.axis_term(j, axis_point(spec.m, a)));
    return out;
  }
  GridState out = state.to_full();
  auto& amps = out.amplitudes();
  std::vector<std::uint64_t> idx(spec.d, 0);
  Vec u(spec.d);
  for (std::size_t j = 0; j < spec.d; ++j) u[j] = axis_point(spec.m, 0);
  for (std::uint64_t f = 0; f < amps.size(); ++f) {
    amps[f] *= std::polar(1.0, theta(u));
    for (std::size_t j = spec.d; j-- > 0;) {
      if (++idx[j] < spec.m) {
        u[j] = axis_point(spec.m, idx[j]);
        break;
      }
      idx[j] = 0;
      u[j] = axis_point(spec.m, 0);
    }
  }
  return out;
}

// One axis of QFT_G (direction +1) or its inverse (-1). With c = (m-1)/2,
// m·u·v = (a-c)(b-c)/m, so the kernel is a twiddled standard DFT.
class AxisTransform {
 public:
  explicit AxisTransform(std::uint64_t m) : m_(m), fft_(checked(m)), twiddle_(m) {
    const double c = (static_cast<double>(m) - 1.0) / 2.0;
    const double md = static_cast<double>(m);
    for (std::uint64_t a = 0; a < m; ++a) {
      // reduce c·a mod m before scaling to keep the angle small
      const double ca = std::fmod(c * static_cast<double>(a), md);
      twiddle_[a] = std::polar(1.0, -2.0 * kPi * ca / md);
    }
    global_ = std::polar(1.0 / std::sqrt(md), 2.0 * kPi * std::fmod(c * c, md) / md);
  }

  void apply(std::span<Complex> x, int direction) const {
    const bool fwd = direction > 0;
    for (std::uint64_t a = 0; a < m_; ++a) x[a] *= fwd ? twiddle_[a] : std::conj(twiddle_[a]);
    fft_.transform(x, fwd ? +1 : -1);
    const Complex g = fwd ? global_ : std::conj(global_);
    for (std::uint64_t b = 0; b < m_; ++b) x[b] *= (fwd ? twiddle_[b] : std::conj(twiddle_[b])) * g;
  }

 private:
  static std::uint64_t checked(std::uint64_t m) {
    if (m > kFftAxisCap)
      throw CapacityError("AxisTransform: m = " + std::to_string(m) + " exceeds the transform cap " +
                          std::to_string(kFftAxisCap));
    return m;
  }

  std::uint64_t m_;
  Radix2Fft fft_;
  std::vector<Complex> twiddle_;
  Complex global_;
};

namespace detail {

inline GridState grid_transform(const GridState& state, int direction) {
  const GridSpec& spec = state.spec();
  const AxisTransform t(spec.m);
  GridState out = state;
  if (out.is_product()) {
    for (auto& ax : out.axes()) t.apply(ax, direction);
    return out;
  }
  auto& amps = out.amplitudes();
  std::vector<Complex> line(spec.m);
  std::uint64_t stride = 1;
  for (std::size_t j = spec.d; j-- > 0;) {
    const std::uint64_t block = stride * spec.m;
    for (std::uint64_t base = 0; base < amps.size(); base += block) {
      for (std::uint64_t off = 0; off < stride; ++off) {
        for (std::uint64_t a = 0; a < spec.m; ++a) line[a] = amps[base + off + a * stride];
        t.apply(line, direction);
        for (std::uint64_t a = 0; a < spec.m; ++a) amps[base + off + a * stride] = line[a];
      }
    }
    stride = block;
  }
  return out;
}

}  // namespace detail

inline GridState qft(const GridState& state) { return detail::grid_transform(state, +1); }
inline GridState inverse_qft(const GridState& state) { return detail::grid_transform(state, -1); }

/// Dense m x m axis matrix e^{2πi m u v}/√m (or its inverse), row index v.
inline std::vector<Complex> dense_axis_matrix(std::uint64_t m, int direction = +1) {
  std::vector<Complex> q(m * m);
  const double md = static_cast<double>(m);
  for (std::uint64_t b = 0; b < m; ++b)
    for (std::uint64_t a = 0; a < m; ++a) {
      const double phase = 2.0 * kPi * md * axis_point(m, a) * axis_point(m, b);
      q[b * m + a] = std::polar(1.0 / std::sqrt(md), direction > 0 ? phase : -phase);
    }
  return q;
}

/// Reference path: the full m^d x m^d kernel applied by direct summation.
inline std::vector<Complex> dense_qft(const GridState& state, int direction = +1) {
  const GridSpec& spec = state.spec();
  require(spec.size() <= (std::uint64_t{1} << 14), "dense_qft: reference path limited to m^d <= 2^14");
  const std::vector<Complex> in = state.materialize();
  const std::size_t n = in.size();
  std::vector<Vec> pts(n);
  for (std::size_t f = 0; f < n; ++f) pts[f] = point_of(spec, unflatten(spec, f));
  const double md = static_cast<double>(spec.m);
  const double scale = std::pow(md, -static_cast<double>(spec.d) / 2.0);
  std::vector<Complex> out(n);
  for (std::size_t v = 0; v < n; ++v) {
    Complex s(0.0);
    for (std::size_t u = 0; u < n; ++u) {
      const double phase = 2.0 * kPi * md * dot(pts[u], pts[v]);
      s += in[u] * std::polar(scale, direction > 0 ? phase : -phase);
    }
    out[v] = s;
  }
  return out;
}

// Born-rule probabilities: per-axis marginals for product states, the joint
// table otherwise.
struct MeasurementDistribution {
  GridSpec spec;
  bool product = true;
  std::vector<Vec> marginals;
  Vec joint;

  double probability(std::span<const std::uint64_t> idx) const {
    if (!product) return joint[flatten(spec, idx)];
    double p = 1.0;
    for (std::size_t j = 0; j < spec.d; ++j) p *= marginals[j][idx[j]];
    return p;
  }

  Vec joint_table() const {
    if (!product) return joint;
    check_full_capacity(spec, "joint_table");
    Vec out{1.0};
    for (std::size_t j = 0; j < spec.d; ++j) {
      Vec next;
      next.reserve(out.size() * spec.m);
      for (double a : out)
        for (double b : marginals[j]) next.push_back(a * b);
      out = std::move(next);
    }
    return out;
  }
};

inline MeasurementDistribution measurement_distribution(const GridState& state) {
  MeasurementDistribution dist;
  dist.spec = state.spec();
  dist.product = state.is_product();
  auto probs = [](const std::vector<Complex>& v) {
    Vec p(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) total += (p[i] = std::norm(v[i]));
    for (double& x : p) x /= total;
    return p;
  };
  if (dist.product) {
    for (const auto& ax : state.axes()) dist.marginals.push_back(probs(ax));
  } else {
    dist.joint = probs(state.amplitudes());
  }
  return dist;
}

/// Inverse-CDF sampler over a measurement distribution.
class GridSampler {
 public:
  explicit GridSampler(const MeasurementDistribution& dist) : spec_(dist.spec), product_(dist.product) {
    if (product_)
      for (const Vec& p : dist.marginals) cdfs_.push_back(cumulative(p));
    else
      cdfs_.push_back(cumulative(dist.joint));
  }

  std::vector<std::uint64_t> sample_index(Rng& rng) const {
    if (!product_) return unflatten(spec_, draw(cdfs_[0], rng));
    std::vector<std::uint64_t> idx(spec_.d);
    for (std::size_t j = 0; j < spec_.d; ++j) idx[j] = draw(cdfs_[j], rng);
    return idx;
  }

  Vec sample_point(Rng& rng) const { return point_of(spec_, sample_index(rng)); }

 private:
  static Vec cumulative(const Vec& p) {
    Vec c(p.size());
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) c[i] = (s += p[i]);
    return c;
  }

  static std::uint64_t draw(const Vec& cdf, Rng& rng) {
    const double x = rng.uniform() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
    if (it == cdf.end()) it = std::prev(cdf.end());
    return static_cast<std::uint64_t>(it - cdf.begin());
  }

  GridSpec spec_;
  bool product_;
  std::vector<Vec> cdfs_;
};

inline Vec measure(const GridState& state, Rng& rng) {
  return GridSampler(measurement_distribution(state)).sample_point(rng);
}

// Closed form for one axis of inverse_qft(e^{i s u}|uniform>): with
// x = s/(2π) + (m-1)/2 and f = frac(x), the outcome b = floor(x) + t (mod m)
// has probability sin²(πf) / (m² sin²(π(f-t)/m)).
class LinearPhaseAxis {
 public:
  LinearPhaseAxis(std::uint64_t m, double slope) : m_(m) {
    require(is_power_of_two(m), "LinearPhaseAxis: m must be a power of two");
    const double md = static_cast<double>(m);
    const double x = slope / (2.0 * kPi) + (md - 1.0) / 2.0;
    const double fl = std::floor(x);
    frac_ = x - fl;
    base_ = static_cast<std::uint64_t>(static_cast<std::int64_t>(std::fmod(fl, md) + md) % static_cast<std::int64_t>(m));
    num_ = std::sin(kPi * frac_);
    num_ *= num_;
  }

  /// Probability of the outcome at offset t from floor(x).
  double offset_probability(std::int64_t t) const {
    if (frac_ == 0.0) return t == 0 ? 1.0 : 0.0;
    const double md = static_cast<double>(m_);
    const double den = std::sin(kPi * (frac_ - static_cast<double>(t)) / md);
    return num_ / (md * md * den * den);
  }

  std::uint64_t index_of_offset(std::int64_t t) const {
    const auto mi = static_cast<std::int64_t>(m_);
    return static_cast<std::uint64_t>(((static_cast<std::int64_t>(base_) + t) % mi + mi) % mi);
  }

  /// Full marginal indexed by outcome b.
  Vec marginal() const {
    Vec p(m_);
    const auto mi = static_cast<std::int64_t>(m_);
    for (std::int64_t t = -mi / 2 + 1; t <= mi / 2; ++t) p[index_of_offset(t)] = offset_probability(t);
    return p;
  }

  /// Exact inverse-CDF draw over offsets ordered 0, 1, -1, 2, -2, ...
  std::uint64_t sample(Rng& rng) const {
    const auto half = static_cast<std::int64_t>(m_ / 2);
    const double x = rng.uniform();
    double acc = offset_probability(0);
    if (x < acc) return index_of_offset(0);
    for (std::int64_t r = 1; r <= half; ++r) {
      acc += offset_probability(r);
      if (x < acc) return index_of_offset(r);
      if (r == half) break;
      acc += offset_probability(-r);
      if (x < acc) return index_of_offset(-r);
    }
    // Rounding left x above the accumulated mass; the peak is the closest outcome.
    return index_of_offset(frac_ < 0.5 ? 0 : 1);
  }

 private:
  std::uint64_t m_;
  std::uint64_t base_ = 0;
  double frac_ = 0.0;
  double num_ = 0.0;
};

/// One line per amplitude: index tuple, real part, imaginary part.
inline std::string debug_dump(const GridState& state) {
  const GridSpec& spec = state.spec();
  check_full_capacity(spec, "debug_dump");
  std::string out;
  char buf[96];
  for (std::uint64_t f = 0; f < spec.size(); ++f) {
    const auto idx = unflatten(spec, f);
    const Complex a = state.amplitude(idx);
    out += "(";
    for (std::size_t j = 0; j < spec.d; ++j) {
      if (j) out += ",";
      out += std::to_string(idx[j]);
    }
    std::snprintf(buf, sizeof buf, ") %.17g %.17g\n", a.real(), a.imag());
    out += buf;
  }
  return out;
}

}  // namespace qmeanlab
