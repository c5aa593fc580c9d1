#pragma once

// The standard battery of test distributions, each drawn per seed so that
// repeated trials see different means.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qmeanlab/core.hpp"
#include "qmeanlab/probspace.hpp"
#include "qmeanlab/rng.hpp"

namespace qmeanlab {

enum class BatteryKind {
  BallPairs,   // uniform over antipodal pairs c ± y of random points in the unit ball
  Indicator,   // X = e_i with probability p_i
  HeavyLight,  // rare far point, frequent near point
};

inline std::string battery_name(BatteryKind k) {
  switch (k) {
    case BatteryKind::BallPairs: return "ball_pairs";
    case BatteryKind::Indicator: return "indicator";
    case BatteryKind::HeavyLight: return "heavy_light";
  }
  return "?";
}

inline BatteryKind battery_from_name(const std::string& s) {
  if (s == "ball_pairs") return BatteryKind::BallPairs;
  if (s == "indicator") return BatteryKind::Indicator;
  if (s == "heavy_light") return BatteryKind::HeavyLight;
  throw InvalidArgument("unknown battery distribution \"" + s + "\"");
}

inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

inline Vec random_unit_vector(std::size_t d, Rng& rng) {
  Vec v(d);
  double n = 0.0;
  do {
    for (double& x : v) x = standard_normal(rng);
    n = norm_l2(v);
  } while (n == 0.0);
  for (double& x : v) x /= n;
  return v;
}

inline Vec random_ball_point(std::size_t d, double radius, Rng& rng) {
  Vec v = random_unit_vector(d, rng);
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
  for (double& x : v) x *= r;
  return v;
}

inline constexpr std::size_t kBallPairs = 128;

/// Values lie in the ball of radius `scale`.
inline RandomVariable battery_instance(BatteryKind kind, std::size_t d, std::uint64_t seed, double scale = 1.0) {
  require(d >= 1, "battery_instance: d must be positive");
  require(scale > 0.0, "battery_instance: scale must be positive");
  Rng rng(splitmix64(seed ^ (0xB0A7ULL + static_cast<std::uint64_t>(kind))));
  std::vector<Vec> vals;
  std::vector<double> prob;
  switch (kind) {
    case BatteryKind::BallPairs: {
      const Vec c = random_ball_point(d, 0.3, rng);
      for (std::size_t i = 0; i < kBallPairs; ++i) {
        const Vec y = random_ball_point(d, 0.6, rng);
        Vec plus(d), minus(d);
        for (std::size_t j = 0; j < d; ++j) {
          plus[j] = c[j] + y[j];
          minus[j] = c[j] - y[j];
        }
        vals.push_back(std::move(plus));
        vals.push_back(std::move(minus));
      }
      prob.assign(vals.size(), 1.0 / static_cast<double>(vals.size()));
      break;
    }
    case BatteryKind::Indicator: {
      double total = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double w = 0.2 + rng.uniform();
        prob.push_back(w);
        total += w;
        Vec e(d, 0.0);
        e[i] = 1.0;
        vals.push_back(std::move(e));
      }
      for (double& p : prob) p /= total;
      double s = 0.0;
      for (std::size_t i = 0; i + 1 < prob.size(); ++i) s += prob[i];
      prob.back() = 1.0 - s;
      break;
    }
    case BatteryKind::HeavyLight: {
      const double q = 0.05;
      Vec heavy = random_unit_vector(d, rng);
      Vec light = random_unit_vector(d, rng);
      for (double& x : light) x *= 0.05;
      vals = {light, heavy};
      prob = {1.0 - q, q};
      break;
    }
  }
  for (Vec& v : vals)
    for (double& x : v) x *= scale;
  return RandomVariable(std::move(prob), vals);
}

/// The same instance squeezed into [-1/4, 1/4]^d.
inline RandomVariable battery_box_instance(BatteryKind kind, std::size_t d, std::uint64_t seed) {
  return battery_instance(kind, d, seed, 0.25);
}

}  // namespace qmeanlab
