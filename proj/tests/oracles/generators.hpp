#pragma once

// Seeded generators for the property tests.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "chemofront/elliptic.hpp"
#include "chemofront/model.hpp"

namespace oracle {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  /// Sum of one to four Gaussian bumps, optionally over a positive floor.
  std::vector<double> smooth_profile(const chemofront::GridWindow& g, double floor = 0.0) {
    std::vector<double> w(g.n, floor);
    const double lo = g.x_left, hi = g.x_right();
    const int k = integer(1, 4);
    for (int j = 0; j < k; ++j) {
      const double A = uniform(0.05, 1.5);
      const double c = uniform(lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo));
      const double s = uniform(0.5, 0.1 * (hi - lo));
      for (std::size_t i = 0; i < g.n; ++i) {
        const double z = (g.x(i) - c) / s;
        w[i] += A * std::exp(-z * z);
      }
    }
    return w;
  }

  /// A profile below `high` node-wise: high times a smooth factor in [0, 1].
  std::vector<double> below(const chemofront::GridWindow& g, const std::vector<double>& high) {
    const double f = uniform(0.05, 1.0), ph = uniform(0.0, 2.0 * std::numbers::pi), d = uniform(0.0, 1.0);
    std::vector<double> low(high);
    for (std::size_t i = 0; i < g.n; ++i) low[i] *= 1.0 - d * 0.5 * (1.0 + std::sin(f * g.x(i) + ph));
    return low;
  }

  /// One of the four slowly decaying families with random parameters.
  chemofront::TailFamily slow_family() {
    using namespace chemofront::family;
    switch (integer(0, 3)) {
      case 0: return ExpOverLog{uniform(0.2, 2.0), uniform(0.5, 2.0)};
      case 1: return StretchedExp{uniform(0.2, 2.0), uniform(0.2, 0.8), uniform(0.5, 2.0)};
      case 2: return Algebraic{uniform(0.5, 4.0), uniform(0.5, 2.0)};
      default: return LogPower{uniform(0.5, 3.0), uniform(0.5, 2.0)};
    }
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// One representative of every family.
inline std::vector<chemofront::TailFamily> all_families() {
  using namespace chemofront::family;
  return {ExpOverLog{1.0, 1.0}, StretchedExp{1.0, 0.5, 1.0}, Algebraic{2.0, 1.0},
          LogPower{1.0, 1.0},   Exponential{1.0, 1.0},       CompactBump{5.0}};
}

inline std::vector<chemofront::TailFamily> slow_families() {
  auto all = all_families();
  all.resize(4);
  return all;
}

}  // namespace oracle
