#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bodyid {

// Seeded RNG wrapper. Every random draw in the library flows through an
// explicit Rng instance, so results are reproducible from the seeds alone:
// no global state, no wall-clock entropy.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(engine_);
  }

  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
  }

  double normal(double mean, double stddev) {
    std::normal_distribution<double> dist(mean, stddev);
    return dist(engine_);
  }

  // Normal truncated to [lo, hi] by resampling.
  double truncated_normal(double mean, double stddev, double lo, double hi) {
    for (;;) {
      const double x = normal(mean, stddev);
      if (x >= lo && x <= hi) return x;
    }
  }

  std::uint64_t next_seed() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

}  // namespace bodyid
