#ifndef PCEM_RANDOM_HPP_
#define PCEM_RANDOM_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace pcem {

// Seeded generator whose derived draws (uniform reals, bounded integers,
// shuffles) are defined here rather than by the standard library's
// distributions, so a seed gives the same stream with any toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  // Uniform integer in [lo, hi].
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Index drawn from a discrete distribution given by `weights`
  // (non-negative, not necessarily normalized).
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (u < weights[i]) return i;
      u -= weights[i];
    }
    // Rounding left u at or past the last bucket.
    for (std::size_t i = weights.size(); i > 0; --i) {
      if (weights[i - 1] > 0.0) return i - 1;
    }
    return 0;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pcem

#endif  // PCEM_RANDOM_HPP_
