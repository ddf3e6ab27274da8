#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace verbose {

// Deterministic RNG. mt19937_64 is fully specified by the standard, and all
// distribution helpers are implemented here (the std distributions are
// implementation-defined and would break byte-for-byte reproducibility).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  float uniform_f(float lo, float hi) {
    return lo + static_cast<float>(uniform()) * (hi - lo);
  }

  // [0, n), unbiased via rejection
  uint64_t uniform_int(uint64_t n) {
    if (n == 0) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // Box-Muller, one value per call (the spare is discarded to keep the
  // stream position a simple function of call count).
  float normal_f(float stddev) {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    return static_cast<float>(r * std::cos(theta)) * stddev;
  }

 private:
  std::mt19937_64 gen_;
};

// splitmix64 step, used to derive independent per-item seeds from a base seed.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace verbose
