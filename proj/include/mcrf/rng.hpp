#pragma once

#include <cstdint>
#include <cmath>

namespace mcrf {

// Counter-based splittable RNG. A master key derives independent streams by
// id; each stream is a splitmix64 sequence. All draws are reproducible across
// platforms (no dependence on libstdc++ distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller; second value cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Immutable key from which per-task streams are derived by counter. Derived
// keys are decorrelated through the same mixing as splitmix64 output.
class RngKey {
 public:
  explicit RngKey(std::uint64_t key) : key_(key) {}

  RngKey derive(std::uint64_t stream) const {
    std::uint64_t z = key_ ^ (0x9e3779b97f4a7c15ull * (stream + 0x632be59bd9b4e019ull));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return RngKey(z ^ (z >> 31));
  }

  Rng stream() const { return Rng(key_); }
  std::uint64_t value() const { return key_; }

 private:
  std::uint64_t key_;
};

}  // namespace mcrf
