#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>

namespace setgen {

// Seeded random stream. The engine is std::mt19937_64, whose output sequence
// is fixed by the standard; every distribution is implemented here rather than
// through <random> distributions, which are implementation-defined. Same seed
// therefore yields the same samples on every conforming toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();

  // Knuth's multiplication method; fine for the small means used here.
  int poisson(double mean);

  // Independent child stream derived from (seed, key) with splitmix64.
  Rng split(std::uint64_t key) const;

  std::string serialize() const;
  static Rng deserialize(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> cached_normal_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace setgen
