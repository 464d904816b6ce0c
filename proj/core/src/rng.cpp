#include "setgen/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "setgen/errors.hpp"

namespace setgen {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw ContractError("uniform_index: empty range");
  // Rejection on the top of the range removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (cached_normal_) {
    const double v = *cached_normal_;
    cached_normal_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

int Rng::poisson(double mean) {
  if (!(mean > 0.0)) throw ContractError("poisson: mean must be positive");
  const double threshold = std::exp(-mean);
  int k = 0;
  double p = uniform();
  while (p > threshold) {
    ++k;
    p *= uniform();
  }
  return k;
}

Rng Rng::split(std::uint64_t key) const {
  return Rng(splitmix64(seed_ ^ splitmix64(key + 0x632be59bd9b4e019ULL)));
}

std::string Rng::serialize() const {
  std::ostringstream out;
  out << seed_ << ' ';
  if (cached_normal_) {
    out << "1 " << std::bit_cast<std::uint64_t>(*cached_normal_) << ' ';
  } else {
    out << "0 0 ";
  }
  out << engine_;
  return out.str();
}

Rng Rng::deserialize(const std::string& state) {
  std::istringstream in(state);
  std::uint64_t seed = 0;
  int has_cached = 0;
  std::uint64_t cached_bits = 0;
  in >> seed >> has_cached >> cached_bits;
  Rng rng(seed);
  in >> rng.engine_;
  if (!in) throw IoError("malformed rng state");
  if (has_cached) rng.cached_normal_ = std::bit_cast<double>(cached_bits);
  return rng;
}

bool operator==(const Rng& a, const Rng& b) {
  return a.seed_ == b.seed_ && a.engine_ == b.engine_ &&
         a.cached_normal_ == b.cached_normal_;
}

}  // namespace setgen
