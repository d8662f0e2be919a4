#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace mhp {

// Seeded generator with platform-independent transforms: the engine is
// std::mt19937_64 and every distribution here is computed from its raw bits,
// so identical seeds give identical streams on any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent seed for sub-stream `stream` of `seed` (splitmix64 mix).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double exponential(double rate);
  double normal();
  // Index drawn proportionally to non-negative weights.
  std::size_t categorical(std::span<const double> weights);
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mhp
