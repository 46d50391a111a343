#pragma once

#include <cstdint>
#include <string_view>

namespace wildscav {

// xoshiro256** seeded through splitmix64. The bit stream is fully specified,
// so a (seed, stream) pair reproduces the same sequence on every platform.
// Derived samplers below avoid the std:: distributions, whose output is
// implementation-defined.
class Rng {
 public:
  static constexpr std::uint8_t kAlgorithmId = 1;
  static constexpr std::string_view kAlgorithmName = "xoshiro256**/splitmix64";

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();
  // Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in the inclusive range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Standard normal sample (Box-Muller, one value per call).
  double normal();
  bool bernoulli(double p) { return uniform01() < p; }

  // Independent generator for a named sub-stream of the same seed.
  Rng fork(std::uint64_t stream) const { return Rng(seed_, stream_ * 0x9E3779B97F4A7C15ull + stream + 1); }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace wildscav
