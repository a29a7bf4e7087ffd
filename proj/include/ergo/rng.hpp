#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>

namespace ergo {

// xoshiro256++ with splitmix64 seeding. Substreams are derived by hashing
// (seed, stream) so replication r always sees the same bits regardless of
// scheduling; sequences for distinct streams are statistically independent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng(seed, 0) {}
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  // Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; one spare cached per stream.
  double gaussian();

  // +1/-1 with equal probability.
  double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

 private:
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ergo
