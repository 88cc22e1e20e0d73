#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace chmm {

// splitmix64 step; used for seeding and for string/label hashing.
std::uint64_t splitmix64(std::uint64_t& state);

// xoshiro256** seeded through splitmix64. All derived distributions below
// are implemented here (not via <random> distributions) so that streams are
// identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();

  // Uniform in (0, 1]; safe for log().
  double uniform_open_zero();

  // Box-Muller, one variate per call (the sine branch is discarded).
  double normal();

  double exponential();

  // Index i drawn with probability weights[i] / sum(weights).
  std::size_t categorical(std::span<const double> weights);

  // Flat Dirichlet sample of the given size (normalized unit exponentials).
  std::vector<double> dirichlet_flat(std::size_t size);

  std::size_t uniform_index(std::size_t count);

private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace chmm
