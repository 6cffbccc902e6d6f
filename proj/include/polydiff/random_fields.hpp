#pragma once

#include <cstdint>
#include <random>

#include "polydiff/trajectory.hpp"

namespace polydiff {

/// Deterministic random source. Wraps the standardized 64-bit Mersenne
/// twister but generates doubles through fully specified maps (bit shift for
/// uniforms, Box-Muller for normals) because the standard distributions are
/// implementation-defined and would break byte-identical reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }
  double normal();
  std::uint64_t next() { return gen_(); }

  /// Independent substream for ensemble member `stream`; member order and
  /// thread scheduling cannot affect the draws.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Truncated random eigenexpansion: sum over the first `num_modes` modes of
/// amplitude * g_k * k^{-decay} * e_k with standard normal g_k and
/// L2-orthonormal eigenfields e_k. `amplitude` is then the expected scale of
/// the L2 norm.
DiscreteField random_eigen_field(const DiscreteOperators& ops, Rng& rng,
                                 int num_modes, double decay, double amplitude);

/// Random initial state (v, tau) from two independent eigenexpansions.
State random_state(const DiscreteOperators& ops, std::uint64_t seed,
                   int num_modes, double decay, double amplitude);

}  // namespace polydiff
