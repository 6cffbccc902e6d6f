#include "polydiff/random_fields.hpp"

#include <cmath>

namespace polydiff {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::acos(-1.0) * u2;
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined word
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

DiscreteField random_eigen_field(const DiscreteOperators& ops, Rng& rng,
                                 int num_modes, double decay,
                                 double amplitude) {
  const int n = ops.grid().total_nodes();
  const int k_max = std::min(num_modes, n);
  if (k_max < 1) throw Error("random field: need at least one mode");
  Eigen::VectorXd coeff = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < k_max; ++k)
    coeff[k] = amplitude * rng.normal() * std::pow(k + 1.0, -decay);
  // Values of sum_k coeff_k e_k with L2-orthonormal e_k = q_k / sqrt(w).
  Eigen::VectorXd vals =
      (ops.eigenvectors() * coeff) / std::sqrt(ops.grid().cell_volume());
  return DiscreteField(ops.grid(), std::move(vals));
}

State random_state(const DiscreteOperators& ops, std::uint64_t seed,
                   int num_modes, double decay, double amplitude) {
  Rng rng_v(Rng::derive(seed, 0));
  Rng rng_tau(Rng::derive(seed, 1));
  return State(0.0, random_eigen_field(ops, rng_v, num_modes, decay, amplitude),
               random_eigen_field(ops, rng_tau, num_modes, decay, amplitude));
}

}  // namespace polydiff
