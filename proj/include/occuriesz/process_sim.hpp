#pragma once

#include "occuriesz/core.hpp"
#include "occuriesz/rng.hpp"

#include <cstdint>

namespace occuriesz {

// Autocovariance of unit-step fractional Gaussian noise at lag k.
template <typename Scalar>
Scalar fgn_autocovariance(Scalar hurst, Scalar k) {
  using std::abs;
  using std::pow;
  const Scalar h2 = 2 * hurst;
  return Scalar(0.5) * (pow(abs(k + 1), h2) - 2 * pow(abs(k), h2) + pow(abs(k - 1), h2));
}

// fBm covariance R(s, t) for one coordinate.
template <typename Scalar>
Scalar fbm_covariance(Scalar hurst, Scalar s, Scalar t) {
  using std::abs;
  using std::pow;
  const Scalar h2 = 2 * hurst;
  return Scalar(0.5) * (pow(abs(t), h2) + pow(abs(s), h2) - pow(abs(t - s), h2));
}

enum class FgnMethod { Auto, Circulant, Cholesky };

struct FbmOptions {
  FgnMethod method = FgnMethod::Auto;
  std::size_t cholesky_max_steps = 4096;
};

// n unit-step fGn samples. Circulant embedding unless it fails or Cholesky is forced.
Eigen::VectorXd sample_fgn(std::size_t n, double hurst, CounterRng& rng,
                           const FbmOptions& options = {});

// Variance of sum_{k<N} (xi_k^2 - 1) for unit fGn xi with index hurst_micro.
double hermite2_partial_sum_variance(double hurst_micro, std::size_t N);

// Replication r uses seed derive_seed(spec.seed, r); coordinate j draws from stream j.
SamplePath simulate(const ProcessSpec& spec, std::uint64_t replication = 0);
SamplePath simulate_with_seed(const ProcessSpec& spec, std::uint64_t replication_seed);

SamplePath simulate_fbm(const ProcessSpec& spec, std::uint64_t replication_seed,
                        const FbmOptions& options = {});
SamplePath simulate_brownian(const ProcessSpec& spec, std::uint64_t replication_seed);
SamplePath simulate_rosenblatt(const ProcessSpec& spec, std::uint64_t replication_seed);
SamplePath simulate_stable(const ProcessSpec& spec, std::uint64_t replication_seed);

// Pathwise solution on the driver's grid: Heun for H > 1/2, implicit midpoint for H = 1/2.
SamplePath solve_young_sde(const ProcessSpec& spec, const SamplePath& driver);

}  // namespace occuriesz
