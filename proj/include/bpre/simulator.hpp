#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bpre/environment.hpp"
#include "bpre/estimator.hpp"
#include "bpre/population.hpp"
#include "bpre/rng.hpp"

namespace bpre {

/// One realization of the process: populations Z_0..Z_n, the environment
/// drawn at each generation, and the partial sums S_0..S_n of log-means.
struct Trajectory {
  std::vector<Population> z;
  std::vector<std::size_t> env_idx;
  std::vector<double> s;

  int horizon() const { return static_cast<int>(env_idx.size()); }
};

struct SimConfig {
  EnvironmentLaw env;
  int n = 1;
  std::uint64_t z0 = 1;
  std::uint64_t seed = 0;
  std::uint64_t replicas = 1;
  unsigned workers = 1;
};

void validate(const SimConfig& config);

/// Index i with probability weights[i] / sum(weights), by inverse CDF at u in [0,1).
std::size_t sample_index(std::span<const double> weights, double u);

/// Binomial(trials, p). Exact below 2^40 trials; beyond that a Poisson
/// approximation when trials * min(p, 1-p) < 10^6 and the normal
/// approximation otherwise. Both errors are far below the resolution of log Z.
Population sample_binomial(const Population& trials, double p, Philox& rng);

/// Total offspring of z individuals reproducing independently with `dist`,
/// drawn through the multinomial allocation of individuals over the support.
Population branch_step(const Population& z, const OffspringDistribution& dist, Philox& rng);

/// Trajectory of replica `replica`; generation k draws from the stream
/// (seed, replica, k) so replicas are reproducible in any order.
Trajectory run(const SimConfig& config, std::uint64_t replica = 0);

using TrajectoryEvent = std::function<bool(const Trajectory&)>;

/// Naive Monte Carlo estimate of P(event) over config.replicas replicas.
EstimatorResult run_batch(const SimConfig& config, const TrajectoryEvent& event);

/// Offspring counts of n generations along a random lineage: i.i.d. draws
/// from the mixture law P(N = k) = E(p(k)).
std::vector<std::uint64_t> random_lineage(const EnvironmentLaw& env, int n, Philox& rng);

/// First generation k with Z_k > threshold, capped at the horizon.
int take_off_time(std::span<const Population> z, const Population& threshold);

}  // namespace bpre
