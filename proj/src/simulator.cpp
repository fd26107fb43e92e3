#include "bpre/simulator.hpp"

#include <cassert>
#include <random>

#include "bpre/error.hpp"
#include "bpre/parallel.hpp"

namespace bpre {

namespace {

// libstdc++'s rejection sampler loses precision and stalls near 10^18 trials.
constexpr std::uint64_t kExactTrialLimit = std::uint64_t{1} << 40;

std::uint64_t binomial_u64(std::uint64_t trials, double p, Philox& rng) {
  if (trials == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  std::binomial_distribution<std::int64_t> dist(static_cast<std::int64_t>(trials), p);
  return static_cast<std::uint64_t>(dist(rng));
}

}  // namespace

void validate(const SimConfig& config) {
  if (config.n < 1) throw Error(ErrorCode::InvalidConfig, "horizon n must be >= 1");
  if (config.z0 < 1) throw Error(ErrorCode::InvalidConfig, "initial population must be >= 1");
  if (config.replicas < 1) throw Error(ErrorCode::InvalidConfig, "replicas must be >= 1");
}

std::size_t sample_index(std::span<const double> weights, double u) {
  double total = 0.0;
  for (double w : weights) total += w;
  double target = u * total;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    if (target < weights[i]) return i;
    target -= weights[i];
  }
  return last_positive;
}

Population sample_binomial(const Population& trials, double p, Philox& rng) {
  if (trials.is_zero() || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  if (trials < kExactTrialLimit) return binomial_u64(trials.convert_to<std::uint64_t>(), p, rng);

  const double q = std::min(p, 1.0 - p);
  if (trials.convert_to<double>() * q < 1e6) {
    std::poisson_distribution<std::int64_t> poisson(trials.convert_to<double>() * q);
    const Population k = std::min<Population>(Population(poisson(rng)), trials);
    return p <= 0.5 ? k : Population(trials - k);
  }

  // mean = trials * p with p scaled to 64 fractional bits.
  const auto scaled_p = static_cast<std::uint64_t>(std::ldexp(static_cast<long double>(p), 64));
  Population mean = (trials * scaled_p) >> 64;
  const long double sd = std::sqrt(trials.convert_to<long double>() * p * (1.0L - p));
  std::normal_distribution<double> gauss;
  const long double shift = std::round(sd * gauss(rng));
  int exponent = 0;
  const long double mant = std::frexp(std::abs(shift), &exponent);
  Population magnitude;
  if (exponent <= 64) {
    magnitude = static_cast<std::uint64_t>(std::abs(shift));
  } else {
    magnitude = Population(static_cast<std::uint64_t>(std::ldexp(mant, 64))) << (exponent - 64);
  }
  Population out = shift < 0 ? Population(mean - magnitude) : Population(mean + magnitude);
  if (out < 0) out = 0;
  if (out > trials) out = trials;
  return out;
}

Population branch_step(const Population& z, const OffspringDistribution& dist, Philox& rng) {
  if (z.is_zero()) return 0;
  const auto atoms = dist.atoms();
  if (atoms.size() == 1) return z * atoms.front().k;

  const std::uint64_t kmax = dist.max_offspring();
  if (z < kExactTrialLimit && kmax < (std::uint64_t{1} << 23)) {
    std::uint64_t remaining = z.convert_to<std::uint64_t>();
    std::uint64_t total = 0;
    double remaining_prob = 1.0;
    for (std::size_t j = 0; j + 1 < atoms.size() && remaining > 0; ++j) {
      const double p = remaining_prob > 0.0 ? std::min(1.0, atoms[j].prob / remaining_prob) : 1.0;
      const std::uint64_t count = binomial_u64(remaining, p, rng);
      total += count * atoms[j].k;
      remaining -= count;
      remaining_prob -= atoms[j].prob;
    }
    total += remaining * atoms.back().k;
    return total;
  }

  Population remaining = z;
  Population total = 0;
  double remaining_prob = 1.0;
  for (std::size_t j = 0; j + 1 < atoms.size() && !remaining.is_zero(); ++j) {
    const double p = remaining_prob > 0.0 ? std::min(1.0, atoms[j].prob / remaining_prob) : 1.0;
    const Population count = sample_binomial(remaining, p, rng);
    total += count * atoms[j].k;
    remaining -= count;
    remaining_prob -= atoms[j].prob;
  }
  total += remaining * atoms.back().k;
  return total;
}

Trajectory run(const SimConfig& config, std::uint64_t replica) {
  validate(config);
  const auto& env = config.env;
  const auto weights = env.weights();
  Trajectory t;
  t.z.reserve(config.n + 1);
  t.env_idx.reserve(config.n);
  t.s.reserve(config.n + 1);
  t.z.emplace_back(config.z0);
  t.s.push_back(0.0);
  for (int k = 0; k < config.n; ++k) {
    Philox rng = make_stream(config.seed, replica, static_cast<std::uint32_t>(k));
    const std::size_t i = sample_index(weights, rng.uniform());
    Population next = branch_step(t.z.back(), env[i].dist, rng);
    assert(!env.strongly_supercritical() || next >= t.z.back());
    t.z.push_back(std::move(next));
    t.env_idx.push_back(i);
    t.s.push_back(t.s.back() + env[i].log_mean);
  }
  return t;
}

EstimatorResult run_batch(const SimConfig& config, const TrajectoryEvent& event) {
  validate(config);
  const auto hits = parallel_map<double>(config.replicas, config.workers,
                                         [&](std::uint64_t r) { return event(run(config, r)) ? 1.0 : 0.0; });
  return summarize(hits, Method::Naive, config.n, 0.0, config.seed);
}

std::vector<std::uint64_t> random_lineage(const EnvironmentLaw& env, int n, Philox& rng) {
  if (n < 1) throw Error(ErrorCode::InvalidConfig, "lineage length must be >= 1");
  const OffspringDistribution law = env.lineage_law();
  std::vector<double> probs;
  for (const auto& a : law.atoms()) probs.push_back(a.prob);
  std::vector<std::uint64_t> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(law.atoms()[sample_index(probs, rng.uniform())].k);
  return out;
}

int take_off_time(std::span<const Population> z, const Population& threshold) {
  const int n = static_cast<int>(z.size()) - 1;
  for (int k = 0; k <= n; ++k) {
    if (z[k] > threshold) return k;
  }
  return n;
}

}  // namespace bpre
