#include "bpre/cells.hpp"

#include <cmath>
#include <map>

#include "bpre/error.hpp"
#include "bpre/oracle.hpp"
#include "bpre/parallel.hpp"
#include "bpre/rng.hpp"
#include "bpre/simulator.hpp"

namespace bpre {

namespace {

constexpr int kMaxDepth = 20;

OffspringDistribution marginal(const JointOffspring& joint, bool first) {
  std::map<std::uint64_t, double> m;
  for (const auto& [ks, p] : joint.atoms) m[first ? ks.first : ks.second] += p;
  return OffspringDistribution({m.begin(), m.end()});
}

// Daughters' parasite counts when each parasite draws a (first, second) pair.
std::pair<Population, Population> joint_split(const Population& z, const JointOffspring& joint, Philox& rng) {
  Population remaining = z;
  Population first = 0;
  Population second = 0;
  double remaining_prob = 1.0;
  for (std::size_t j = 0; j < joint.atoms.size() && !remaining.is_zero(); ++j) {
    const auto& [ks, p] = joint.atoms[j];
    const bool last = j + 1 == joint.atoms.size();
    const Population count =
        last ? remaining : sample_binomial(remaining, remaining_prob > 0.0 ? std::min(1.0, p / remaining_prob) : 1.0, rng);
    first += count * ks.first;
    second += count * ks.second;
    remaining -= count;
    remaining_prob -= p;
  }
  return {first, second};
}

std::pair<double, double> mean_and_se(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  const double count = static_cast<double>(v.size());
  const double mean = s / count;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / (count - 1.0) / count) : 0.0};
}

}  // namespace

OffspringDistribution JointOffspring::first_marginal() const { return marginal(*this, true); }
OffspringDistribution JointOffspring::second_marginal() const { return marginal(*this, false); }

EnvironmentLaw cell_lineage_environment(const CellTreeConfig& config) {
  if (config.joint) {
    return EnvironmentLaw({{0.5, config.joint->first_marginal()}, {0.5, config.joint->second_marginal()}});
  }
  return EnvironmentLaw({{0.5, config.law1}, {0.5, config.law2}});
}

CellTreeResult simulate_cell_tree(const CellTreeConfig& config) {
  if (config.n < 1 || config.replicas < 1) throw Error(ErrorCode::InvalidConfig, "n and replicas must be positive");
  if (config.n > kMaxDepth) throw Error(ErrorCode::BudgetExceeded, "cell trees are limited to 20 generations");
  const Population below_max = floor_exp(config.c * config.n);
  const Population above_min = ceil_exp(config.c * config.n);

  CellTreeResult out;
  out.replicates = parallel_map<CellCounts>(config.replicas, config.workers, [&](std::uint64_t r) {
    std::vector<Population> level{Population(config.z0)};
    std::vector<Population> next;
    for (int k = 0; k < config.n; ++k) {
      Philox rng = make_stream(config.seed, r, static_cast<std::uint32_t>(k));
      next.clear();
      next.reserve(level.size() * 2);
      for (const auto& z : level) {
        if (config.joint) {
          auto [a, b] = joint_split(z, *config.joint, rng);
          next.push_back(std::move(a));
          next.push_back(std::move(b));
        } else {
          next.push_back(branch_step(z, config.law1, rng));
          next.push_back(branch_step(z, config.law2, rng));
        }
      }
      std::swap(level, next);
    }
    CellCounts counts;
    for (const auto& z : level) {
      if (z <= below_max) ++counts.below;
      if (z >= above_min) ++counts.above;
    }
    Philox pick = make_stream(config.seed, r, kAuxStep);
    counts.sampled_cell = level[static_cast<std::size_t>(pick.uniform() * static_cast<double>(level.size()))];
    return counts;
  });

  std::vector<double> below;
  std::vector<double> above;
  for (const auto& c : out.replicates) {
    below.push_back(static_cast<double>(c.below));
    above.push_back(static_cast<double>(c.above));
  }
  std::tie(out.mean_below, out.se_below) = mean_and_se(below);
  std::tie(out.mean_above, out.se_above) = mean_and_se(above);
  return out;
}

IdentityCheck expected_count_identity(const CellTreeConfig& config) {
  const CellTreeResult tree = simulate_cell_tree(config);
  const EnvironmentLaw env = cell_lineage_environment(config);
  IdentityCheck out;
  out.lhs = tree.mean_below;
  out.lhs_std_error = tree.se_below;
  out.rhs = std::ldexp(exact_population_tail(env, config.n, config.z0, config.c, Side::Lower), config.n);
  const double diff = out.lhs - out.rhs;
  if (out.lhs_std_error > 0.0) {
    out.z_score = diff / out.lhs_std_error;
  } else {
    out.z_score = std::abs(diff) <= 1e-9 * std::max(1.0, out.rhs) ? 0.0 : std::copysign(INFINITY, diff);
  }
  return out;
}

}  // namespace bpre
