#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace bpre {

struct OffspringAtom {
  std::uint64_t k;
  double prob;
};

/// Finite-support offspring law on the non-negative integers.
///
/// Atoms are stored sorted by offspring count with zero-probability entries
/// dropped. Construction rejects inputs whose total mass drifts from one by
/// more than 1e-9; smaller drift is normalized away.
class OffspringDistribution {
 public:
  explicit OffspringDistribution(std::vector<std::pair<std::uint64_t, double>> pmf);

  std::span<const OffspringAtom> atoms() const { return atoms_; }

  double prob(std::uint64_t k) const;
  double mean() const { return mean_; }
  double second_moment() const { return second_moment_; }
  double p0() const { return prob(0); }
  double p1() const { return prob(1); }
  std::uint64_t min_offspring() const { return atoms_.front().k; }
  std::uint64_t max_offspring() const { return atoms_.back().k; }
  bool is_dirac() const { return atoms_.size() == 1; }

  /// Mean recomputed from the atoms, for consistency checks.
  double recompute_mean() const;

  friend bool operator==(const OffspringDistribution&, const OffspringDistribution&) = default;

 private:
  std::vector<OffspringAtom> atoms_;
  double mean_ = 0.0;
  double second_moment_ = 0.0;
};

inline bool operator==(const OffspringAtom& a, const OffspringAtom& b) {
  return a.k == b.k && a.prob == b.prob;
}

OffspringDistribution build_offspring(std::vector<std::pair<std::uint64_t, double>> pmf);

struct EnvironmentComponent {
  double weight;
  OffspringDistribution dist;
  double log_mean;
};

/// Finite mixture of offspring laws: the environment law of a BPRE.
/// Immutable after construction.
class EnvironmentLaw {
 public:
  explicit EnvironmentLaw(std::vector<std::pair<double, OffspringDistribution>> components);

  std::span<const EnvironmentComponent> components() const { return components_; }
  std::size_t size() const { return components_.size(); }
  const EnvironmentComponent& operator[](std::size_t i) const { return components_[i]; }

  /// Expected log-mean: the typical exponential growth rate.
  double lbar() const { return lbar_; }
  double lmin() const { return lmin_; }
  double lmax() const { return lmax_; }
  /// Probability that an individual has exactly one child, averaged over environments.
  double mean_p1() const { return mean_p1_; }
  /// Uniform bounds on the mean and on the second moment of the offspring laws.
  double bound_mean() const { return bound_mean_; }
  double bound_second_moment() const { return bound_second_moment_; }

  bool strongly_supercritical() const { return strongly_supercritical_; }
  bool all_noncrit_below() const { return all_noncrit_below_; }
  bool degenerate() const { return lmin_ == lmax_; }

  /// sum_i q_i p1_i^z: probability that z individuals all have exactly one child.
  double holding_probability(std::uint64_t z) const;

  /// Offspring law of a random lineage: P(N = k) = E(p(k)).
  OffspringDistribution lineage_law() const;

  std::vector<double> weights() const;

  /// Stable 64-bit fingerprint of the law's canonical JSON form, hex encoded.
  std::string fingerprint() const;

 private:
  std::vector<EnvironmentComponent> components_;
  double lbar_ = 0.0;
  double lmin_ = 0.0;
  double lmax_ = 0.0;
  double mean_p1_ = 0.0;
  double bound_mean_ = 0.0;
  double bound_second_moment_ = 0.0;
  bool strongly_supercritical_ = false;
  bool all_noncrit_below_ = false;
};

EnvironmentLaw build_environment(std::vector<std::pair<double, OffspringDistribution>> components);

/// {"environments": [{"weight": w, "pmf": {"k": prob, ...}}, ...]}
EnvironmentLaw environment_from_json(const nlohmann::json& j);
nlohmann::json environment_to_json(const EnvironmentLaw& env);
EnvironmentLaw parse_environment(const std::string& text);
std::string serialize_environment(const EnvironmentLaw& env);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace bpre
