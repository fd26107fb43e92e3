#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "bpre/environment.hpp"
#include "bpre/population.hpp"

namespace bpre {

/// Joint law of (children in first daughter, children in second daughter)
/// for one parasite. Optional; by default the two draws are independent.
struct JointOffspring {
  std::vector<std::pair<std::pair<std::uint64_t, std::uint64_t>, double>> atoms;

  OffspringDistribution first_marginal() const;
  OffspringDistribution second_marginal() const;
};

struct CellTreeConfig {
  int n = 1;
  OffspringDistribution law1{{{1, 1.0}}};
  OffspringDistribution law2{{{1, 1.0}}};
  double c = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t replicas = 1;
  std::uint64_t z0 = 1;
  std::optional<JointOffspring> joint;
  unsigned workers = 1;
};

struct CellCounts {
  std::uint64_t below = 0;
  std::uint64_t above = 0;
  /// Parasites in one uniformly chosen cell of generation n.
  Population sampled_cell;
};

struct CellTreeResult {
  std::vector<CellCounts> replicates;
  double mean_below = 0.0;
  double se_below = 0.0;
  double mean_above = 0.0;
  double se_above = 0.0;
};

/// Simulates the binary cell tree to depth n. Cells with at most e^{cn}
/// parasites count as below, cells with at least e^{cn} as above.
CellTreeResult simulate_cell_tree(const CellTreeConfig& config);

/// Two equiprobable environments with the daughters' laws.
EnvironmentLaw cell_lineage_environment(const CellTreeConfig& config);

struct IdentityCheck {
  double lhs = 0.0;
  double lhs_std_error = 0.0;
  double rhs = 0.0;
  double z_score = 0.0;

  bool passes() const { return std::abs(z_score) <= 3.0; }
};

/// Compares the simulated mean number of cells below e^{cn} against
/// 2^n P(Z_n <= e^{cn}) with the probability from the exact oracle.
IdentityCheck expected_count_identity(const CellTreeConfig& config);

}  // namespace bpre
