#pragma once

#include <cstdint>
#include <vector>

#include "bpre/environment.hpp"
#include "bpre/population.hpp"
#include "bpre/rate.hpp"

namespace bpre {

/// Exact law of Z_n truncated at `cap`; mass above the cap is pooled in
/// `overflow`.
struct ExactDistribution {
  std::vector<double> probs;
  double overflow = 0.0;
  int n = 0;
  std::uint64_t z0 = 1;
  std::uint64_t cap = 0;
  /// Populations never decrease, so mass above the cap never returns.
  bool monotone = false;

  double total() const;
  /// P(Z_n <= k). Throws CapTooSmall if k > cap, or if the law can shrink
  /// populations and the pooled overflow exceeds `tolerance`.
  double prob_at_most(std::uint64_t k, double tolerance = 1e-12) const;
  /// P(Z_n >= k), same conditions with k - 1 in place of k.
  double prob_at_least(std::uint64_t k, double tolerance = 1e-12) const;
};

ExactDistribution exact_zn_distribution(const EnvironmentLaw& env, int n, std::uint64_t z0, std::uint64_t cap);

/// P(Z_n <= floor(e^{cn})) or P(Z_n >= ceil(e^{cn})) computed with cap at the threshold.
double exact_population_tail(const EnvironmentLaw& env, int n, std::uint64_t z0, double c, Side side,
                             std::uint64_t max_cap = 100000);

/// Exact P(S_n <= nc) (lower) or P(S_n >= nc) (upper) by summing the
/// multinomial law of the counts of each distinct log-mean.
double exact_sn_tail(const EnvironmentLaw& env, int n, double c, Side side);

/// Dense one-generation transition matrix of the population chain on
/// {0..cap}, environments averaged out. Row z holds P(Z_1 = z' | Z_0 = z);
/// `overflow[z]` is the mass sent above the cap.
class TransitionKernel {
 public:
  TransitionKernel(const EnvironmentLaw& env, std::uint64_t cap);

  std::uint64_t cap() const { return cap_; }
  double at(std::uint64_t from, std::uint64_t to) const { return matrix_[from * (cap_ + 1) + to]; }
  double overflow(std::uint64_t from) const { return overflow_[from]; }

  /// a K: one forward step of a row distribution, returns the overflow mass.
  double forward(const std::vector<double>& a, std::vector<double>& out) const;
  /// K h: one backward step of a function of the state; overflow contributes `overflow_value`.
  std::vector<double> backward(const std::vector<double>& h, double overflow_value) const;

 private:
  std::uint64_t cap_;
  std::vector<double> matrix_;
  std::vector<double> overflow_;
};

struct ConditionalPath {
  double event_probability = 0.0;
  /// E[log max(Z_k, 1) | event] for k = 0..n; empty when the event has probability zero.
  std::vector<double> mean_log_z;

  bool empty() const { return mean_log_z.empty(); }
};

/// Exact conditional expectation of log Z_k given Z_n <= e^{cn} (lower) or
/// Z_n >= e^{cn} (upper).
ConditionalPath exact_conditional_trajectory(const EnvironmentLaw& env, int n, std::uint64_t z0, double c,
                                             std::uint64_t cap, Side side = Side::Lower);

struct TakeOffLaw {
  double event_probability = 0.0;
  /// P(tau_n(N) = k | Z_n <= e^{cn}) for k = 0..n.
  std::vector<double> probs;
  double mean_fraction = 0.0;
};

/// Exact conditional law of the take-off time tau_n(N) = min(first k with Z_k > N, n).
TakeOffLaw exact_conditional_takeoff(const EnvironmentLaw& env, int n, std::uint64_t z0, double c,
                                     std::uint64_t threshold, std::uint64_t cap);

}  // namespace bpre
