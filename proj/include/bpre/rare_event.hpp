#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "bpre/environment.hpp"
#include "bpre/estimator.hpp"
#include "bpre/population.hpp"
#include "bpre/rate.hpp"

namespace bpre {

/// Environment law reweighted by m^lambda. Offspring laws are unchanged.
struct TiltedLaw {
  double lambda = 0.0;
  double log_mgf = 0.0;
  std::vector<double> weights;
  /// log(d mu / d mu~)(i) = phi_L(lambda) - lambda L_i.
  std::vector<double> log_lr;
  /// Mean log-mean under the tilt, phi_L'(lambda).
  double mean_log_mean = 0.0;
};

TiltedLaw tilt(const EnvironmentLaw& env, double lambda);

struct IsOptions {
  std::uint64_t z0 = 1;
  unsigned workers = 1;
};

/// One importance-sampled path: populations and log of the path likelihood ratio dP/dQ.
struct WeightedPath {
  std::vector<Population> z;
  std::vector<std::size_t> env_idx;
  double s_n = 0.0;
  double log_weight = 0.0;
};

/// Path under the tilt `lambda` applied to every generation.
WeightedPath simulate_tilted_path(const EnvironmentLaw& env, int n, std::uint64_t z0, double lambda,
                                  std::uint64_t seed, std::uint64_t replica);

/// Unbiased estimate of P(Z_n >= e^{cn}) for c > lbar under the tilt lambda_c;
/// targets at or beyond lmax use a tilt just inside the hull.
EstimatorResult is_estimate_upper(const EnvironmentLaw& env, int n, double c, std::uint64_t replicas,
                                  std::uint64_t seed, const IsOptions& options = {});

struct LowerEstimates {
  /// P(population held at z0 for the first m generations and Z_n <= e^{cn}).
  EstimatorResult two_phase;
  /// P(Z_n <= e^{cn}) with every generation tilted towards c.
  EstimatorResult tilt_only;
  int phase_steps = 0;
};

/// Two-phase estimator with m = round(t_c n) holding steps (or phase_fraction * n),
/// reported alongside the tilt-only estimate of the full event.
LowerEstimates is_estimate_lower(const EnvironmentLaw& env, int n, double c, std::uint64_t replicas,
                                 std::uint64_t seed, std::optional<double> phase_fraction = std::nullopt,
                                 const IsOptions& options = {});

/// Unbiased estimate of the full event P(Z_n <= e^{cn}) that randomizes the
/// length of the initial holding phase and tilts the remaining generations.
EstimatorResult is_estimate_lower_full(const EnvironmentLaw& env, int n, double c, std::uint64_t replicas,
                                       std::uint64_t seed, const IsOptions& options = {});

struct RatePoint {
  int n = 0;
  double rate = 0.0;
  double rate_lo = 0.0;
  double rate_hi = 0.0;
  EstimatorResult estimate;
};

struct RateCurve {
  std::vector<RatePoint> points;
  /// Horizon whose estimate was exactly zero; the curve stops before it.
  std::optional<int> zero_at;
  /// Every estimate was exactly 0 or 1 with zero spread.
  bool degenerate = false;
};

/// Empirical rates -(1/n) log P^ over n_list; lower side uses the holding
/// decomposition, upper side the tilt.
RateCurve rate_curve(const EnvironmentLaw& env, double c, const std::vector<int>& n_list, std::uint64_t replicas,
                     std::uint64_t seed, Side side, const IsOptions& options = {});

struct TakeOffStats {
  /// Self-normalized weight of tau_n(N) = k among event paths, k = 0..n.
  std::vector<double> histogram;
  double mean_fraction = 0.0;
  double std_error = 0.0;
  double ess = 0.0;
  double event_probability = 0.0;
};

TakeOffStats take_off_stats(const EnvironmentLaw& env, int n, double c, std::uint64_t threshold,
                            std::uint64_t replicas, std::uint64_t seed, const IsOptions& options = {});

struct TrajectoryProfile {
  std::vector<double> grid;
  /// Estimated E[(1/n) log Z_[tn] | event] per grid point.
  std::vector<double> mean;
  std::vector<double> std_error;
  /// Reference limit trajectory evaluated on the grid.
  std::vector<double> reference;
  /// Weighted mean of sup_t |(1/n) log Z_[tn] - reference(t)|.
  double sup_distance = 0.0;
  double sup_distance_error = 0.0;
  double ess = 0.0;
  double event_probability = 0.0;
};

/// Conditional trajectory given Z_n <= e^{cn} (lower) or Z_n >= e^{cn} (upper).
/// The reference is f_c below lbar, t -> c t on the upper side and t -> lbar t
/// when the lower event is typical.
TrajectoryProfile conditional_trajectory_profile(const EnvironmentLaw& env, int n, double c, std::uint64_t replicas,
                                                 std::uint64_t seed, const std::vector<double>& grid,
                                                 Side side = Side::Lower, const IsOptions& options = {});

/// sup over t in [0,1] of |(1/n) log Z_[tn] - f(t)| for a nondecreasing linear-piecewise f.
template <class Reference>
double sup_distance(const std::vector<double>& log_z, const Reference& f) {
  const int n = static_cast<int>(log_z.size()) - 1;
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    const double y = log_z[k] / n;
    worst = std::max({worst, std::abs(y - f(static_cast<double>(k) / n)),
                      std::abs(y - f(static_cast<double>(k + 1) / n))});
  }
  return std::max(worst, std::abs(log_z[n] / n - f(1.0)));
}

}  // namespace bpre
