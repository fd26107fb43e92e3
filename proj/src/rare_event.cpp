#include "bpre/rare_event.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "bpre/error.hpp"
#include "bpre/parallel.hpp"
#include "bpre/rng.hpp"
#include "bpre/simulator.hpp"

namespace bpre {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Share of the holding-length proposal spread uniformly over all lengths.
constexpr double kDefensiveShare = 0.1;
// Tilt targets are kept this fraction of the hull width inside the hull.
constexpr double kHullMargin = 0.02;
// Lower targets near lmin are reached partly through small litters, so the
// lower tilt stops further from the edge.
constexpr double kLowerMargin = 0.15;

enum class StepKind { Free, Hold, Exit };

// Proposal for one generation: environment weights, the log likelihood ratio
// of each environment choice, and how individuals reproduce.
struct StepLaw {
  StepKind kind = StepKind::Free;
  std::vector<double> weights;
  std::vector<double> log_ratio;
};

StepLaw free_step(const TiltedLaw& t) { return {StepKind::Free, t.weights, t.log_lr}; }

// Every individual has exactly one child; environments drawn with weights
// q_i p1_i^z, each choice carrying the same ratio H = sum_i q_i p1_i^z.
StepLaw hold_step(const EnvironmentLaw& env, std::uint64_t z0) {
  const double h = env.holding_probability(z0);
  StepLaw s{StepKind::Hold, {}, {}};
  for (const auto& comp : env.components()) {
    s.weights.push_back(comp.weight * std::pow(comp.dist.p1(), static_cast<double>(z0)) / h);
    s.log_ratio.push_back(std::log(h));
  }
  return s;
}

// First generation that leaves z0: environments drawn from the tilt restricted
// to the environments that can move, offspring conditioned on not all ones.
StepLaw exit_step(const EnvironmentLaw& env, const TiltedLaw& t, std::uint64_t z0) {
  StepLaw s{StepKind::Exit, {}, {}};
  double total = 0.0;
  for (std::size_t i = 0; i < env.size(); ++i) {
    const double move = 1.0 - std::pow(env[i].dist.p1(), static_cast<double>(z0));
    s.weights.push_back(t.weights[i] * move);
    total += s.weights.back();
  }
  for (std::size_t i = 0; i < env.size(); ++i) {
    s.weights[i] /= total;
    const double move = 1.0 - std::pow(env[i].dist.p1(), static_cast<double>(z0));
    s.log_ratio.push_back(s.weights[i] > 0.0 ? std::log(env[i].weight * move) - std::log(s.weights[i]) : kInf);
  }
  return s;
}

WeightedPath simulate_schedule(const EnvironmentLaw& env, const std::vector<const StepLaw*>& schedule,
                               std::uint64_t z0, std::uint64_t seed, std::uint64_t replica) {
  WeightedPath path;
  path.z.reserve(schedule.size() + 1);
  path.z.emplace_back(z0);
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const StepLaw& law = *schedule[k];
    Philox rng = make_stream(seed, replica, static_cast<std::uint32_t>(k));
    const std::size_t i = sample_index(law.weights, rng.uniform());
    const Population& z = path.z.back();
    Population next;
    switch (law.kind) {
      case StepKind::Free:
        next = branch_step(z, env[i].dist, rng);
        break;
      case StepKind::Hold:
        next = z;
        break;
      case StepKind::Exit:
        do {
          next = branch_step(z, env[i].dist, rng);
        } while (next == z);
        break;
    }
    path.z.push_back(std::move(next));
    path.env_idx.push_back(i);
    path.s_n += env[i].log_mean;
    path.log_weight += law.log_ratio[i];
  }
  return path;
}

void require_strongly_supercritical(const EnvironmentLaw& env) {
  if (!env.strongly_supercritical()) {
    throw Error(ErrorCode::NotStronglySupercritical, "importance sampling needs p(0) = 0 in every environment");
  }
}

// Tilt aiming the walk of log-means at `target` on the lower side: no tilt
// once the target is typical, and a target kept off the hull edge.
TiltedLaw lower_tilt(const EnvironmentLaw& env, double target) {
  if (env.degenerate() || target >= env.lbar()) return tilt(env, 0.0);
  const double floor = env.lmin() + kLowerMargin * (env.lmax() - env.lmin());
  return tilt(env, lambda_star(env, std::max(target, std::min(floor, env.lbar()))));
}

// Upper-side counterpart: targets at or beyond lmax aim just inside the hull.
TiltedLaw upper_tilt(const EnvironmentLaw& env, double target) {
  if (env.degenerate() || target <= env.lbar()) return tilt(env, 0.0);
  const double ceiling = env.lmax() - kHullMargin * (env.lmax() - env.lmin());
  return tilt(env, lambda_star(env, std::min(target, std::max(ceiling, env.lbar()))));
}

// Proposal of the holding-phase length m in 0..n for the full lower event.
struct HoldingPlan {
  std::vector<double> probs;
  std::vector<TiltedLaw> tilts;
  std::vector<StepLaw> exits;
  StepLaw hold;
};

HoldingPlan make_holding_plan(const EnvironmentLaw& env, int n, double c, std::uint64_t z0) {
  HoldingPlan plan;
  const double h = env.holding_probability(z0);
  const double log_target = c * n - std::log(static_cast<double>(z0));
  plan.probs.assign(n + 1, 0.0);
  if (h <= 0.0) {
    plan.probs[0] = 1.0;
  } else if (h >= 1.0) {
    // Nobody can ever leave z0.
    plan.probs[n] = 1.0;
    plan.hold = hold_step(env, z0);
    return plan;
  } else {
    const double log_h = std::log(h);
    std::vector<double> score(n + 1, -kInf);
    for (int m = 0; m <= n; ++m) {
      if (m == n) {
        score[m] = log_target >= 0.0 ? n * log_h : -kInf;
        continue;
      }
      const double slope = log_target / (n - m);
      const double cost = slope >= env.lbar() ? 0.0 : psi(env, slope);
      score[m] = m * log_h - (n - m) * cost;
    }
    const double top = *std::max_element(score.begin(), score.end());
    double total = 0.0;
    if (std::isfinite(top)) {
      for (double s : score) total += std::exp(s - top);
    }
    for (int m = 0; m <= n; ++m) {
      const double shaped = total > 0.0 ? std::exp(score[m] - top) / total : 0.0;
      const double share = total > 0.0 ? kDefensiveShare : 1.0;
      plan.probs[m] = (1.0 - share) * shaped + share / (n + 1);
    }
    plan.hold = hold_step(env, z0);
  }
  for (int m = 0; m < n; ++m) {
    plan.tilts.push_back(lower_tilt(env, log_target / (n - m)));
    plan.exits.push_back(exit_step(env, plan.tilts.back(), z0));
  }
  return plan;
}

// Holding length of replica r drawn from its auxiliary stream.
int draw_holding_length(const HoldingPlan& plan, std::uint64_t seed, std::uint64_t replica) {
  Philox rng = make_stream(seed, replica, kAuxStep);
  return static_cast<int>(sample_index(plan.probs, rng.uniform()));
}

WeightedPath simulate_holding_path(const EnvironmentLaw& env, const HoldingPlan& plan, int n, std::uint64_t z0,
                                   std::uint64_t seed, std::uint64_t replica) {
  const int m = draw_holding_length(plan, seed, replica);
  std::vector<const StepLaw*> schedule;
  schedule.reserve(n);
  for (int k = 0; k < m; ++k) schedule.push_back(&plan.hold);
  StepLaw free;
  if (m < n) {
    schedule.push_back(&plan.exits[m]);
    free = free_step(plan.tilts[m]);
    for (int k = m + 1; k < n; ++k) schedule.push_back(&free);
  }
  WeightedPath path = simulate_schedule(env, schedule, z0, seed, replica);
  path.log_weight -= std::log(plan.probs[m]);
  return path;
}

void check_lower_range(const EnvironmentLaw& env, double c) {
  if (!(c > 0.0 && c < env.lbar())) throw Error(ErrorCode::COutOfRange, "lower deviations need 0 < c < lbar");
}

double weighted_indicator(const WeightedPath& path, bool hit) { return hit ? std::exp(path.log_weight) : 0.0; }

// Accumulator for self-normalized estimates of several conditional means.
struct SelfNormalized {
  double sum_w = 0.0;
  double sum_w2 = 0.0;

  void add(double w) {
    sum_w += w;
    sum_w2 += w * w;
  }
  double ess() const { return sum_w2 > 0.0 ? sum_w * sum_w / sum_w2 : 0.0; }
};

// Ratio estimate and its delta-method standard error.
std::pair<double, double> ratio_estimate(const std::vector<double>& w, const std::vector<double>& f) {
  double sw = 0.0;
  double swf = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    sw += w[i];
    swf += w[i] * f[i];
  }
  if (sw <= 0.0) return {0.0, 0.0};
  const double r = swf / sw;
  double var = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) var += w[i] * w[i] * (f[i] - r) * (f[i] - r);
  return {r, std::sqrt(var) / sw};
}

}  // namespace

TiltedLaw tilt(const EnvironmentLaw& env, double lambda) {
  TiltedLaw t;
  t.lambda = lambda;
  const LogMgf m = log_mgf(env, lambda);
  t.log_mgf = m.value;
  t.mean_log_mean = m.first;
  for (const auto& comp : env.components()) {
    const double log_lr = m.value - lambda * comp.log_mean;
    t.log_lr.push_back(log_lr);
    t.weights.push_back(comp.weight * std::exp(-log_lr));
  }
  double total = 0.0;
  for (double w : t.weights) total += w;
  for (double& w : t.weights) w /= total;
  return t;
}

WeightedPath simulate_tilted_path(const EnvironmentLaw& env, int n, std::uint64_t z0, double lambda,
                                  std::uint64_t seed, std::uint64_t replica) {
  const StepLaw step = free_step(tilt(env, lambda));
  const std::vector<const StepLaw*> schedule(n, &step);
  return simulate_schedule(env, schedule, z0, seed, replica);
}

EstimatorResult is_estimate_upper(const EnvironmentLaw& env, int n, double c, std::uint64_t replicas,
                                  std::uint64_t seed, const IsOptions& options) {
  require_strongly_supercritical(env);
  if (!(c > env.lbar())) throw Error(ErrorCode::COutOfRange, "upper deviations need c > lbar");
  if (n < 1 || replicas < 1) throw Error(ErrorCode::InvalidConfig, "n and replicas must be positive");
  const StepLaw step = free_step(upper_tilt(env, c));
  const std::vector<const StepLaw*> schedule(n, &step);
  const Population x = ceil_exp(c * n);
  const auto values = parallel_map<double>(replicas, options.workers, [&](std::uint64_t r) {
    const WeightedPath path = simulate_schedule(env, schedule, options.z0, seed, r);
    return weighted_indicator(path, path.z.back() >= x);
  });
  return summarize(values, Method::TiltOnly, n, c, seed);
}

LowerEstimates is_estimate_lower(const EnvironmentLaw& env, int n, double c, std::uint64_t replicas,
                                 std::uint64_t seed, std::optional<double> phase_fraction,
                                 const IsOptions& options) {
  require_strongly_supercritical(env);
  check_lower_range(env, c);
  if (n < 1 || replicas < 1) throw Error(ErrorCode::InvalidConfig, "n and replicas must be positive");
  const std::uint64_t z0 = options.z0;
  const double h = env.holding_probability(z0);
  if (phase_fraction && *phase_fraction > 0.0 && h <= 0.0) {
    throw Error(ErrorCode::NoHoldingPossible, "no environment lets every individual have one child");
  }
  if (phase_fraction && !(*phase_fraction >= 0.0 && *phase_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "phase fraction must lie in [0, 1]");
  }
  const double fraction = phase_fraction ? *phase_fraction : (h > 0.0 ? chi_and_tc(env, c).t_c : 0.0);
  const int m = static_cast<int>(std::lround(fraction * n));
  const double log_target = c * n - std::log(static_cast<double>(z0));
  const Population x = floor_exp(c * n);

  const StepLaw tilt_all = free_step(lower_tilt(env, log_target / n));
  const std::vector<const StepLaw*> tilt_schedule(n, &tilt_all);

  const StepLaw hold = h > 0.0 ? hold_step(env, z0) : StepLaw{};
  const StepLaw tail = m < n ? free_step(lower_tilt(env, log_target / (n - m))) : StepLaw{};
  std::vector<const StepLaw*> phased(n, &tail);
  for (int k = 0; k < m; ++k) phased[k] = &hold;

  LowerEstimates out;
  out.phase_steps = m;
  const auto phased_values = parallel_map<double>(replicas, options.workers, [&](std::uint64_t r) {
    const WeightedPath path = simulate_schedule(env, phased, z0, seed, r);
    return weighted_indicator(path, path.z.back() <= x);
  });
  out.two_phase = summarize(phased_values, Method::TwoPhase, n, c, seed);
  const auto tilt_values = parallel_map<double>(replicas, options.workers, [&](std::uint64_t r) {
    const WeightedPath path = simulate_schedule(env, tilt_schedule, z0, seed, r);
    return weighted_indicator(path, path.z.back() <= x);
  });
  out.tilt_only = summarize(tilt_values, Method::TiltOnly, n, c, seed);
  return out;
}

EstimatorResult is_estimate_lower_full(const EnvironmentLaw& env, int n, double c, std::uint64_t replicas,
                                       std::uint64_t seed, const IsOptions& options) {
  require_strongly_supercritical(env);
  if (!(c > 0.0)) throw Error(ErrorCode::COutOfRange, "lower deviations need c > 0");
  if (n < 1 || replicas < 1) throw Error(ErrorCode::InvalidConfig, "n and replicas must be positive");
  const HoldingPlan plan = make_holding_plan(env, n, c, options.z0);
  const Population x = floor_exp(c * n);
  const auto values = parallel_map<double>(replicas, options.workers, [&](std::uint64_t r) {
    const WeightedPath path = simulate_holding_path(env, plan, n, options.z0, seed, r);
    return weighted_indicator(path, path.z.back() <= x);
  });
  return summarize(values, Method::HoldDecomp, n, c, seed);
}

RateCurve rate_curve(const EnvironmentLaw& env, double c, const std::vector<int>& n_list, std::uint64_t replicas,
                     std::uint64_t seed, Side side, const IsOptions& options) {
  RateCurve curve;
  bool all_trivial = true;
  for (int n : n_list) {
    const EstimatorResult est = side == Side::Lower ? is_estimate_lower_full(env, n, c, replicas, seed, options)
                                                    : is_estimate_upper(env, n, c, replicas, seed, options);
    all_trivial = all_trivial && est.std_error == 0.0 && (est.estimate == 0.0 || est.estimate == 1.0);
    if (est.is_zero()) {
      curve.zero_at = n;
      break;
    }
    RatePoint p;
    p.n = n;
    p.estimate = est;
    p.rate = -std::log(est.estimate) / n;
    p.rate_lo = -std::log(est.estimate + est.std_error) / n;
    p.rate_hi = est.estimate > est.std_error ? -std::log(est.estimate - est.std_error) / n : kInf;
    curve.points.push_back(p);
  }
  curve.degenerate = all_trivial;
  return curve;
}

namespace {

// Per-replica summary of a weighted path restricted to what the conditional
// statistics need.
struct ConditionalSample {
  double weight = 0.0;
  int take_off = 0;
  std::vector<double> log_z;
};

std::vector<ConditionalSample> lower_conditional_samples(const EnvironmentLaw& env, int n, double c,
                                                         std::uint64_t replicas, std::uint64_t seed,
                                                         std::uint64_t threshold, const IsOptions& options) {
  require_strongly_supercritical(env);
  if (!(c > 0.0)) throw Error(ErrorCode::COutOfRange, "lower deviations need c > 0");
  if (n < 1 || replicas < 1) throw Error(ErrorCode::InvalidConfig, "n and replicas must be positive");
  const HoldingPlan plan = make_holding_plan(env, n, c, options.z0);
  const Population x = floor_exp(c * n);
  const Population big_n(threshold);
  return parallel_map<ConditionalSample>(replicas, options.workers, [&](std::uint64_t r) {
    const WeightedPath path = simulate_holding_path(env, plan, n, options.z0, seed, r);
    ConditionalSample s;
    s.weight = weighted_indicator(path, path.z.back() <= x);
    if (s.weight > 0.0) {
      s.take_off = take_off_time(path.z, big_n);
      for (const auto& z : path.z) s.log_z.push_back(z > 1 ? log_population(z) : 0.0);
    }
    return s;
  });
}

}  // namespace

TakeOffStats take_off_stats(const EnvironmentLaw& env, int n, double c, std::uint64_t threshold,
                            std::uint64_t replicas, std::uint64_t seed, const IsOptions& options) {
  const auto samples = lower_conditional_samples(env, n, c, replicas, seed, threshold, options);
  TakeOffStats out;
  out.histogram.assign(n + 1, 0.0);
  std::vector<double> w;
  std::vector<double> frac;
  SelfNormalized acc;
  for (const auto& s : samples) {
    out.event_probability += s.weight;
    if (s.weight <= 0.0) continue;
    acc.add(s.weight);
    w.push_back(s.weight);
    frac.push_back(static_cast<double>(s.take_off) / n);
    out.histogram[s.take_off] += s.weight;
  }
  out.event_probability /= static_cast<double>(replicas);
  if (acc.sum_w <= 0.0) throw Error(ErrorCode::NoEventMass, "no replica satisfied Z_n <= e^{cn}");
  for (double& h : out.histogram) h /= acc.sum_w;
  std::tie(out.mean_fraction, out.std_error) = ratio_estimate(w, frac);
  out.ess = acc.ess();
  return out;
}

TrajectoryProfile conditional_trajectory_profile(const EnvironmentLaw& env, int n, double c, std::uint64_t replicas,
                                                 std::uint64_t seed, const std::vector<double>& grid, Side side,
                                                 const IsOptions& options) {
  for (double t : grid) {
    if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::TOutOfRange, "grid points must lie in [0, 1]");
  }
  std::vector<ConditionalSample> samples;
  std::function<double(double)> reference;
  if (side == Side::Lower) {
    samples = lower_conditional_samples(env, n, c, replicas, seed, 0, options);
    if (c < env.lbar()) {
      const ChiResult chi = chi_and_tc(env, c);
      reference = [chi](double t) { return f_c(chi, t); };
    } else {
      const double lbar = env.lbar();
      reference = [lbar](double t) { return lbar * t; };
    }
  } else {
    require_strongly_supercritical(env);
    if (!(c > env.lbar())) throw Error(ErrorCode::COutOfRange, "upper deviations need c > lbar");
    const StepLaw step = free_step(upper_tilt(env, c));
    const std::vector<const StepLaw*> schedule(n, &step);
    const Population x = ceil_exp(c * n);
    samples = parallel_map<ConditionalSample>(replicas, options.workers, [&](std::uint64_t r) {
      const WeightedPath path = simulate_schedule(env, schedule, options.z0, seed, r);
      ConditionalSample s;
      s.weight = weighted_indicator(path, path.z.back() >= x);
      if (s.weight > 0.0) {
        for (const auto& z : path.z) s.log_z.push_back(z > 1 ? log_population(z) : 0.0);
      }
      return s;
    });
    reference = [c](double t) { return c * t; };
  }

  TrajectoryProfile out;
  out.grid = grid;
  std::vector<double> w;
  std::vector<double> sup;
  std::vector<std::vector<double>> per_point(grid.size());
  SelfNormalized acc;
  for (const auto& s : samples) {
    out.event_probability += s.weight;
    if (s.weight <= 0.0) continue;
    acc.add(s.weight);
    w.push_back(s.weight);
    sup.push_back(sup_distance(s.log_z, reference));
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto k = static_cast<std::size_t>(std::floor(grid[g] * n + 1e-9));
      per_point[g].push_back(s.log_z[std::min<std::size_t>(k, n)] / n);
    }
  }
  out.event_probability /= static_cast<double>(replicas);
  if (acc.sum_w <= 0.0) throw Error(ErrorCode::NoEventMass, "no replica satisfied the conditioning event");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto [mean, se] = ratio_estimate(w, per_point[g]);
    out.mean.push_back(mean);
    out.std_error.push_back(se);
    out.reference.push_back(reference(grid[g]));
  }
  std::tie(out.sup_distance, out.sup_distance_error) = ratio_estimate(w, sup);
  out.ess = acc.ess();
  return out;
}

}  // namespace bpre
