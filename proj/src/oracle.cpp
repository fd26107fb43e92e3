#include "bpre/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "bpre/error.hpp"

namespace bpre {

namespace {

constexpr std::uint64_t kKernelCapLimit = 2047;
constexpr int kKernelHorizonLimit = 64;
constexpr double kCompositionBudget = 5e7;

// Streams the convolution powers p^{*0}, p^{*1}, ... truncated at cap.
class ConvolutionPowers {
 public:
  ConvolutionPowers(const OffspringDistribution& dist, std::uint64_t cap)
      : dist_(dist), cap_(cap), row_(cap + 1, 0.0), scratch_(cap + 1, 0.0) {
    row_[0] = 1.0;
  }

  const std::vector<double>& row() const { return row_; }
  double overflow() const { return overflow_; }
  /// Lowest index that can carry mass; everything is overflow once it passes the cap.
  std::uint64_t low() const { return low_; }
  /// Highest index that can carry mass, clipped to the cap.
  std::uint64_t high() const { return high_; }
  bool exhausted() const { return low_ > cap_; }

  void advance() {
    // scratch_ is all zero here: it is the previous row, cleared below before the swap.
    double dropped = 0.0;
    for (std::uint64_t j = low_; j <= high_; ++j) {
      const double r = row_[j];
      if (r == 0.0) continue;
      for (const auto& a : dist_.atoms()) {
        const std::uint64_t t = j + a.k;
        if (t > cap_) {
          dropped += r * a.prob;
        } else {
          scratch_[t] += r * a.prob;
        }
      }
      row_[j] = 0.0;
    }
    std::swap(row_, scratch_);
    // Partial sums of offspring counts never decrease, so dropped mass is
    // exactly P(sum > cap).
    overflow_ += dropped;
    low_ += dist_.min_offspring();
    high_ = std::min(cap_, high_ + dist_.max_offspring());
  }

 private:
  const OffspringDistribution& dist_;
  std::uint64_t cap_;
  std::vector<double> row_;
  std::vector<double> scratch_;
  double overflow_ = 0.0;
  std::uint64_t low_ = 0;
  std::uint64_t high_ = 0;
};

double log_multinomial(int n, const std::vector<int>& counts, const std::vector<double>& log_weights) {
  double out = std::lgamma(n + 1.0);
  for (std::size_t j = 0; j < counts.size(); ++j) {
    out -= std::lgamma(counts[j] + 1.0);
    if (counts[j] > 0) out += counts[j] * log_weights[j];
  }
  return out;
}

}  // namespace

double ExactDistribution::total() const {
  double t = overflow;
  for (double p : probs) t += p;
  return t;
}

double ExactDistribution::prob_at_most(std::uint64_t k, double tolerance) const {
  if (k > cap) {
    throw Error(ErrorCode::CapTooSmall, "threshold " + std::to_string(k) + " exceeds cap " + std::to_string(cap));
  }
  if (!monotone && overflow > tolerance) {
    throw Error(ErrorCode::CapTooSmall, "overflow mass " + std::to_string(overflow) + " exceeds tolerance");
  }
  double s = 0.0;
  for (std::uint64_t i = 0; i <= k; ++i) s += probs[i];
  return s;
}

double ExactDistribution::prob_at_least(std::uint64_t k, double tolerance) const {
  if (k == 0) return 1.0;
  if (k > cap + 1) {
    throw Error(ErrorCode::CapTooSmall, "threshold " + std::to_string(k) + " exceeds cap+1");
  }
  if (!monotone && overflow > tolerance) {
    throw Error(ErrorCode::CapTooSmall, "overflow mass " + std::to_string(overflow) + " exceeds tolerance");
  }
  double s = overflow;
  for (std::uint64_t i = k; i <= cap; ++i) s += probs[i];
  return s;
}

ExactDistribution exact_zn_distribution(const EnvironmentLaw& env, int n, std::uint64_t z0, std::uint64_t cap) {
  if (n < 0) throw Error(ErrorCode::InvalidConfig, "horizon must be non-negative");
  if (cap < z0) throw Error(ErrorCode::CapTooSmall, "cap below the initial population");
  if (cap > 10'000'000) throw Error(ErrorCode::BudgetExceeded, "cap above 10^7");

  ExactDistribution out;
  out.n = n;
  out.z0 = z0;
  out.cap = cap;
  out.monotone = env.strongly_supercritical();
  out.probs.assign(cap + 1, 0.0);
  out.probs[z0] = 1.0;

  std::vector<double> next(cap + 1);
  for (int step = 0; step < n; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    double next_overflow = out.overflow;
    std::uint64_t zmax = 0;
    for (std::uint64_t z = 0; z <= cap; ++z) {
      if (out.probs[z] > 0.0) zmax = z;
    }
    for (const auto& comp : env.components()) {
      ConvolutionPowers powers(comp.dist, cap);
      for (std::uint64_t z = 0; z <= zmax; ++z) {
        if (z > 0) powers.advance();
        if (powers.exhausted()) {
          double rest = 0.0;
          for (std::uint64_t r = z; r <= zmax; ++r) rest += out.probs[r];
          next_overflow += comp.weight * rest;
          break;
        }
        const double v = out.probs[z];
        if (v == 0.0) continue;
        const double w = comp.weight * v;
        const auto& row = powers.row();
        for (std::uint64_t j = powers.low(); j <= powers.high(); ++j) next[j] += w * row[j];
        next_overflow += w * powers.overflow();
      }
    }
    std::swap(out.probs, next);
    out.overflow = next_overflow;
  }
  return out;
}

namespace {

// Largest population reachable from z0 in n generations, saturating at limit.
std::uint64_t reachable_bound(const EnvironmentLaw& env, int n, std::uint64_t z0, std::uint64_t limit) {
  std::uint64_t kmax = 0;
  for (const auto& comp : env.components()) kmax = std::max(kmax, comp.dist.max_offspring());
  std::uint64_t bound = z0;
  for (int k = 0; k < n && bound < limit; ++k) {
    if (kmax == 0) return 0;
    bound = bound > limit / kmax ? limit : bound * kmax;
  }
  return std::min(bound, limit);
}

}  // namespace

double exact_population_tail(const EnvironmentLaw& env, int n, std::uint64_t z0, double c, Side side,
                             std::uint64_t max_cap) {
  const double log_threshold = c * n;
  const std::uint64_t reach = std::max(z0, reachable_bound(env, n, z0, max_cap));
  if (side == Side::Lower) {
    const Population x = floor_exp(log_threshold);
    if (x < z0 && env.strongly_supercritical()) return 0.0;
    if (reach < max_cap && x >= reach) return 1.0;
    if (x > max_cap) throw Error(ErrorCode::CapTooSmall, "threshold e^{cn} above the exact-DP cap");
    const auto k = x.convert_to<std::uint64_t>();
    const std::uint64_t cap = env.strongly_supercritical() ? std::max(k, z0) : std::max(k, reach);
    return exact_zn_distribution(env, n, z0, cap).prob_at_most(k);
  }
  const Population x = ceil_exp(log_threshold);
  if (x > reach && reach < max_cap) return 0.0;
  if (x > max_cap) throw Error(ErrorCode::CapTooSmall, "threshold e^{cn} above the exact-DP cap");
  const auto k = x.convert_to<std::uint64_t>();
  const std::uint64_t cap = env.strongly_supercritical() ? std::max<std::uint64_t>(k, z0) : std::max(k, reach);
  return exact_zn_distribution(env, n, z0, cap).prob_at_least(k);
}

double exact_sn_tail(const EnvironmentLaw& env, int n, double c, Side side) {
  if (n < 0) throw Error(ErrorCode::InvalidConfig, "horizon must be non-negative");
  std::map<double, double> grouped;
  for (const auto& comp : env.components()) grouped[comp.log_mean] += comp.weight;
  std::vector<double> levels;
  std::vector<double> log_weights;
  for (const auto& [level, w] : grouped) {
    levels.push_back(level);
    log_weights.push_back(std::log(w));
  }
  const std::size_t d = levels.size();

  // Number of compositions of n into d parts: C(n + d - 1, d - 1).
  double compositions = 1.0;
  for (std::size_t j = 1; j < d; ++j) compositions *= static_cast<double>(n + j) / static_cast<double>(j);
  if (compositions > kCompositionBudget || (d > 3 && n > 40)) {
    throw Error(ErrorCode::TooManyComponents, "composition enumeration beyond budget");
  }

  const double target = c * n;
  const double slack = 1e-9 * std::max(1.0, std::abs(target));
  std::vector<int> counts(d, 0);
  double total = 0.0;
  auto visit = [&](auto&& self, std::size_t j, int left, double partial) -> void {
    if (j + 1 == d) {
      counts[j] = left;
      const double s = partial + left * levels[j];
      const bool hit = side == Side::Lower ? s <= target + slack : s >= target - slack;
      if (hit) total += std::exp(log_multinomial(n, counts, log_weights));
      return;
    }
    for (int k = 0; k <= left; ++k) {
      counts[j] = k;
      self(self, j + 1, left - k, partial + k * levels[j]);
    }
  };
  visit(visit, 0, n, 0.0);
  return std::min(1.0, total);
}

TransitionKernel::TransitionKernel(const EnvironmentLaw& env, std::uint64_t cap)
    : cap_(cap), matrix_((cap + 1) * (cap + 1), 0.0), overflow_(cap + 1, 0.0) {
  if (cap > kKernelCapLimit) throw Error(ErrorCode::BudgetExceeded, "dense kernel limited to cap <= 2047");
  for (const auto& comp : env.components()) {
    ConvolutionPowers powers(comp.dist, cap);
    for (std::uint64_t z = 0; z <= cap; ++z) {
      if (z > 0) powers.advance();
      if (powers.exhausted()) {
        for (std::uint64_t r = z; r <= cap; ++r) overflow_[r] += comp.weight;
        break;
      }
      const auto& row = powers.row();
      double* dst = &matrix_[z * (cap + 1)];
      for (std::uint64_t j = powers.low(); j <= powers.high(); ++j) dst[j] += comp.weight * row[j];
      overflow_[z] += comp.weight * powers.overflow();
    }
  }
}

double TransitionKernel::forward(const std::vector<double>& a, std::vector<double>& out) const {
  out.assign(cap_ + 1, 0.0);
  double over = 0.0;
  for (std::uint64_t z = 0; z <= cap_; ++z) {
    const double v = a[z];
    if (v == 0.0) continue;
    const double* row = &matrix_[z * (cap_ + 1)];
    for (std::uint64_t j = 0; j <= cap_; ++j) out[j] += v * row[j];
    over += v * overflow_[z];
  }
  return over;
}

std::vector<double> TransitionKernel::backward(const std::vector<double>& h, double overflow_value) const {
  std::vector<double> out(cap_ + 1, 0.0);
  for (std::uint64_t z = 0; z <= cap_; ++z) {
    const double* row = &matrix_[z * (cap_ + 1)];
    double s = overflow_[z] * overflow_value;
    for (std::uint64_t j = 0; j <= cap_; ++j) s += row[j] * h[j];
    out[z] = s;
  }
  return out;
}

namespace {

void check_kernel_budget(int n, std::uint64_t z0, std::uint64_t cap) {
  if (n < 1) throw Error(ErrorCode::InvalidConfig, "horizon must be >= 1");
  if (n > kKernelHorizonLimit || cap > kKernelCapLimit) {
    throw Error(ErrorCode::BudgetExceeded, "exact conditional laws limited to n <= 64 and cap <= 2047");
  }
  if (z0 > cap) throw Error(ErrorCode::CapTooSmall, "cap below the initial population");
}

// Terminal indicator of the event on {0..cap} and its value on the overflow
// state. Throws when the overflow state cannot be classified.
std::pair<std::vector<double>, double> terminal_indicator(const EnvironmentLaw& env, int n, double c,
                                                          std::uint64_t cap, Side side, double overflow_mass) {
  std::vector<double> h(cap + 1, 0.0);
  const bool exact_overflow = overflow_mass == 0.0;
  if (!env.strongly_supercritical() && !exact_overflow) {
    throw Error(ErrorCode::CapTooSmall, "population can shrink and mass leaves the cap");
  }
  if (side == Side::Lower) {
    const Population x = floor_exp(c * n);
    for (std::uint64_t z = 0; z <= cap; ++z) h[z] = Population(z) <= x ? 1.0 : 0.0;
    if (!exact_overflow && x > cap) throw Error(ErrorCode::CapTooSmall, "cap below the event threshold");
    return {h, 0.0};
  }
  const Population x = ceil_exp(c * n);
  for (std::uint64_t z = 0; z <= cap; ++z) h[z] = Population(z) >= x ? 1.0 : 0.0;
  if (!exact_overflow) throw Error(ErrorCode::CapTooSmall, "upper-tail conditional law needs zero overflow");
  return {h, 1.0};
}

}  // namespace

ConditionalPath exact_conditional_trajectory(const EnvironmentLaw& env, int n, std::uint64_t z0, double c,
                                             std::uint64_t cap, Side side) {
  check_kernel_budget(n, z0, cap);
  const TransitionKernel kernel(env, cap);

  std::vector<std::vector<double>> forward(n + 1);
  forward[0].assign(cap + 1, 0.0);
  forward[0][z0] = 1.0;
  double overflow_mass = 0.0;
  for (int k = 0; k < n; ++k) overflow_mass += kernel.forward(forward[k], forward[k + 1]);

  auto [h, overflow_value] = terminal_indicator(env, n, c, cap, side, overflow_mass);
  std::vector<std::vector<double>> backward(n + 1);
  backward[n] = std::move(h);
  for (int k = n - 1; k >= 0; --k) backward[k] = kernel.backward(backward[k + 1], overflow_value);

  ConditionalPath out;
  for (std::uint64_t z = 0; z <= cap; ++z) out.event_probability += forward[n][z] * backward[n][z];
  if (out.event_probability <= 0.0) {
    out.event_probability = 0.0;
    return out;
  }
  out.mean_log_z.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    double s = 0.0;
    for (std::uint64_t z = 2; z <= cap; ++z) s += forward[k][z] * backward[k][z] * std::log(static_cast<double>(z));
    out.mean_log_z[k] = s / out.event_probability;
  }
  return out;
}

TakeOffLaw exact_conditional_takeoff(const EnvironmentLaw& env, int n, std::uint64_t z0, double c,
                                     std::uint64_t threshold, std::uint64_t cap) {
  check_kernel_budget(n, z0, cap);
  const TransitionKernel kernel(env, cap);

  // Unrestricted forward pass only to learn whether mass leaves the cap.
  double overflow_mass = 0.0;
  {
    std::vector<double> a(cap + 1, 0.0);
    std::vector<double> b;
    a[z0] = 1.0;
    for (int k = 0; k < n; ++k) {
      overflow_mass += kernel.forward(a, b);
      std::swap(a, b);
    }
  }
  auto [h, overflow_value] = terminal_indicator(env, n, c, cap, Side::Lower, overflow_mass);
  std::vector<std::vector<double>> backward(n + 1);
  backward[n] = std::move(h);
  for (int k = n - 1; k >= 0; --k) backward[k] = kernel.backward(backward[k + 1], overflow_value);

  TakeOffLaw out;
  std::vector<double> joint(n + 1, 0.0);
  if (z0 > threshold) {
    joint[0] = backward[0][z0];
  } else {
    std::vector<double> below(cap + 1, 0.0);
    std::vector<double> full;
    below[z0] = 1.0;
    for (int k = 1; k <= n; ++k) {
      kernel.forward(below, full);
      for (std::uint64_t z = threshold + 1; z <= cap; ++z) joint[k] += full[z] * backward[k][z];
      for (std::uint64_t z = 0; z <= cap; ++z) below[z] = z <= threshold ? full[z] : 0.0;
    }
    for (std::uint64_t z = 0; z <= std::min(threshold, cap); ++z) joint[n] += below[z] * backward[n][z];
  }
  for (double p : joint) out.event_probability += p;
  out.probs.assign(n + 1, 0.0);
  if (out.event_probability <= 0.0) {
    out.event_probability = 0.0;
    return out;
  }
  for (int k = 0; k <= n; ++k) {
    out.probs[k] = joint[k] / out.event_probability;
    out.mean_fraction += out.probs[k] * k / n;
  }
  return out;
}

}  // namespace bpre
