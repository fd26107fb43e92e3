#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

namespace bpre {

enum class Method {
  Naive,
  TiltOnly,
  TwoPhase,
  /// Full lower-tail event split on the length of the initial holding phase.
  HoldDecomp,
};

constexpr std::string_view to_string(Method m) {
  switch (m) {
    case Method::Naive: return "Naive";
    case Method::TiltOnly: return "TiltOnly";
    case Method::TwoPhase: return "TwoPhase";
    case Method::HoldDecomp: return "HoldDecomp";
  }
  return "Unknown";
}

struct EstimatorResult {
  double estimate = 0.0;
  double std_error = 0.0;
  /// (sum v)^2 / sum v^2 over the per-replica weighted indicators v.
  double ess = 0.0;
  Method method = Method::Naive;
  int n = 0;
  double c = 0.0;
  std::uint64_t replicas = 0;
  std::uint64_t seed = 0;

  bool is_zero() const { return estimate == 0.0; }
};

/// Mean, standard error and effective sample size of per-replica weighted
/// indicator values. Summation runs in index order.
inline EstimatorResult summarize(std::span<const double> values, Method method, int n, double c,
                                 std::uint64_t seed) {
  EstimatorResult r;
  r.method = method;
  r.n = n;
  r.c = c;
  r.replicas = values.size();
  r.seed = seed;
  if (values.empty()) return r;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : values) {
    sum += v;
    sum_sq += v * v;
  }
  const double count = static_cast<double>(values.size());
  r.estimate = sum / count;
  double centered = 0.0;
  for (double v : values) centered += (v - r.estimate) * (v - r.estimate);
  r.std_error = values.size() > 1 ? std::sqrt(centered / (count - 1.0) / count) : 0.0;
  r.ess = sum_sq > 0.0 ? sum * sum / sum_sq : 0.0;
  return r;
}

}  // namespace bpre
