#include "bpre/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <nlohmann/json.hpp>

#include "bpre/error.hpp"

namespace bpre {

namespace {

constexpr double kMassTolerance = 1e-9;

}  // namespace

OffspringDistribution::OffspringDistribution(std::vector<std::pair<std::uint64_t, double>> pmf) {
  if (pmf.empty()) throw Error(ErrorCode::EmptyPmf, "offspring pmf has no atoms");
  std::sort(pmf.begin(), pmf.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double total = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    const auto [k, p] = pmf[i];
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::NegativeProb, "probability of k=" + std::to_string(k) + " is negative or not finite");
    }
    if (i > 0 && pmf[i - 1].first == k) {
      throw Error(ErrorCode::DuplicateKey, "offspring count " + std::to_string(k) + " appears twice");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw Error(ErrorCode::MassNotOne, "offspring probabilities sum to " + std::to_string(total));
  }
  for (const auto& [k, p] : pmf) {
    if (p > 0.0) atoms_.push_back({k, p / total});
  }
  for (const auto& a : atoms_) {
    const auto kd = static_cast<double>(a.k);
    mean_ += kd * a.prob;
    second_moment_ += kd * kd * a.prob;
  }
}

double OffspringDistribution::prob(std::uint64_t k) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), k,
                             [](const OffspringAtom& a, std::uint64_t key) { return a.k < key; });
  return (it != atoms_.end() && it->k == k) ? it->prob : 0.0;
}

double OffspringDistribution::recompute_mean() const {
  double m = 0.0;
  for (const auto& a : atoms_) m += static_cast<double>(a.k) * a.prob;
  return m;
}

OffspringDistribution build_offspring(std::vector<std::pair<std::uint64_t, double>> pmf) {
  return OffspringDistribution(std::move(pmf));
}

EnvironmentLaw::EnvironmentLaw(std::vector<std::pair<double, OffspringDistribution>> components) {
  if (components.empty()) throw Error(ErrorCode::WeightsNotOne, "environment law has no components");
  double total = 0.0;
  for (const auto& [w, dist] : components) {
    if (!(w > 0.0) || w > 1.0 + kMassTolerance || !std::isfinite(w)) {
      throw Error(ErrorCode::InvalidWeight, "component weight " + std::to_string(w) + " outside (0,1]");
    }
    if (dist.mean() <= 0.0) {
      throw Error(ErrorCode::ZeroMeanComponent, "component with zero mean has undefined log-mean");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw Error(ErrorCode::WeightsNotOne, "environment weights sum to " + std::to_string(total));
  }

  lmin_ = std::numeric_limits<double>::infinity();
  lmax_ = -std::numeric_limits<double>::infinity();
  strongly_supercritical_ = true;
  all_noncrit_below_ = true;
  for (auto& [w, dist] : components) {
    const double q = w / total;
    const double log_mean = std::log(dist.mean());
    lbar_ += q * log_mean;
    mean_p1_ += q * dist.p1();
    lmin_ = std::min(lmin_, log_mean);
    lmax_ = std::max(lmax_, log_mean);
    bound_mean_ = std::max(bound_mean_, dist.mean());
    bound_second_moment_ = std::max(bound_second_moment_, dist.second_moment());
    strongly_supercritical_ = strongly_supercritical_ && dist.p0() == 0.0;
    all_noncrit_below_ = all_noncrit_below_ && dist.mean() <= 1.0;
    components_.push_back({q, std::move(dist), log_mean});
  }
  // Keep lbar inside the hull despite rounding in the weighted sum.
  lbar_ = std::clamp(lbar_, lmin_, lmax_);
  mean_p1_ = std::clamp(mean_p1_, 0.0, 1.0);
}

double EnvironmentLaw::holding_probability(std::uint64_t z) const {
  double h = 0.0;
  for (const auto& c : components_) h += c.weight * std::pow(c.dist.p1(), static_cast<double>(z));
  return h;
}

OffspringDistribution EnvironmentLaw::lineage_law() const {
  std::vector<std::pair<std::uint64_t, double>> mixed;
  for (const auto& c : components_) {
    for (const auto& a : c.dist.atoms()) {
      auto it = std::find_if(mixed.begin(), mixed.end(), [&](const auto& e) { return e.first == a.k; });
      if (it == mixed.end()) {
        mixed.emplace_back(a.k, c.weight * a.prob);
      } else {
        it->second += c.weight * a.prob;
      }
    }
  }
  return OffspringDistribution(std::move(mixed));
}

std::vector<double> EnvironmentLaw::weights() const {
  std::vector<double> w;
  w.reserve(components_.size());
  for (const auto& c : components_) w.push_back(c.weight);
  return w;
}

std::string EnvironmentLaw::fingerprint() const { return fnv1a_hex(serialize_environment(*this)); }

EnvironmentLaw build_environment(std::vector<std::pair<double, OffspringDistribution>> components) {
  return EnvironmentLaw(std::move(components));
}

EnvironmentLaw environment_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("environments") || !j.at("environments").is_array()) {
    throw Error(ErrorCode::InvalidConfig, "expected an object with an \"environments\" array");
  }
  std::vector<std::pair<double, OffspringDistribution>> components;
  for (const auto& e : j.at("environments")) {
    if (!e.is_object() || !e.contains("weight") || !e.contains("pmf") || !e.at("pmf").is_object() ||
        !e.at("weight").is_number()) {
      throw Error(ErrorCode::InvalidConfig, "each environment needs a numeric \"weight\" and a \"pmf\" object");
    }
    std::vector<std::pair<std::uint64_t, double>> pmf;
    for (const auto& [key, value] : e.at("pmf").items()) {
      if (key.empty() || !std::all_of(key.begin(), key.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
        throw Error(ErrorCode::InvalidConfig, "pmf key \"" + key + "\" is not a decimal integer");
      }
      if (!value.is_number()) throw Error(ErrorCode::InvalidConfig, "pmf value for \"" + key + "\" is not a number");
      pmf.emplace_back(std::stoull(key), value.get<double>());
    }
    components.emplace_back(e.at("weight").get<double>(), OffspringDistribution(std::move(pmf)));
  }
  return EnvironmentLaw(std::move(components));
}

nlohmann::json environment_to_json(const EnvironmentLaw& env) {
  nlohmann::json envs = nlohmann::json::array();
  for (const auto& c : env.components()) {
    nlohmann::json pmf = nlohmann::json::object();
    for (const auto& a : c.dist.atoms()) pmf[std::to_string(a.k)] = a.prob;
    envs.push_back({{"weight", c.weight}, {"pmf", pmf}});
  }
  return {{"environments", envs}};
}

EnvironmentLaw parse_environment(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return environment_from_json(j);
}

std::string serialize_environment(const EnvironmentLaw& env) { return environment_to_json(env).dump(); }

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace bpre
