#include "bpre/rate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bpre/error.hpp"

namespace bpre {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kResidualTol = 1e-12;

// Rate value together with its slope psi'(c) = lambda_c.
struct PsiPoint {
  double value;
  double slope;
};

double extreme_mass_rate(const EnvironmentLaw& env, double level) {
  double mass = 0.0;
  for (const auto& comp : env.components()) {
    if (comp.log_mean == level) mass += comp.weight;
  }
  return mass >= 1.0 ? 0.0 : -std::log(mass);
}

PsiPoint psi_point(const EnvironmentLaw& env, double c) {
  if (c == env.lbar()) return {0.0, 0.0};
  if (c < env.lmin() || c > env.lmax()) return {kInf, c < env.lmin() ? -kInf : kInf};
  if (c == env.lmin()) return {extreme_mass_rate(env, c), env.degenerate() ? 0.0 : -kInf};
  if (c == env.lmax()) return {extreme_mass_rate(env, c), kInf};
  const double lambda = lambda_star(env, c);
  const double value = c * lambda - log_mgf(env, lambda).value;
  return {std::max(0.0, value), lambda};
}

}  // namespace

LogMgf log_mgf(const EnvironmentLaw& env, double lambda) {
  double top = -kInf;
  for (const auto& comp : env.components()) {
    top = std::max(top, std::log(comp.weight) + lambda * comp.log_mean);
  }
  double total = 0.0;
  double first = 0.0;
  for (const auto& comp : env.components()) {
    const double w = std::exp(std::log(comp.weight) + lambda * comp.log_mean - top);
    total += w;
    first += w * comp.log_mean;
  }
  first /= total;
  double second = 0.0;
  for (const auto& comp : env.components()) {
    const double w = std::exp(std::log(comp.weight) + lambda * comp.log_mean - top) / total;
    const double d = comp.log_mean - first;
    second += w * d * d;
  }
  return {top + std::log(total), first, second};
}

double lambda_star(const EnvironmentLaw& env, double c) {
  if (env.degenerate()) {
    if (c == env.lmin()) return 0.0;
    throw Error(ErrorCode::DegenerateLaw, "all log-means are equal; no tilt reaches c");
  }
  if (!(c > env.lmin() && c < env.lmax())) {
    throw Error(ErrorCode::OutOfHull, "c=" + std::to_string(c) + " outside the open hull (" +
                                          std::to_string(env.lmin()) + ", " + std::to_string(env.lmax()) + ")");
  }
  auto residual = [&](double lambda) { return log_mgf(env, lambda).first - c; };

  double lo = -64.0;
  double hi = 64.0;
  for (int i = 0; residual(lo) > 0.0; ++i) {
    if (i > 40) throw Error(ErrorCode::OutOfHull, "no lower bracket for lambda; c too close to lmin");
    lo *= 2.0;
  }
  for (int i = 0; residual(hi) < 0.0; ++i) {
    if (i > 40) throw Error(ErrorCode::OutOfHull, "no upper bracket for lambda; c too close to lmax");
    hi *= 2.0;
  }

  // Bisection safeguarded Newton: phi' is strictly increasing so the bracket
  // always shrinks around the unique root.
  double x = 0.5 * (lo + hi);
  double best = x;
  double best_residual = kInf;
  for (int iter = 0; iter < 400; ++iter) {
    const LogMgf m = log_mgf(env, x);
    const double g = m.first - c;
    if (std::abs(g) < best_residual) {
      best_residual = std::abs(g);
      best = x;
    }
    if (std::abs(g) <= 0.25 * kResidualTol) break;
    if (g > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    double next = m.second > 0.0 ? x - g / m.second : lo;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
      break;
    }
    x = next;
  }
  return best;
}

double psi(const EnvironmentLaw& env, double c) { return psi_point(env, c).value; }

double psi_star(const EnvironmentLaw& env, double c) { return c <= env.lbar() ? psi(env, c) : 0.0; }

double psi_two_env_closed_form(double l1, double l2, double weight_l1, double c) {
  if (!(l1 < l2) || !(weight_l1 > 0.0 && weight_l1 < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "closed form needs L1 < L2 and weight in (0,1)");
  }
  if (c < l1 || c > l2) throw Error(ErrorCode::OutOfHull, "c outside [L1, L2]");
  // Bernoulli parameter is the probability of an L2 step; z is the fraction of L2 steps.
  const double p = 1.0 - weight_l1;
  const double z = (c - l1) / (l2 - l1);
  auto xlog = [](double x, double ref) { return x > 0.0 ? x * std::log(x / ref) : 0.0; };
  return std::max(0.0, xlog(z, p) + xlog(1.0 - z, 1.0 - p));
}

ChiResult chi_and_tc(const EnvironmentLaw& env, double c) {
  if (!env.strongly_supercritical()) {
    throw Error(ErrorCode::NotStronglySupercritical, "lower-deviation rate needs p(0) = 0 in every environment");
  }
  if (!(c > 0.0 && c < env.lbar())) {
    throw Error(ErrorCode::COutOfRange, "c=" + std::to_string(c) + " must lie in (0, lbar)");
  }
  if (env.mean_p1() == 0.0) return {c, 0.0, psi(env, c), c, ChiCase::PureTilt};

  const double rho = -std::log(env.mean_p1());
  const double lmin = env.lmin();
  const double lbar = env.lbar();
  const double t_hi = 1.0 - c / lbar;
  const double t_lo = c < lmin ? std::min(t_hi, 1.0 - c / lmin) : 0.0;

  auto slope_at = [&](double t) { return std::clamp(c / (1.0 - t), lmin, lbar); };
  auto cost = [&](double t) {
    return rho * t + (1.0 - t) * psi_point(env, slope_at(t)).value;
  };
  // v'(t) = rho - psi(y) + y psi'(y) with y = c / (1 - t).
  auto cost_derivative = [&](double t) {
    const double y = slope_at(t);
    if (y - lmin <= 1e-12 * (1.0 + std::abs(lmin)) && !env.degenerate()) return -kInf;
    const PsiPoint p = psi_point(env, y);
    return rho - p.value + y * p.slope;
  };

  double t_c;
  if (t_hi - t_lo <= 0.0) {
    t_c = t_hi;
  } else {
    const double d_lo = cost_derivative(t_lo);
    const double d_hi = cost_derivative(t_hi);
    if ((d_lo >= 0.0) == (d_hi >= 0.0)) {
      t_c = cost(t_lo) <= cost(t_hi) ? t_lo : t_hi;
    } else {
      double a = t_lo;
      double b = t_hi;
      while (b - a > 1e-13) {
        const double mid = 0.5 * (a + b);
        if (cost_derivative(mid) < 0.0) {
          a = mid;
        } else {
          b = mid;
        }
      }
      t_c = 0.5 * (a + b);
    }
  }
  return {c, t_c, cost(t_c), c / (1.0 - t_c), ChiCase::WithHolding};
}

double f_c(const ChiResult& chi, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::TOutOfRange, "t must lie in [0, 1]");
  if (t <= chi.t_c) return 0.0;
  return chi.c * (t - chi.t_c) / (1.0 - chi.t_c);
}

double chernoff_bound(const EnvironmentLaw& env, int n, double c, Side side) {
  if (n < 0) throw Error(ErrorCode::InvalidConfig, "horizon must be non-negative");
  if (side == Side::Lower && c > env.lbar()) throw Error(ErrorCode::SideMismatch, "lower bound needs c <= lbar");
  if (side == Side::Upper && c < env.lbar()) throw Error(ErrorCode::SideMismatch, "upper bound needs c >= lbar");
  if (n == 0) return 1.0;
  return std::exp(-static_cast<double>(n) * psi(env, c));
}

RateProfile::RateProfile(EnvironmentLaw env)
    : env_(std::move(env)), rho_(env_.mean_p1() > 0.0 ? -std::log(env_.mean_p1()) : kInf) {}

}  // namespace bpre
