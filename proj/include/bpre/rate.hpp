#pragma once

#include "bpre/environment.hpp"

namespace bpre {

enum class Side { Lower, Upper };

/// Log-Laplace transform of the environment log-mean L and its first two
/// derivatives. The second derivative is the variance of L under the tilt.
struct LogMgf {
  double value;
  double first;
  double second;
};

LogMgf log_mgf(const EnvironmentLaw& env, double lambda);

/// Solves phi_L'(lambda) = c by bracketed bisection. Requires lmin < c < lmax
/// (or c equal to the single log-mean of a degenerate law, which returns 0).
double lambda_star(const EnvironmentLaw& env, double c);

/// Cramer rate function of the walk of log-means. +inf outside [lmin, lmax].
double psi(const EnvironmentLaw& env, double c);

/// psi(c) left of lbar, 0 to the right.
double psi_star(const EnvironmentLaw& env, double c);

/// Two-point Bernoulli rate function; weight_l1 is the weight of the smaller
/// log-mean L1.
double psi_two_env_closed_form(double l1, double l2, double weight_l1, double c);

enum class ChiCase { WithHolding, PureTilt };

struct ChiResult {
  double c;
  double t_c;
  double chi;
  double slope;
  ChiCase kase;
};

/// Lower-deviation rate of the population and its take-off time.
ChiResult chi_and_tc(const EnvironmentLaw& env, double c);

/// Limit trajectory: flat at zero until t_c, then linear up to c at t = 1.
double f_c(const ChiResult& chi, double t);

/// Non-asymptotic bound exp(-n psi(c)) on P(S_n <= nc) (lower) or P(S_n >= nc) (upper).
double chernoff_bound(const EnvironmentLaw& env, int n, double c, Side side);

/// Cached view of the rate functions of one environment law.
class RateProfile {
 public:
  explicit RateProfile(EnvironmentLaw env);

  const EnvironmentLaw& env() const { return env_; }
  double lbar() const { return env_.lbar(); }
  /// -log E(p(1)); +inf when no environment can hold the population at one.
  double rho() const { return rho_; }

  LogMgf log_mgf(double lambda) const { return bpre::log_mgf(env_, lambda); }
  double lambda_star(double c) const { return bpre::lambda_star(env_, c); }
  double psi(double c) const { return bpre::psi(env_, c); }
  double psi_star(double c) const { return bpre::psi_star(env_, c); }
  ChiResult chi(double c) const { return chi_and_tc(env_, c); }

 private:
  EnvironmentLaw env_;
  double rho_;
};

}  // namespace bpre
