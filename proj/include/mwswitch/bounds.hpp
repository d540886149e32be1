#pragma once

// Closed-form moment and queue-length bounds for the switch under MaxWeight.
//
// Every function returns the raw value of its expression. Nothing is clamped;
// a value that overflows double precision comes back as +inf and the report
// carries overflow = true. Bounds evaluated outside their regime of validity
// are still returned, with applicable = false.

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "mwswitch/core_model.hpp"

namespace mwswitch {

/// Drift conditions on a nonnegative Lyapunov function Z: expected one-step
/// drift <= -eta whenever Z >= kappa, and |dZ| <= D almost surely.
struct DriftParams {
  double kappa = 0.0;
  double eta = 1.0;
  double D = 1.0;

  DriftParams(double kappa_, double eta_, double D_) : kappa(kappa_), eta(eta_), D(D_) {
    if (!(kappa >= 0.0)) throw std::invalid_argument("DriftParams: kappa must be >= 0");
    if (!(eta > 0.0)) throw std::invalid_argument("DriftParams: eta must be > 0");
    if (!(D > 0.0)) throw std::invalid_argument("DriftParams: D must be > 0");
    if (eta > D) throw std::invalid_argument("DriftParams: eta cannot exceed D");
  }
};

/// Bound on P(Z > kappa + 2 D m) in steady state: (D / (D + eta))^(m+1).
inline double drift_tail_bound(const DriftParams& p, int m) {
  if (m < 0) throw std::invalid_argument("drift_tail_bound: m must be >= 0");
  return std::pow(p.D / (p.D + p.eta), m + 1);
}

/// Bound on E[Z^r] in steady state: (2 kappa)^r + (4 D)^r ((D + eta) / eta)^r r!.
/// Returns +inf when the value exceeds the double range.
inline double drift_moment_bound(const DriftParams& p, int r) {
  if (r < 1) throw std::invalid_argument("drift_moment_bound: r must be >= 1");
  const double v = std::pow(2.0 * p.kappa, r) +
                   std::pow(4.0 * p.D * (p.D + p.eta) / p.eta, r) * std::tgamma(static_cast<double>(r) + 1.0);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

struct BoundReport {
  double lower = 0.0;
  double upper = 0.0;
  std::map<std::string, double> terms;
  bool applicable = true;
  bool overflow = false;
  std::vector<std::string> warnings;
};

struct FlaggedValue {
  double value = 0.0;
  bool applicable = true;
};

namespace detail {

inline void mark_overflow(BoundReport& b) {
  b.overflow = !std::isfinite(b.lower) || !std::isfinite(b.upper);
  for (const auto& [k, v] : b.terms) b.overflow = b.overflow || !std::isfinite(v);
}

inline void require_bracket_r(int r) {
  if (r < 2) throw std::invalid_argument("queue-length brackets need r >= 2");
}

}  // namespace detail

/// Lower bound on the steady-state total queue length valid for every
/// stabilizing policy: ||sigma||^2 / (2 eps) - n (1 - eps) / 2.
inline double universal_lower_bound(const TrafficModel& model) {
  const ValidationReport v = validate_traffic(model);
  return v.sigma_norm2 / (2.0 * v.epsilon) - v.n * (1.0 - v.epsilon) / 2.0;
}

/// Collapse constant M_r from its ingredients.
inline double ssc_moment_constant(int r, int n, int a_max, double nu_min, double lambda_norm2, double sigma_norm2) {
  if (r < 1) throw std::invalid_argument("ssc_moment_constant: r must be >= 1");
  const double rr = r;
  const double na = static_cast<double>(n) * a_max;
  const double drift_term = 8.0 * (lambda_norm2 + sigma_norm2 + n) / nu_min;
  const double step_term =
      std::pow(std::sqrt(rr) * std::numbers::e, 1.0 / rr) * 16.0 * (rr / std::numbers::e) * (na / nu_min) * (na + 1.0);
  const double v = std::pow(2.0, 1.0 / rr) * std::max(drift_term, step_term);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

/// M_r for a traffic model; applicable = false when eps > nu_min / (2 ||nu||).
inline FlaggedValue ssc_moment_constant(int r, const TrafficModel& model) {
  const ValidationReport v = validate_traffic(model);
  return {ssc_moment_constant(r, v.n, v.a_max, v.nu_min, v.lambda_norm2, v.sigma_norm2), v.ssc_applicable};
}

/// Drift parameters of ||q_perp|| used to derive the collapse constant:
/// kappa = 4 (||lambda||^2 + ||sigma||^2 + n) / nu_min, eta = nu_min / 4, D = n a_max.
inline DriftParams ssc_drift_params(const TrafficModel& model) {
  const ValidationReport v = validate_traffic(model);
  if (!(v.nu_min > 0.0)) throw std::invalid_argument("ssc_drift_params: needs nu_min > 0");
  return DriftParams(4.0 * (v.lambda_norm2 + v.sigma_norm2 + v.n) / v.nu_min, v.nu_min / 4.0,
                     static_cast<double>(v.n) * v.a_max);
}

/// Bracket on E[sum q] under MaxWeight for general traffic on the face.
inline BoundReport theorem1_bracket(const TrafficModel& model, int r = 2) {
  detail::require_bracket_r(r);
  const ValidationReport v = validate_traffic(model);
  const double n = v.n, eps = v.epsilon, rr = r;
  const double m_r = ssc_moment_constant(r, v.n, v.a_max, v.nu_min, v.lambda_norm2, v.sigma_norm2);
  const double collapse = std::pow(n, 2.0 - 1.0 / rr) * std::pow(eps, -1.0 / rr) * m_r;
  const double leading = (1.0 - 1.0 / (2.0 * n)) * v.sigma_norm2 / eps;
  const double b1 = -n * eps / 2.0 + n + 3.0 * collapse;
  const double b2 = n * (1.0 + eps) / 2.0 + 2.0 * collapse;

  BoundReport b;
  b.lower = leading - b1;
  b.upper = leading + b2;
  b.terms = {{"n", n},
             {"epsilon", eps},
             {"r", rr},
             {"sigma_norm2", v.sigma_norm2},
             {"lambda_norm2", v.lambda_norm2},
             {"nu_min", v.nu_min},
             {"M_r", m_r},
             {"leading", leading},
             {"B1", b1},
             {"B2", b2},
             {"ulb", universal_lower_bound(model)}};
  b.applicable = v.ssc_applicable;
  if (!b.applicable) b.warnings.emplace_back("epsilon exceeds nu_min / (2 ||nu||); bracket not guaranteed");
  detail::mark_overflow(b);
  return b;
}

/// Collapse constant for uniform Bernoulli traffic: (2 sqrt(r) e)^(1/r) 16 (r/e) n^2 (n+1).
inline double bernoulli_ssc_constant(int n, int r) {
  if (r < 1) throw std::invalid_argument("bernoulli_ssc_constant: r must be >= 1");
  const double rr = r, nn = n;
  return std::pow(2.0 * std::sqrt(rr) * std::numbers::e, 1.0 / rr) * 16.0 * (rr / std::numbers::e) * nn * nn *
         (nn + 1.0);
}

/// Bracket for uniform Bernoulli traffic, lambda_ij = (1 - eps) / n.
inline BoundReport bernoulli_bracket(int n, double epsilon, int r = 2) {
  detail::require_bracket_r(r);
  if (n < 2) throw std::invalid_argument("bernoulli_bracket: n must be >= 2");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("bernoulli_bracket: epsilon must lie in (0, 1)");
  const double nn = n, eps = epsilon, rr = r;
  const double m_r = bernoulli_ssc_constant(n, r);
  const double collapse = std::pow(nn, 2.0 - 1.0 / rr) * std::pow(eps, -1.0 / rr) * m_r;
  const double shape = (1.0 - eps / 2.0) * (nn - 2.0 + 1.0 / nn);
  const double leading = (nn - 1.5 + 1.0 / (2.0 * nn)) / eps;
  const double b1 = shape + nn - 0.5 + 3.0 * collapse;
  const double b2 = -shape + (nn + 1.0) / 2.0 + 2.0 * collapse;

  BoundReport b;
  b.lower = leading - b1;
  b.upper = leading + b2;
  b.terms = {{"n", nn},
             {"epsilon", eps},
             {"r", rr},
             {"sigma_norm2", (1.0 - eps) * (nn - (1.0 - eps))},
             {"M_r", m_r},
             {"leading", leading},
             {"B1", b1},
             {"B2", b2},
             {"ulb", (1.0 - eps) * (1.0 - eps) * (nn - 1.0) / (2.0 * eps)}};
  b.applicable = eps <= 1.0 / (2.0 * nn) * (1.0 + 1e-12);
  if (!b.applicable) b.warnings.emplace_back("epsilon exceeds 1/(2n); bracket not guaranteed");
  detail::mark_overflow(b);
  return b;
}

/// Universal lower bound when eps = gamma n^-beta: (1 - gamma n^-beta)^2 n^beta (n - 1) / (2 gamma).
inline double scaling_regime_lower_bound(int n, double beta, double gamma) {
  const double nn = n;
  const double eps = gamma * std::pow(nn, -beta);
  return (1.0 - eps) * (1.0 - eps) * std::pow(nn, beta) * (nn - 1.0) / (2.0 * gamma);
}

/// Bracket n^(1+beta)/gamma -/+ B3(n), B4(n) for Bernoulli traffic with eps = gamma n^-beta.
inline BoundReport scaling_regime_bracket(int n, double beta, double gamma, int r) {
  detail::require_bracket_r(r);
  if (n < 2) throw std::invalid_argument("scaling_regime_bracket: n must be >= 2");
  if (!(beta > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("scaling_regime_bracket: beta, gamma must be > 0");
  const double nn = n, rr = r;
  const double nb = std::pow(nn, beta);
  const double shape = (1.0 - gamma / nb / 2.0) * (nn - 2.0 + 1.0 / nn);
  const double offset = (3.0 * nb - std::pow(nn, beta - 1.0)) / (2.0 * gamma);
  const double collapse = std::pow(2.0 * std::sqrt(rr) * std::numbers::e / gamma, 1.0 / rr) * (rr / std::numbers::e) *
                          std::pow(nn, 2.0 - 1.0 / rr + beta / rr) * nn * nn * (nn + 1.0);
  const double b3 = offset + shape + nn - 0.5 + 48.0 * collapse;
  const double b4 = -offset - shape + (nn + 1.0) / 2.0 + 32.0 * collapse;
  const double leading = std::pow(nn, 1.0 + beta) / gamma;

  BoundReport b;
  b.lower = leading - b3;
  b.upper = leading + b4;
  b.terms = {{"n", nn},
             {"beta", beta},
             {"gamma", gamma},
             {"r", rr},
             {"epsilon", gamma / nb},
             {"leading", leading},
             {"B3", b3},
             {"B4", b4},
             {"ulb", scaling_regime_lower_bound(n, beta, gamma)}};
  b.applicable = 2.0 * gamma <= std::pow(nn, beta - 1.0) * (1.0 + 1e-12);
  if (!b.applicable) b.warnings.emplace_back("2 gamma exceeds n^(beta-1); bracket not guaranteed");
  if (beta <= 4.0) b.warnings.emplace_back("beta <= 4: bracket terms are not o(n^(1+beta))");
  detail::mark_overflow(b);
  return b;
}

}  // namespace mwswitch
