#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mwswitch/bounds.hpp"
#include "oracles.hpp"

using namespace mwswitch;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Drift, TailBoundExample) {
  const DriftParams p(10, 1, 2);
  EXPECT_NEAR(drift_tail_bound(p, 0), 2.0 / 3.0, 1e-15);
  double prev = 1.0;
  for (int m = 0; m < 200; ++m) {
    const double b = drift_tail_bound(p, m);
    EXPECT_LT(b, prev);
    prev = b;
  }
  EXPECT_LT(prev, 1e-30);
}

TEST(Drift, MomentBoundExamples) {
  for (double d : {0.5, 1.0, 3.0}) EXPECT_NEAR(drift_moment_bound(DriftParams(0, d, d), 1), 8 * d, 1e-12);
  EXPECT_NEAR(drift_moment_bound(DriftParams(10, 1, 2), 1), 44.0, 1e-12);
  // r = 2: (2 kappa)^2 + (4 D (D + eta) / eta)^2 * 2
  EXPECT_NEAR(drift_moment_bound(DriftParams(10, 1, 2), 2), 400.0 + 576.0 * 2.0, 1e-9);
  EXPECT_TRUE(std::isinf(drift_moment_bound(DriftParams(10, 1, 2), 400)));
}

TEST(Drift, ParameterErrors) {
  EXPECT_THROW(DriftParams(-1, 1, 2), std::invalid_argument);
  EXPECT_THROW(DriftParams(0, 0, 2), std::invalid_argument);
  EXPECT_THROW(DriftParams(0, 1, 0), std::invalid_argument);
  EXPECT_THROW(DriftParams(0, 3, 2), std::invalid_argument);
  EXPECT_THROW(drift_tail_bound(DriftParams(0, 1, 1), -1), std::invalid_argument);
  EXPECT_THROW(drift_moment_bound(DriftParams(0, 1, 1), 0), std::invalid_argument);
}

TEST(Drift, ReflectedWalkRespectsBounds) {
  // Z moves +1 w.p. 0.3, -1 w.p. 0.7, reflected at 0. Drift is -0.4 above 0,
  // so kappa = 1, eta = 0.4, D = 1 satisfy the drift conditions. The
  // kappa = 0 parametrization is checked too; it bounds the walk as well.
  const auto w = oracle::reflected_walk(0.3, 2'000'000, 1000, 12, 123);
  for (double kappa : {0.0, 1.0}) {
    const DriftParams p(kappa, 0.4, 1.0);
    for (int m = 0; m <= 5; ++m) {
      const int level = static_cast<int>(kappa) + 2 * m;
      EXPECT_LE(w.tail[static_cast<std::size_t>(level)], drift_tail_bound(p, m));
    }
    EXPECT_LE(w.mean, drift_moment_bound(p, 1));
    EXPECT_LE(w.second_moment, drift_moment_bound(p, 2));
  }
  EXPECT_NEAR(drift_tail_bound(DriftParams(0, 0.4, 1), 5), std::pow(1 / 1.4, 6), 1e-15);
  EXPECT_LE(w.tail[10], drift_tail_bound(DriftParams(0, 0.4, 1), 5));
  // stationary law of the walk: P(Z > k) = (3/7)^(k+1)
  for (int k = 0; k <= 4; ++k) EXPECT_NEAR(w.tail[static_cast<std::size_t>(k)], std::pow(3.0 / 7.0, k + 1), 0.005);
}

TEST(UniversalLowerBound, ThreePortExample) {
  const auto m = TrafficModel::uniform_bernoulli(3, 0.1);
  EXPECT_NEAR(m.sigma2().sum(), 1.89, 1e-12);
  EXPECT_NEAR(universal_lower_bound(m), 8.1, 1e-12);
  EXPECT_NEAR(universal_lower_bound(m), 0.81 * 2 / 0.2, 1e-12);
}

TEST(UniversalLowerBound, MatchesBernoulliClosedForm) {
  for (int n : {2, 3, 4, 7})
    for (double eps : {0.9, 0.5, 0.1, 0.01}) {
      const double expect = (1 - eps) * (1 - eps) * (n - 1) / (2 * eps);
      EXPECT_NEAR(universal_lower_bound(TrafficModel::uniform_bernoulli(n, eps)), expect, 1e-10 * (1 + expect));
    }
}

TEST(UniversalLowerBound, GeneralArrivals) {
  // mean 0.25, E a^2 = 0.35, variance 0.2875 per pair
  const auto m = TrafficModel::from_pmfs(RealMatrix::Constant(2, 2, 0.5), 0.5, {{0.8, 0.15, 0.05}});
  EXPECT_NEAR(universal_lower_bound(m), 4 * 0.2875 / 1.0 - 0.5, 1e-12);
}

TEST(CollapseConstant, BernoulliExamples) {
  EXPECT_NEAR(bernoulli_ssc_constant(2, 1), 384.0, 1e-9);
  EXPECT_NEAR(bernoulli_ssc_constant(2, 2), std::sqrt(2 * std::sqrt(2.0) * std::numbers::e) * (32 / std::numbers::e) * 12,
              1e-9);
  EXPECT_NEAR(bernoulli_ssc_constant(2, 2), 391.7, 0.05);
}

TEST(CollapseConstant, GeneralReducesToBernoulli) {
  for (int n : {2, 3, 5})
    for (int r : {1, 2, 3, 6}) {
      const auto m = TrafficModel::uniform_bernoulli(n, 0.05);
      const FlaggedValue c = ssc_moment_constant(r, m);
      EXPECT_NEAR(c.value, bernoulli_ssc_constant(n, r), 1e-9 * c.value);
      EXPECT_TRUE(c.applicable);
    }
  EXPECT_FALSE(ssc_moment_constant(2, TrafficModel::uniform_bernoulli(2, 0.3)).applicable);
  EXPECT_THROW(ssc_moment_constant(0, TrafficModel::uniform_bernoulli(2, 0.1)), std::invalid_argument);
}

TEST(CollapseConstant, NondecreasingInR) {
  const auto m = TrafficModel::uniform_bernoulli(4, 0.05);
  for (int r = 1; r < 30; ++r) EXPECT_LE(ssc_moment_constant(r, m).value, ssc_moment_constant(r + 1, m).value);
}

TEST(CollapseConstant, DriftParameters) {
  const auto m = TrafficModel::uniform_bernoulli(2, 0.1);
  const DriftParams p = ssc_drift_params(m);
  const double lam2 = 4 * 0.45 * 0.45, sig2 = 0.9 * 1.1;
  EXPECT_NEAR(p.kappa, 4 * (lam2 + sig2 + 2) / 0.5, 1e-12);
  EXPECT_NEAR(p.eta, 0.125, 1e-15);
  EXPECT_NEAR(p.D, 2.0, 1e-15);
  EXPECT_THROW(ssc_drift_params(TrafficModel::bernoulli(RealMatrix::Identity(2, 2), 0.1)), std::invalid_argument);
}

TEST(Bracket, HeavyTrafficLimits) {
  EXPECT_NEAR(bernoulli_bracket(2, 0.01).terms.at("leading") * 0.01, 0.75, 1e-12);
  EXPECT_NEAR(bernoulli_bracket(3, 0.01).terms.at("leading") * 0.01, 5.0 / 3.0, 1e-12);
  const auto m = TrafficModel::uniform_bernoulli(2, 1e-6);
  EXPECT_NEAR(theorem1_bracket(m).terms.at("leading") * 1e-6, 0.75, 1e-5);
}

TEST(Bracket, LowerBelowUpper) {
  for (int n = 2; n <= 8; ++n)
    for (double eps : {0.2, 0.1, 0.05, 0.01})
      for (int r : {2, 3, 4}) {
        const auto b = theorem1_bracket(TrafficModel::uniform_bernoulli(n, eps), r);
        EXPECT_LE(b.lower, b.upper);
        EXPECT_FALSE(b.overflow);
        const auto bb = bernoulli_bracket(n, eps, r);
        EXPECT_LE(bb.lower, bb.upper);
      }
}

TEST(Bracket, BernoulliMatchesGeneralTermByTerm) {
  for (int n = 2; n <= 6; ++n)
    for (double eps : {0.3, 0.1, 0.02, 0.001})
      for (int r : {2, 3, 5}) {
        const auto g = theorem1_bracket(TrafficModel::uniform_bernoulli(n, eps), r);
        const auto b = bernoulli_bracket(n, eps, r);
        EXPECT_EQ(g.applicable, b.applicable);
        EXPECT_LE(rel(b.lower, g.lower), 1e-9);
        EXPECT_LE(rel(b.upper, g.upper), 1e-9);
        for (const char* k : {"M_r", "sigma_norm2", "ulb"})
          EXPECT_LE(rel(b.terms.at(k), g.terms.at(k)), 1e-9) << k << " n=" << n << " eps=" << eps;
        // The two forms split an O(1) constant differently between the
        // leading term and the corrections; the shift must cancel.
        const double shift = b.terms.at("leading") - g.terms.at("leading");
        EXPECT_LE(rel(b.terms.at("B1"), g.terms.at("B1") + shift), 1e-9);
        EXPECT_LE(rel(b.terms.at("B2"), g.terms.at("B2") - shift), 1e-9);
        EXPECT_LE(rel(eps * b.terms.at("leading"), eps * g.terms.at("leading")), 2.0 * eps);
      }
}

TEST(Bracket, CorrectionsAreLowerOrder) {
  for (int n : {2, 3, 5})
    for (int r : {2, 3}) {
      double prev1 = INFINITY, prev2 = INFINITY, first1 = 0, first2 = 0, last1 = 0, last2 = 0;
      for (int k = 3; k <= 20; ++k) {
        const double eps = std::ldexp(1.0, -k);
        const auto b = bernoulli_bracket(n, eps, r);
        const double e1 = eps * b.terms.at("B1"), e2 = eps * b.terms.at("B2");
        EXPECT_LT(e1, prev1);
        EXPECT_LT(e2, prev2);
        if (k == 3) {
          first1 = e1;
          first2 = e2;
        }
        last1 = e1;
        last2 = e2;
        prev1 = e1;
        prev2 = e2;
      }
      // eps^(1 - 1/r) over 17 halvings
      EXPECT_LT(last1 / first1, std::pow(2.0, -17.0 * (1.0 - 1.0 / r)) * 1.01);
      EXPECT_LT(last2 / first2, std::pow(2.0, -17.0 * (1.0 - 1.0 / r)) * 1.01);
    }
}

TEST(Bracket, Applicability) {
  EXPECT_TRUE(bernoulli_bracket(2, 0.25).applicable);
  EXPECT_FALSE(bernoulli_bracket(2, 0.26).applicable);
  EXPECT_FALSE(bernoulli_bracket(2, 0.26).warnings.empty());
  EXPECT_TRUE(theorem1_bracket(TrafficModel::uniform_bernoulli(4, 0.125)).applicable);
  EXPECT_FALSE(theorem1_bracket(TrafficModel::uniform_bernoulli(4, 0.13)).applicable);
  EXPECT_THROW(bernoulli_bracket(2, 0.1, 1), std::invalid_argument);
  EXPECT_THROW(theorem1_bracket(TrafficModel::uniform_bernoulli(2, 0.1), 1), std::invalid_argument);
  EXPECT_THROW(bernoulli_bracket(1, 0.1), std::invalid_argument);
  EXPECT_THROW(bernoulli_bracket(2, 1.0), std::invalid_argument);
}

TEST(ScalingRegime, MatchesBernoulliBracket) {
  for (int n : {2, 4, 8})
    for (double beta : {2.0, 5.0})
      for (double gamma : {0.5, 1.0})
        for (int r : {2, 5}) {
          const auto s = scaling_regime_bracket(n, beta, gamma, r);
          const double eps = gamma * std::pow(n, -beta);
          const auto b = bernoulli_bracket(n, eps, r);
          const double scale = std::max(std::abs(b.lower), std::abs(b.upper));
          EXPECT_LE(std::abs(s.lower - b.lower) / scale, 1e-9);
          EXPECT_LE(std::abs(s.upper - b.upper) / scale, 1e-9);
          const double offset = (3 * std::pow(n, beta) - std::pow(n, beta - 1)) / (2 * gamma);
          EXPECT_LE(rel(s.terms.at("B3"), b.terms.at("B1") + offset), 1e-9);
          EXPECT_LE(rel(s.terms.at("B4"), b.terms.at("B2") - offset), 1e-9);
          EXPECT_EQ(s.applicable, 2 * gamma <= std::pow(n, beta - 1));
        }
}

TEST(ScalingRegime, CorrectionsVanishRelativeToLeadingOrder) {
  double prev3 = INFINITY, prev4 = INFINITY;
  for (int n : {4, 8, 16, 32}) {
    const auto s = scaling_regime_bracket(n, 5.0, 1.0, 5);
    EXPECT_TRUE(s.warnings.empty());
    const double scale = std::pow(n, 6.0);
    EXPECT_LT(s.terms.at("B3") / scale, prev3);
    EXPECT_LT(std::abs(s.terms.at("B4")) / scale, prev4);
    prev3 = s.terms.at("B3") / scale;
    prev4 = std::abs(s.terms.at("B4")) / scale;
  }
  EXPECT_FALSE(scaling_regime_bracket(4, 3.0, 1.0, 5).warnings.empty());
}

TEST(ScalingRegime, UniversalLowerBoundSpecialization) {
  for (int n : {2, 4, 8})
    for (double beta : {1.0, 3.0}) {
      const double gamma = 0.5, eps = gamma * std::pow(n, -beta);
      const double ulb = universal_lower_bound(TrafficModel::uniform_bernoulli(n, eps));
      EXPECT_LE(rel(scaling_regime_lower_bound(n, beta, gamma), ulb), 1e-9);
    }
}

TEST(ScalingRegime, Errors) {
  EXPECT_THROW(scaling_regime_bracket(4, 5, 1, 1), std::invalid_argument);
  EXPECT_THROW(scaling_regime_bracket(1, 5, 1, 2), std::invalid_argument);
  EXPECT_THROW(scaling_regime_bracket(4, 0, 1, 2), std::invalid_argument);
  EXPECT_THROW(scaling_regime_bracket(4, 5, -1, 2), std::invalid_argument);
}
