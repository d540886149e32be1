#include <gtest/gtest.h>

#include <random>

#include "mwswitch/geometry.hpp"
#include "oracles.hpp"

using namespace mwswitch;

namespace {

RealMatrix random_matrix(int n, std::mt19937_64& rng, double scale = 5.0) {
  std::normal_distribution<double> d(0.0, scale);
  RealMatrix x(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) x(i, j) = d(rng);
  return x;
}

RealVector random_vector(int n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  RealVector v(n);
  for (int i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

}  // namespace

TEST(Subspace, ConeElementIsFixed) {
  RealVector w(2), wt(2);
  w << 1, 2;
  wt << 3, 4;
  const RealMatrix x = cone_point(w, wt);
  RealMatrix expected(2, 2);
  expected << 4, 5, 5, 6;
  EXPECT_EQ(x, expected);
  EXPECT_NEAR((project_onto_subspace(x) - x).cwiseAbs().maxCoeff(), 0.0, 1e-14);
}

TEST(Subspace, ZeroMarginalsProjectToZero) {
  RealMatrix x(3, 3);
  x << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  EXPECT_NEAR(project_onto_subspace(x).cwiseAbs().maxCoeff(), 0.0, 1e-14);
}

TEST(Subspace, MatchesNormalEquationsFit) {
  std::mt19937_64 rng(10);
  for (int k = 0; k < 50; ++k) {
    const RealMatrix x = random_matrix(4, rng);
    EXPECT_NEAR((project_onto_subspace(x) - oracle::subspace_fit(x)).cwiseAbs().maxCoeff(), 0.0, 1e-10);
  }
}

TEST(SubspaceIdentity, ResidualVanishesOnAnyDecomposition) {
  std::mt19937_64 rng(1);
  for (int n = 2; n <= 6; ++n)
    for (int k = 0; k < 20; ++k) {
      const RealMatrix x = cone_point(random_vector(n, rng, -10, 10), random_vector(n, rng, -10, 10));
      EXPECT_LE(lemma1_residual(x), 1e-10);
    }
}

TEST(SubspaceIdentity, ElementaryMatrixGap) {
  RealMatrix e = RealMatrix::Zero(2, 2);
  e(0, 0) = 1.0;
  EXPECT_NEAR(lemma1_residual(e), 0.25, 1e-15);
}

TEST(SubspaceIdentity, ProjectionOutputIsInSubspace) {
  std::mt19937_64 rng(2);
  for (int n = 2; n <= 6; ++n) EXPECT_LE(lemma1_residual(project_onto_subspace(random_matrix(n, rng))), 1e-10);
}

TEST(Cone, AllOnesIsInside) {
  const auto d = project_onto_cone(RealMatrix::Ones(3, 3));
  EXPECT_NEAR((d.q_para - RealMatrix::Ones(3, 3)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_NEAR(d.q_perp.cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_LE(d.kkt_residual, kKktTolerance);
}

TEST(Cone, NegativeOnesIsPolar) {
  const RealMatrix x = -RealMatrix::Ones(3, 3);
  const auto d = project_onto_cone(x);
  EXPECT_NEAR(d.q_para.cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_NEAR((d.q_perp - x).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(Cone, MatchesActiveSetOracle) {
  std::mt19937_64 rng(31);
  for (int n = 2; n <= 4; ++n)
    for (int k = 0; k < 40; ++k) {
      const RealMatrix x = random_matrix(n, rng);
      const auto d = project_onto_cone(x);
      EXPECT_NEAR(d.q_perp.norm(), oracle::active_set_distance(x), 1e-8);
      const KktReport kk = kkt_report(x, d.q_para, d.w, d.w_tilde);
      EXPECT_LE(kk.max(), 1e-8);
      EXPECT_GE(d.q_para.minCoeff(), 0.0);
      EXPECT_GE(d.w.minCoeff(), 0.0);
      EXPECT_GE(d.w_tilde.minCoeff(), 0.0);
    }
}

TEST(Cone, NonexpansiveAndScalingEquivariant) {
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<int> dn(2, 5);
  for (int k = 0; k < 200; ++k) {
    const int n = dn(rng);
    const RealMatrix x = random_matrix(n, rng), y = random_matrix(n, rng);
    const auto px = project_onto_cone(x), py = project_onto_cone(y);
    EXPECT_LE((px.q_para - py.q_para).norm(), (x - y).norm() + 1e-9);
    if (k % 10 == 0) {
      const double c = 3.7;
      const auto pc = project_onto_cone(c * x);
      EXPECT_NEAR((pc.q_para - c * px.q_para).cwiseAbs().maxCoeff(), 0.0, 1e-7);
    }
  }
}

TEST(Cone, FaceDifferencesAreOrthogonalToPerp) {
  // Pythagoras on the face: the perpendicular part is orthogonal to both
  // q_para and to the subspace spanned by the active generators.
  std::mt19937_64 rng(33);
  for (int k = 0; k < 50; ++k) {
    const RealMatrix x = random_matrix(4, rng);
    const auto d = project_onto_cone(x);
    const RealVector g = generator_inner_products(d.q_perp);
    EXPECT_LE(g.maxCoeff(), 1e-8);
    for (int i = 0; i < 4; ++i) {
      if (d.w(i) > 1e-9) {
        EXPECT_NEAR(g(i), 0.0, 1e-8);
      }
      if (d.w_tilde(i) > 1e-9) {
        EXPECT_NEAR(g(4 + i), 0.0, 1e-8);
      }
    }
  }
}

TEST(Cone, ProjectionIsNotLinear) {
  const RealMatrix a = 2.0 * RealMatrix::Ones(2, 2), b = -RealMatrix::Ones(2, 2);
  const RealMatrix sum_of = project_onto_cone(a).q_para + project_onto_cone(b).q_para;
  const RealMatrix of_sum = project_onto_cone(a + b).q_para;
  EXPECT_NEAR((of_sum - RealMatrix::Ones(2, 2)).norm(), 0.0, 1e-12);
  EXPECT_GT((sum_of - of_sum).norm(), 0.5);
}

TEST(Cone, ScaleFreeOnLargeInputs) {
  std::mt19937_64 rng(34);
  for (int n : {2, 3, 6, 8}) {
    const RealMatrix x = random_matrix(n, rng, 1e4).cwiseAbs();
    const auto d = project_onto_cone(x);
    EXPECT_LE(d.kkt_residual, kKktTolerance);
  }
}

TEST(Cone, Membership) {
  RealMatrix e = RealMatrix::Zero(3, 3);
  e.row(0).setOnes();
  EXPECT_TRUE(cone_membership(e, 1e-9));
  RealMatrix neg = RealMatrix::Ones(3, 3);
  neg(1, 2) = -0.5;
  EXPECT_FALSE(cone_membership(neg, 0.1));
  std::mt19937_64 rng(35);
  for (int k = 0; k < 20; ++k) EXPECT_TRUE(cone_membership(project_onto_cone(random_matrix(3, rng)).q_para, 1e-6));
  EXPECT_THROW(cone_membership(e, 0.0), std::invalid_argument);
}

TEST(Cone, Errors) {
  EXPECT_THROW(project_onto_cone(RealMatrix::Zero(2, 3)), std::invalid_argument);
  RealMatrix bad = RealMatrix::Zero(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(project_onto_cone(bad), std::invalid_argument);
  ConeProjectionOptions tight;
  tight.tolerance = -1.0;  // unreachable
  tight.max_iterations = 20;
  std::mt19937_64 rng(36);
  EXPECT_THROW(project_onto_cone(random_matrix(4, rng), tight), ConvergenceFailure);
}
