#include <gtest/gtest.h>

#include "mwswitch/gg1.hpp"

using namespace mwswitch;

TEST(SingleServer, StepExamples) {
  EXPECT_EQ(step_gg1(0, 0).phi_next, 0);
  EXPECT_EQ(step_gg1(0, 0).upsilon, 1);
  EXPECT_EQ(step_gg1(5, 2).phi_next, 6);
  EXPECT_EQ(step_gg1(5, 2).upsilon, 0);
  EXPECT_EQ(step_gg1(0, 1).phi_next, 0);
  EXPECT_EQ(step_gg1(0, 1).upsilon, 0);
  EXPECT_THROW(step_gg1(-1, 0), std::invalid_argument);
}

TEST(SingleServer, AnalyticMean) {
  const auto m = TrafficModel::uniform_bernoulli(3, 0.1);
  const double s2 = port_sigma2(m, 0, CouplingAxis::kRow);
  EXPECT_NEAR(s2, 0.63, 1e-12);
  EXPECT_NEAR(port_sigma2(m, 2, CouplingAxis::kColumn), 0.63, 1e-12);
  EXPECT_NEAR(analytic_mean(s2, 0.1), 2.7, 1e-12);
  EXPECT_NEAR(analytic_mean(0.0, 0.5), -0.25, 1e-15);
  // eps * mean tends to sigma^2 / 2
  EXPECT_NEAR(analytic_mean(0.63, 1e-6) * 1e-6, 0.315, 1e-6);
}

TEST(Coupling, TrackerStartsAtPortTotal) {
  IntMatrix q0(2, 2);
  q0 << 1, 2, 3, 4;
  CouplingTracker row(1, CouplingAxis::kRow, q0), col(1, CouplingAxis::kColumn, q0);
  EXPECT_EQ(row.phi(), 7);
  EXPECT_EQ(col.phi(), 6);
  CouplingTracker empty(0, CouplingAxis::kRow, IntMatrix::Zero(3, 3));
  EXPECT_EQ(empty.phi(), 0);
}

TEST(Coupling, TrackerFlagsViolation) {
  const IntMatrix q = IntMatrix::Ones(2, 2), a = IntMatrix::Zero(2, 2);
  CouplingTracker t(0, CouplingAxis::kRow, q);
  // row 0 total goes 2 -> 0 in one slot, faster than one service per slot
  EXPECT_FALSE(t.observe(q, a, IntMatrix::Zero(2, 2)));
  EXPECT_EQ(t.violations(), 1u);
}

TEST(Coupling, DominanceAndMeanOnLongRun) {
  const auto m = TrafficModel::uniform_bernoulli(3, 0.1);
  const auto r = coupled_dominance_run(m, 0, 1'000'000, 2024);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_EQ(r.slots, 1'000'000u);
  EXPECT_NEAR(r.analytic_mean, 2.7, 1e-12);
  EXPECT_NEAR(r.phi_mean, 2.7, 0.03 * 2.7);
  EXPECT_NEAR(r.upsilon_mean, 0.1, 0.05 * 0.1);
  EXPECT_GE(r.queue_mean, r.phi_mean);
}

TEST(Coupling, ColumnAxisAndNonEmptyStart) {
  const auto m = TrafficModel::uniform_bernoulli(4, 0.2);
  IntMatrix q0 = IntMatrix::Constant(4, 4, 3);
  const auto r = coupled_dominance_run(m, 2, 200'000, 5, 1, CouplingAxis::kColumn, TieBreak::kRelabel,
                                       QueueMatrix(q0));
  EXPECT_EQ(r.violations, 0u);
  EXPECT_EQ(r.axis, CouplingAxis::kColumn);
}

TEST(Coupling, Errors) {
  const auto m = TrafficModel::uniform_bernoulli(3, 0.1);
  EXPECT_THROW(coupled_dominance_run(m, 3, 10, 1), std::invalid_argument);
  EXPECT_THROW(coupled_dominance_run(m, 0, 10, 1, 0, CouplingAxis::kRow, TieBreak::kAuto, QueueMatrix(2)),
               std::invalid_argument);
}
