// Copyright 2026 The splin Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <splin/phase_lab.hpp>

#include <gtest/gtest.h>

#include <cmath>

namespace splin {
namespace {

PhaseGrid grid_from_rates(Index n, std::vector<Index> ks, std::vector<Index> ms, Index trials, const Matrix& rates) {
  PhaseGrid g;
  g.n = n;
  g.k_values = std::move(ks);
  g.m_values = std::move(ms);
  g.trials_per_cell = trials;
  g.successes = (rates * double(trials)).array().round().cast<Index>();
  g.failures.setZero(rates.rows(), rates.cols());
  return g;
}

TEST(TheoreticalMinM, Examples) {
  EXPECT_NEAR(theoretical_min_m(10, 1024), 46.28887, 1e-4);
  EXPECT_EQ(theoretical_min_m(7, 7), 0.0);
  EXPECT_NEAR(theoretical_min_m(1, 3), std::log(3.0), 1e-15);
  EXPECT_THROW(theoretical_min_m(0, 4), InvalidArgument);
  EXPECT_THROW(theoretical_min_m(5, 4), InvalidArgument);
}

// Full rank: the thresholded convex solver recovers every k <= n/4. Greedy OMP
// is only reliable to about n/8 here (0.68 at k = n/4, n = 32).
TEST(PhaseSweep, FullMeasurementsRecover) {
  PhaseSweepConfig cfg;
  cfg.n = 32;
  cfg.k_values = {1, 4, 8};
  cfg.m_values = {32};
  cfg.trials_per_cell = 100;
  cfg.seed = 11;
  cfg.solver = SolverKind::kIsta;
  const PhaseGrid g = run_phase_sweep(cfg);
  for (Index ki = 0; ki < 3; ++ki) EXPECT_GE(g.rate(ki, 0), 0.99) << "k=" << cfg.k_values[std::size_t(ki)];
  cfg.solver = SolverKind::kOmp;
  cfg.k_values = {1, 4};
  const PhaseGrid greedy = run_phase_sweep(cfg);
  for (Index ki = 0; ki < 2; ++ki) EXPECT_GE(greedy.rate(ki, 0), 0.95);
}

TEST(PhaseSweep, OneMeasurementFails) {
  PhaseSweepConfig cfg;
  cfg.n = 32;
  cfg.k_values = {1, 2, 4};
  cfg.m_values = {1};
  cfg.trials_per_cell = 200;
  cfg.seed = 12;
  const PhaseGrid g = run_phase_sweep(cfg);
  for (Index ki = 0; ki < 3; ++ki) EXPECT_LE(g.rate(ki, 0), 0.1);
}

TEST(PhaseSweep, ThresholdBracketsAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PhaseSweepConfig cfg;
    cfg.k_values = {4};
    cfg.m_values = m_range(1, 127, 2);
    cfg.trials_per_cell = 200;
    cfg.seed = seed;
    cfg.jobs = 4;
    const BoundaryFit fit = fit_boundary(run_phase_sweep(cfg));
    ASSERT_FALSE(fit.flagged[0]);
    EXPECT_GE(fit.m_star[0], theoretical_min_m(4, 128)) << seed;
    EXPECT_LE(fit.m_star[0], 111.0) << seed;
  }
}

TEST(PhaseSweep, ThresholdedIstaSucceedsWithManyMeasurements) {
  PhaseSweepConfig cfg;
  cfg.n = 32;
  cfg.k_values = {2};
  cfg.m_values = {4, 24};
  cfg.trials_per_cell = 40;
  cfg.solver = SolverKind::kFista;
  cfg.seed = 3;
  const PhaseGrid g = run_phase_sweep(cfg);
  EXPECT_GE(g.rate(0, 1), 0.95);
  EXPECT_LT(g.rate(0, 0), g.rate(0, 1));
  EXPECT_EQ(g.failures.sum(), 0);
}

TEST(PhaseSweep, IdenticalAcrossJobCounts) {
  PhaseSweepConfig cfg;
  cfg.n = 64;
  cfg.k_values = {1, 3};
  cfg.m_values = m_range(2, 30, 4);
  cfg.trials_per_cell = 30;
  cfg.seed = 99;
  const PhaseGrid a = run_phase_sweep(cfg);
  cfg.jobs = 4;
  const PhaseGrid b = run_phase_sweep(cfg);
  EXPECT_EQ(a.successes, b.successes);
  EXPECT_EQ(a.failures, b.failures);
}

TEST(PhaseSweep, RejectsBadConfigs) {
  PhaseSweepConfig cfg;
  cfg.trials_per_cell = 0;
  EXPECT_THROW(run_phase_sweep(cfg), InvalidArgument);
  cfg = PhaseSweepConfig{};
  cfg.k_values = {129};
  EXPECT_THROW(run_phase_sweep(cfg), InvalidArgument);
  cfg = PhaseSweepConfig{};
  cfg.solver = SolverKind::kExhaustive;
  EXPECT_THROW(run_phase_sweep(cfg), InvalidArgument);
}

TEST(TrialSuccess, Criteria) {
  const Vector truth = (Vector(4) << 0.0, 1.0, 0.0, -2.0).finished();
  const Vector close = (Vector(4) << 0.0, 1.0 + 1e-5, 0.0, -2.0).finished();
  const Vector wrong = (Vector(4) << 0.5, 1.0, 0.0, -2.0).finished();
  using detail::trial_success;
  EXPECT_TRUE(trial_success(truth, close, SuccessCriterion::kSupportExact));
  EXPECT_FALSE(trial_success(truth, wrong, SuccessCriterion::kSupportExact));
  EXPECT_TRUE(trial_success(truth, close, SuccessCriterion::kRelativeL2));
  EXPECT_FALSE(trial_success(truth, wrong, SuccessCriterion::kRelativeL2));
  EXPECT_TRUE(trial_success(truth, -close, SuccessCriterion::kMcc));
  EXPECT_FALSE(trial_success(truth, Vector::Zero(4), SuccessCriterion::kMcc));
}

TEST(FitBoundary, StepOracleRecoversConstant) {
  const std::vector<Index> ks{1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<Index> ms = m_range(1, 100, 1);
  Matrix rates = Matrix::Zero(8, 100);
  for (Index ki = 0; ki < 8; ++ki)
    for (Index mi = 0; mi < 100; ++mi)
      if (double(ms[std::size_t(mi)]) >= 2.0 * theoretical_min_m(ks[std::size_t(ki)], 128)) rates(ki, mi) = 1.0;
  const BoundaryFit fit = fit_boundary(grid_from_rates(128, ks, ms, 10, rates));
  // The interpolated crossing sits within one grid step below the step edge.
  EXPECT_NEAR(fit.c, 2.0, 0.1);
  EXPECT_GT(fit.pearson_r, 0.999);
  for (bool f : fit.flagged) EXPECT_FALSE(f);
}

TEST(FitBoundary, HandInterpolation) {
  Matrix rates(1, 3);
  rates << 0.2, 0.4, 0.9;
  const BoundaryFit fit = fit_boundary(grid_from_rates(16, {2}, {4, 6, 8}, 10, rates));
  EXPECT_DOUBLE_EQ(fit.m_star[0], 6.0 + 0.1 / 0.5 * 2.0);
  EXPECT_DOUBLE_EQ(fit.c, fit.m_star[0] / theoretical_min_m(2, 16));
  EXPECT_TRUE(std::isnan(fit.pearson_r));  // one point
}

TEST(FitBoundary, NoCrossingIsFlagged) {
  const BoundaryFit all = fit_boundary(grid_from_rates(16, {1, 2}, {4, 8}, 10, Matrix::Ones(2, 2)));
  EXPECT_TRUE(all.flagged[0] && all.flagged[1]);
  EXPECT_TRUE(std::isnan(all.m_star[0]));
  EXPECT_TRUE(std::isnan(all.c));
  const BoundaryFit none = fit_boundary(grid_from_rates(16, {1}, {4, 8}, 10, Matrix::Zero(1, 2)));
  EXPECT_TRUE(none.flagged[0]);
}

TEST(Monotonicity, CountsOnlySignificantDrops) {
  Matrix rates(2, 4);
  rates << 0.0, 0.6, 0.55, 1.0,   // small dip: within noise at 200 trials
           0.0, 0.1, 0.9, 0.2;    // large dip in m; k=2 beats k=1 at m index 2
  const MonotonicityReport rep = check_monotonicity(grid_from_rates(64, {1, 2}, {2, 4, 6, 8}, 200, rates));
  EXPECT_EQ(rep.violations_in_m, 1);
  EXPECT_EQ(rep.violations_in_k, 1);
  // 2 sigma at p = 0.5, T = 200 is 0.1; a 0.12 drop counts, 0.08 does not.
  EXPECT_TRUE(detail::significant_drop(0.56, 0.44, 200));
  EXPECT_FALSE(detail::significant_drop(0.54, 0.46, 200));
}

TEST(PhaseSweep, BoundaryConstantStableAcrossSeeds) {
  std::vector<double> cs;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    PhaseSweepConfig cfg;
    cfg.trials_per_cell = 50;
    cfg.seed = seed;
    cfg.jobs = 4;
    const PhaseGrid g = run_phase_sweep(cfg);
    const BoundaryFit fit = fit_boundary(g);
    cs.push_back(fit.c);
    EXPECT_GE(fit.pearson_r, 0.9);
  }
  const double mean = (cs[0] + cs[1] + cs[2]) / 3.0;
  for (double c : cs) EXPECT_NEAR(c, mean, 0.3 * mean);
}

}  // namespace
}  // namespace splin
