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

#ifndef SPLIN_PHASE_LAB_HPP
#define SPLIN_PHASE_LAB_HPP

#include <splin/core.hpp>
#include <splin/parallel.hpp>
#include <splin/random.hpp>
#include <splin/solvers.hpp>
#include <splin/synthdgp.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace splin {

/// k ln(n / k), natural log, unit constant.
inline double theoretical_min_m(Index k, Index n) {
  require(k >= 1 && k <= n, "theoretical_min_m needs 1 <= k <= n");
  return double(k) * std::log(double(n) / double(k));
}

inline std::vector<Index> m_range(Index first, Index last, Index step) {
  require(step >= 1 && first >= 1 && first <= last, "invalid m range");
  std::vector<Index> out;
  for (Index m = first; m <= last; m += step) out.push_back(m);
  return out;
}

enum class SuccessCriterion { kSupportExact, kMcc, kRelativeL2 };

inline std::string_view to_string(SuccessCriterion c) {
  switch (c) {
    case SuccessCriterion::kSupportExact: return "support-exact";
    case SuccessCriterion::kMcc: return "mcc";
    case SuccessCriterion::kRelativeL2: return "relative-l2";
  }
  return "?";
}

struct PhaseSweepConfig {
  Index n = 128;
  std::vector<Index> k_values{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<Index> m_values = m_range(1, 79, 2);
  Index trials_per_cell = 200;
  SolverKind solver = SolverKind::kOmp;
  SuccessCriterion criterion = SuccessCriterion::kSupportExact;
  SolverConfig ista{0.01, 2000, 1e-10, StepRule::kBacktracking};  // used by ista/fista
  double exhaustive_budget = 1e6;
  std::uint64_t seed = 0;
  unsigned jobs = 1;

  void validate() const {
    require(n >= 1, "n must be positive");
    require(!k_values.empty() && !m_values.empty(), "k_values and m_values must be non-empty");
    for (Index k : k_values) require(k >= 1 && k <= n, "k values must lie in [1, n]");
    for (Index m : m_values) require(m >= 1, "m values must be positive");
    require(std::is_sorted(m_values.begin(), m_values.end()), "m_values must be increasing");
    require(std::is_sorted(k_values.begin(), k_values.end()), "k_values must be increasing");
    require(trials_per_cell >= 1, "trials_per_cell must be positive");
    ista.validate();
  }
};

struct PhaseGrid {
  Index n = 0;
  std::vector<Index> k_values;
  std::vector<Index> m_values;
  Index trials_per_cell = 0;
  SolverKind solver = SolverKind::kOmp;
  SuccessCriterion criterion = SuccessCriterion::kSupportExact;
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> successes;  // k rows x m cols
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> failures;   // solver errors, counted as non-success

  double rate(Index ki, Index mi) const { return double(successes(ki, mi)) / double(trials_per_cell); }
  Matrix success_rate() const { return successes.cast<double>() / double(trials_per_cell); }
};

namespace detail {

inline std::vector<Index> top_k_support(const Vector& z, Index k) {
  std::vector<Index> idx(static_cast<std::size_t>(z.size()));
  for (Index i = 0; i < z.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return std::abs(z[a]) > std::abs(z[b]); });
  idx.resize(static_cast<std::size_t>(std::min(k, z.size())));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Least-squares coefficients on a fixed support.
inline Vector refit(const Dictionary& dict, const Vector& y, const std::vector<Index>& support) {
  Vector z = Vector::Zero(dict.n());
  if (support.empty()) return z;
  Matrix sub(dict.m(), static_cast<Index>(support.size()));
  for (std::size_t c = 0; c < support.size(); ++c) sub.col(static_cast<Index>(c)) = dict.col(support[c]);
  const Vector coef = sub.colPivHouseholderQr().solve(y);
  for (std::size_t c = 0; c < support.size(); ++c) z[support[c]] = coef[static_cast<Index>(c)];
  return z;
}

inline std::vector<Index> nonzero_support(const Vector& z) {
  std::vector<Index> s;
  for (Index i = 0; i < z.size(); ++i)
    if (z[i] != 0.0) s.push_back(i);
  return s;
}

inline bool trial_success(const Vector& truth, const Vector& est, SuccessCriterion criterion) {
  switch (criterion) {
    case SuccessCriterion::kSupportExact:
      return nonzero_support(truth) == nonzero_support(est);
    case SuccessCriterion::kMcc: {
      // Single trial: absolute correlation between the two code vectors.
      const Vector a = truth.array() - truth.mean();
      const Vector b = est.array() - est.mean();
      const double den = a.norm() * b.norm();
      return den > 0.0 && std::abs(a.dot(b)) / den >= 0.99;
    }
    case SuccessCriterion::kRelativeL2:
      return (est - truth).norm() <= 1e-3 * truth.norm();
  }
  return false;
}

}  // namespace detail

/// Solver output with known k. Convex solvers are thresholded to their k
/// largest entries and refit by least squares on that support.
inline Vector recover_with_known_k(const Dictionary& dict, const Vector& y, Index k, const PhaseSweepConfig& cfg) {
  switch (cfg.solver) {
    case SolverKind::kOmp:
      return omp(dict, y, k).code;
    case SolverKind::kExhaustive:
      return exhaustive_oracle(dict, y, k, cfg.exhaustive_budget).code;
    case SolverKind::kIsta:
    case SolverKind::kFista: {
      const SparseSolution s = cfg.solver == SolverKind::kIsta ? ista(dict, y, cfg.ista) : fista(dict, y, cfg.ista);
      return detail::refit(dict, y, detail::top_k_support(s.code, k));
    }
  }
  return {};
}

/// Seed of one trial; any cell can be rerun in isolation from it.
inline std::uint64_t trial_seed(std::uint64_t master, Index k, Index m, Index trial) {
  return derive_seed(master, "phase", {std::uint64_t(k), std::uint64_t(m), std::uint64_t(trial)});
}

/// Fresh gaussian dictionary and uniform-signed k-sparse code per trial.
inline PhaseGrid run_phase_sweep(const PhaseSweepConfig& cfg) {
  cfg.validate();
  if (cfg.solver == SolverKind::kExhaustive)
    require(binomial_coefficient(cfg.n, cfg.k_values.back()) <= cfg.exhaustive_budget,
            "exhaustive sweep exceeds the combinatorial budget");
  PhaseGrid grid;
  grid.n = cfg.n;
  grid.k_values = cfg.k_values;
  grid.m_values = cfg.m_values;
  grid.trials_per_cell = cfg.trials_per_cell;
  grid.solver = cfg.solver;
  grid.criterion = cfg.criterion;
  const std::size_t nk = cfg.k_values.size(), nm = cfg.m_values.size();
  const std::size_t trials = static_cast<std::size_t>(cfg.trials_per_cell);
  // 0 failure, 1 success, 2 solver error
  std::vector<unsigned char> outcome(nk * nm * trials, 0);
  parallel_for(outcome.size(), cfg.jobs, [&](std::size_t slot) {
    const std::size_t t = slot % trials;
    const std::size_t mi = (slot / trials) % nm;
    const std::size_t ki = slot / (trials * nm);
    const Index k = cfg.k_values[ki], m = cfg.m_values[mi];
    const std::uint64_t s = trial_seed(cfg.seed, k, m, static_cast<Index>(t));
    const Dictionary dict = sample_dictionary(m, cfg.n, DictKind::kGaussianNormalized, derive_seed(s, "dict"));
    const Vector truth = sample_k_sparse(cfg.n, k, ValueDist::kUniformSigned, derive_seed(s, "code")).values();
    const Vector y = dict.atoms() * truth;
    try {
      outcome[slot] = detail::trial_success(truth, recover_with_known_k(dict, y, k, cfg), cfg.criterion) ? 1 : 0;
    } catch (const Error&) {
      outcome[slot] = 2;
    }
  });
  grid.successes.setZero(static_cast<Index>(nk), static_cast<Index>(nm));
  grid.failures.setZero(static_cast<Index>(nk), static_cast<Index>(nm));
  for (std::size_t slot = 0; slot < outcome.size(); ++slot) {
    const Index mi = static_cast<Index>((slot / trials) % nm), ki = static_cast<Index>(slot / (trials * nm));
    if (outcome[slot] == 1) ++grid.successes(ki, mi);
    if (outcome[slot] == 2) ++grid.failures(ki, mi);
  }
  return grid;
}

struct BoundaryFit {
  std::vector<double> m_star;   // NaN where flagged
  std::vector<bool> flagged;    // no 50% crossing inside m_values
  double c = std::numeric_limits<double>::quiet_NaN();          // M* ~ c k ln(n/k)
  double pearson_r = std::numeric_limits<double>::quiet_NaN();  // between k ln(n/k) and M*
};

/// First upward crossing of 50% per k row, linearly interpolated.
inline BoundaryFit fit_boundary(const PhaseGrid& grid) {
  BoundaryFit fit;
  std::vector<double> xs, ys;
  for (std::size_t ki = 0; ki < grid.k_values.size(); ++ki) {
    double m_star = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t mi = 1; mi < grid.m_values.size(); ++mi) {
      const double r0 = grid.rate(Index(ki), Index(mi - 1)), r1 = grid.rate(Index(ki), Index(mi));
      if (r0 < 0.5 && r1 >= 0.5) {
        const double m0 = double(grid.m_values[mi - 1]), m1 = double(grid.m_values[mi]);
        m_star = m0 + (0.5 - r0) / (r1 - r0) * (m1 - m0);
        break;
      }
    }
    fit.m_star.push_back(m_star);
    fit.flagged.push_back(std::isnan(m_star));
    if (!std::isnan(m_star)) {
      xs.push_back(theoretical_min_m(grid.k_values[ki], grid.n));
      ys.push_back(m_star);
    }
  }
  if (xs.empty()) return fit;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += xs[i] * ys[i];
    sxx += xs[i] * xs[i];
  }
  if (sxx > 0.0) fit.c = sxy / sxx;
  if (xs.size() >= 2) {
    const Eigen::Map<const Vector> x(xs.data(), Index(xs.size())), y(ys.data(), Index(ys.size()));
    const Vector dx = x.array() - x.mean(), dy = y.array() - y.mean();
    const double den = dx.norm() * dy.norm();
    if (den > 0.0) fit.pearson_r = dx.dot(dy) / den;
  }
  return fit;
}

struct MonotonicityReport {
  Index violations_in_m = 0;  // rate drops as m grows, beyond 2 sigma
  Index violations_in_k = 0;  // rate rises as k grows, beyond 2 sigma
};

namespace detail {

// Drop from `before` to `after` exceeds twice the binomial std of the difference.
inline bool significant_drop(double before, double after, Index trials) {
  const double p = 0.5 * (before + after);
  const double sigma = std::sqrt(2.0 * p * (1.0 - p) / double(trials));
  return before - after > 2.0 * sigma;
}

}  // namespace detail

/// Compares adjacent cells along each axis.
inline MonotonicityReport check_monotonicity(const PhaseGrid& grid) {
  MonotonicityReport rep;
  const Index nk = Index(grid.k_values.size()), nm = Index(grid.m_values.size());
  for (Index ki = 0; ki < nk; ++ki)
    for (Index mi = 1; mi < nm; ++mi)
      if (detail::significant_drop(grid.rate(ki, mi - 1), grid.rate(ki, mi), grid.trials_per_cell))
        ++rep.violations_in_m;
  for (Index mi = 0; mi < nm; ++mi)
    for (Index ki = 1; ki < nk; ++ki)
      if (detail::significant_drop(grid.rate(ki, mi), grid.rate(ki - 1, mi), grid.trials_per_cell))
        ++rep.violations_in_k;
  return rep;
}

}  // namespace splin

#endif  // SPLIN_PHASE_LAB_HPP
