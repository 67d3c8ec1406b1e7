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

#ifndef SPLIN_SOLVERS_HPP
#define SPLIN_SOLVERS_HPP

// Sparse inference at a fixed dictionary:
//
//   minimize_z  ||y - Theta z||_2^2 + lambda ||z||_1
//
// Note there is no 1/2 on the quadratic term, so the gradient is
// 2 Theta^T (Theta z - y) and its Lipschitz constant is 2 ||Theta||_2^2.

#include <splin/core.hpp>
#include <splin/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace splin {

enum class StepRule { kFixed, kBacktracking };

struct SolverConfig {
  double lambda = 0.01;
  int max_iters = 1000;
  double tol = 1e-8;
  StepRule step_rule = StepRule::kFixed;

  void validate() const {
    require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be nonnegative");
    require(max_iters >= 1, "max_iters must be >= 1");
    require(std::isfinite(tol) && tol > 0.0, "tol must be positive");
  }
};

struct SparseSolution {
  Vector code;
  std::vector<double> objective_trace;
  int iterations_used = 0;
  bool converged = false;

  double final_objective() const {
    return objective_trace.empty() ? std::numeric_limits<double>::quiet_NaN() : objective_trace.back();
  }
};

inline double objective(const Dictionary& dict, const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Vector>& z,
                        double lambda) {
  require(y.size() == dict.m(), "observation length does not match dictionary rows");
  require(z.size() == dict.n(), "code length does not match dictionary columns");
  return (y - dict.atoms() * z).squaredNorm() + lambda * z.lpNorm<1>();
}

inline Vector soft_threshold(const Eigen::Ref<const Vector>& v, double t) {
  require(t >= 0.0, "threshold must be nonnegative");
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]) - t;
    out[i] = mag > 0.0 ? std::copysign(mag, v[i]) : 0.0;
  }
  return out;
}

/// Largest eigenvalue of A^T A by power iteration from a fixed start vector.
inline double spectral_norm_sq(const Eigen::Ref<const Matrix>& a, int max_steps = 100, double tol = 1e-10) {
  if (a.size() == 0) return 0.0;
  Vector v = Vector::Ones(a.cols()) / std::sqrt(double(a.cols()));
  double est = 0.0;
  for (int s = 0; s < max_steps; ++s) {
    Vector w = a.transpose() * (a * v);
    const double nw = w.norm();
    if (nw == 0.0) {
      // start vector in the null space; fall back to the exact computation
      const double top = Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
      return top * top;
    }
    const double next = v.dot(w);
    v = w / nw;
    if (std::abs(next - est) <= tol * std::abs(next)) {
      est = next;
      break;
    }
    est = next;
  }
  return est;
}

inline double lipschitz_constant(const Dictionary& dict) { return 2.0 * spectral_norm_sq(dict.atoms()); }

namespace detail {

inline void check_inputs(const Dictionary& dict, const Eigen::Ref<const Vector>& y, const SolverConfig& config,
                         const std::optional<Vector>& warm) {
  config.validate();
  require(y.size() == dict.m(), "observation length does not match dictionary rows");
  require(y.allFinite(), "observation contains non-finite values");
  if (warm) {
    require(warm->size() == dict.n(), "warm start has wrong length");
    require(warm->allFinite(), "warm start contains non-finite values");
  }
}

// Tracks the stopping rule: relative objective change below tol on three
// consecutive iterations, together with a matching bound on the iterate change.
class StopRule {
 public:
  explicit StopRule(double tol) : tol_(tol) {}

  bool update(double prev_obj, double obj, double step_norm, double code_norm) {
    const double denom = std::max(std::abs(prev_obj), std::numeric_limits<double>::min());
    const bool small = std::abs(prev_obj - obj) / denom < tol_ && step_norm <= tol_ * (1.0 + code_norm);
    streak_ = small ? streak_ + 1 : 0;
    return streak_ >= 3;
  }

 private:
  double tol_;
  int streak_ = 0;
};

struct ProxStep {
  Vector next;
  double smooth = 0.0;  // ||y - Theta next||^2
  double lipschitz = 0.0;
};

// One proximal-gradient step from `point`, optionally with backtracking on L.
inline ProxStep prox_step(const Matrix& atoms, const Eigen::Ref<const Vector>& y, const Vector& point, double lambda,
                          double lipschitz, bool backtrack) {
  const Vector resid = atoms * point - y;
  const Vector grad = 2.0 * (atoms.transpose() * resid);
  const double f_point = resid.squaredNorm();
  double lk = lipschitz;
  for (int tries = 0;; ++tries) {
    ProxStep s;
    s.next = soft_threshold(point - grad / lk, lambda / lk);
    s.smooth = (y - atoms * s.next).squaredNorm();
    s.lipschitz = lk;
    if (!backtrack || tries >= 60) return s;
    const Vector d = s.next - point;
    const double model = f_point + grad.dot(d) + 0.5 * lk * d.squaredNorm();
    if (s.smooth <= model + 1e-15 * (1.0 + std::abs(f_point))) return s;
    lk *= 2.0;
  }
}

}  // namespace detail

/// Proximal gradient (ISTA). `lipschitz` may be passed in to skip the power
/// iteration when solving many samples against the same dictionary.
inline SparseSolution ista(const Dictionary& dict, const Eigen::Ref<const Vector>& y, const SolverConfig& config,
                           std::optional<Vector> warm_start = std::nullopt, double lipschitz = 0.0) {
  detail::check_inputs(dict, y, config, warm_start);
  const Matrix& atoms = dict.atoms();
  double lk = lipschitz > 0.0 ? lipschitz : lipschitz_constant(dict);
  const bool backtrack = config.step_rule == StepRule::kBacktracking;

  SparseSolution sol;
  sol.code = warm_start ? *warm_start : Vector::Zero(dict.n());
  double obj = (y - atoms * sol.code).squaredNorm() + config.lambda * sol.code.lpNorm<1>();
  sol.objective_trace.push_back(obj);
  detail::StopRule stop(config.tol);
  for (int it = 1; it <= config.max_iters; ++it) {
    detail::ProxStep s = detail::prox_step(atoms, y, sol.code, config.lambda, lk, backtrack);
    if (backtrack) lk = s.lipschitz;
    const double next_obj = s.smooth + config.lambda * s.next.lpNorm<1>();
    const double step_norm = (s.next - sol.code).norm();
    sol.code = std::move(s.next);
    sol.objective_trace.push_back(next_obj);
    sol.iterations_used = it;
    const bool done = stop.update(obj, next_obj, step_norm, sol.code.norm());
    obj = next_obj;
    if (done) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

/// Accelerated proximal gradient with the t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2
/// momentum sequence. The trace is not guaranteed monotone.
inline SparseSolution fista(const Dictionary& dict, const Eigen::Ref<const Vector>& y, const SolverConfig& config,
                            std::optional<Vector> warm_start = std::nullopt, double lipschitz = 0.0) {
  detail::check_inputs(dict, y, config, warm_start);
  const Matrix& atoms = dict.atoms();
  double lk = lipschitz > 0.0 ? lipschitz : lipschitz_constant(dict);
  const bool backtrack = config.step_rule == StepRule::kBacktracking;

  SparseSolution sol;
  sol.code = warm_start ? *warm_start : Vector::Zero(dict.n());
  Vector extrap = sol.code;
  double t = 1.0;
  double obj = (y - atoms * sol.code).squaredNorm() + config.lambda * sol.code.lpNorm<1>();
  sol.objective_trace.push_back(obj);
  detail::StopRule stop(config.tol);
  for (int it = 1; it <= config.max_iters; ++it) {
    detail::ProxStep s = detail::prox_step(atoms, y, extrap, config.lambda, lk, backtrack);
    if (backtrack) lk = s.lipschitz;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    extrap = s.next + ((t - 1.0) / t_next) * (s.next - sol.code);
    t = t_next;
    const double next_obj = s.smooth + config.lambda * s.next.lpNorm<1>();
    const double step_norm = (s.next - sol.code).norm();
    sol.code = std::move(s.next);
    sol.objective_trace.push_back(next_obj);
    sol.iterations_used = it;
    const bool done = stop.update(obj, next_obj, step_norm, sol.code.norm());
    obj = next_obj;
    if (done) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

/// Orthogonal matching pursuit. Each step adds the inactive column with the
/// largest |correlation| with the residual (lowest index on ties) and refits
/// the active set by least squares. The trace holds the squared residual norm.
inline SparseSolution omp(const Dictionary& dict, const Eigen::Ref<const Vector>& y, Index k_max,
                          double residual_tol = 1e-10) {
  require(y.size() == dict.m(), "observation length does not match dictionary rows");
  require(y.allFinite(), "observation contains non-finite values");
  require(k_max >= 1 && k_max <= dict.n(), "k_max must lie in [1, n]");
  require(residual_tol >= 0.0, "residual_tol must be nonnegative");
  const Matrix& atoms = dict.atoms();

  SparseSolution sol;
  sol.code = Vector::Zero(dict.n());
  std::vector<Index> active;
  std::vector<char> used(static_cast<std::size_t>(dict.n()), 0);
  Vector resid = y;
  Vector coef;
  sol.objective_trace.push_back(resid.squaredNorm());
  while (static_cast<Index>(active.size()) < k_max && resid.norm() >= residual_tol) {
    const Vector corr = atoms.transpose() * resid;
    Index best = -1;
    double best_val = 0.0;
    for (Index j = 0; j < corr.size(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      if (std::abs(corr[j]) > best_val) {
        best_val = std::abs(corr[j]);
        best = j;
      }
    }
    if (best < 0) break;  // residual orthogonal to every remaining atom
    active.push_back(best);
    used[static_cast<std::size_t>(best)] = 1;

    Matrix sub(atoms.rows(), static_cast<Index>(active.size()));
    for (std::size_t c = 0; c < active.size(); ++c) sub.col(static_cast<Index>(c)) = atoms.col(active[c]);
    Eigen::ColPivHouseholderQR<Matrix> qr(sub);
    if (qr.rank() < sub.cols())
      throw DegenerateFit("omp: active set of size " + std::to_string(sub.cols()) + " is rank deficient");
    coef = qr.solve(y);
    resid = y - sub * coef;
    sol.objective_trace.push_back(resid.squaredNorm());
    sol.iterations_used = static_cast<int>(active.size());
  }
  for (std::size_t c = 0; c < active.size(); ++c) sol.code[active[c]] = coef[static_cast<Index>(c)];
  sol.converged = resid.norm() < residual_tol;
  return sol;
}

inline double binomial_coefficient(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (Index i = 1; i <= k; ++i) c = c * double(n - k + i) / double(i);
  return std::round(c);
}

/// Exact minimizer of ||y - Theta z||^2 over all supports of size <= k.
/// Refuses when C(n, k) exceeds `budget`. Among equal residuals the smaller,
/// then lexicographically first, support wins.
inline SparseSolution exhaustive_oracle(const Dictionary& dict, const Eigen::Ref<const Vector>& y, Index k,
                                        double budget = 1e6) {
  require(y.size() == dict.m(), "observation length does not match dictionary rows");
  require(k >= 0 && k <= dict.n(), "k must lie in [0, n]");
  const Index n = dict.n();
  if (binomial_coefficient(n, k) > budget)
    throw BudgetExceeded("exhaustive oracle: C(" + std::to_string(n) + ", " + std::to_string(k) +
                         ") exceeds the combinatorial budget");
  const Matrix& atoms = dict.atoms();
  const double tie = 1e-12 * std::max(1.0, y.squaredNorm());

  SparseSolution sol;
  sol.code = Vector::Zero(n);
  double best = y.squaredNorm();
  int evaluated = 1;
  std::vector<Index> idx;
  for (Index s = 1; s <= k; ++s) {
    idx.resize(static_cast<std::size_t>(s));
    for (Index i = 0; i < s; ++i) idx[static_cast<std::size_t>(i)] = i;
    Matrix sub(atoms.rows(), s);
    for (;;) {
      for (Index c = 0; c < s; ++c) sub.col(c) = atoms.col(idx[static_cast<std::size_t>(c)]);
      Eigen::ColPivHouseholderQR<Matrix> qr(sub);
      ++evaluated;
      if (qr.rank() == s) {
        const Vector coef = qr.solve(y);
        const double res = (y - sub * coef).squaredNorm();
        if (res < best - tie) {
          best = res;
          sol.code.setZero();
          for (Index c = 0; c < s; ++c) sol.code[idx[static_cast<std::size_t>(c)]] = coef[c];
        }
      }
      // next combination in lexicographic order
      Index pos = s - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - s + pos) --pos;
      if (pos < 0) break;
      ++idx[static_cast<std::size_t>(pos)];
      for (Index q = pos + 1; q < s; ++q) idx[static_cast<std::size_t>(q)] = idx[static_cast<std::size_t>(q - 1)] + 1;
    }
  }
  sol.objective_trace.push_back(best);
  sol.iterations_used = evaluated;
  sol.converged = true;
  return sol;
}

enum class SolverKind { kIsta, kFista, kOmp, kExhaustive };

inline std::string_view to_string(SolverKind s) {
  switch (s) {
    case SolverKind::kIsta: return "ista";
    case SolverKind::kFista: return "fista";
    case SolverKind::kOmp: return "omp";
    case SolverKind::kExhaustive: return "exhaustive";
  }
  return "?";
}

/// Solves every column of `y` independently; output order follows input order.
inline std::vector<SparseSolution> solve_batch(const Dictionary& dict, const Eigen::Ref<const Matrix>& y,
                                               SolverKind kind, const SolverConfig& config, Index k,
                                               unsigned jobs = 1) {
  require(y.rows() == dict.m(), "observation length does not match dictionary rows");
  std::vector<SparseSolution> out(static_cast<std::size_t>(y.cols()));
  const double lip = (kind == SolverKind::kIsta || kind == SolverKind::kFista) ? lipschitz_constant(dict) : 0.0;
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const Vector yi = y.col(static_cast<Index>(i));
    switch (kind) {
      case SolverKind::kIsta: out[i] = ista(dict, yi, config, std::nullopt, lip); break;
      case SolverKind::kFista: out[i] = fista(dict, yi, config, std::nullopt, lip); break;
      case SolverKind::kOmp: out[i] = omp(dict, yi, k); break;
      case SolverKind::kExhaustive: out[i] = exhaustive_oracle(dict, yi, k); break;
    }
  });
  return out;
}

struct BatchSolution {
  Matrix codes;  // N x D
  std::vector<double> objective_trace;  // summed over samples
  int iterations_used = 0;
  bool converged = false;
};

/// ISTA on all columns at once with one shared step size; backtracking acts on
/// the summed objective, so the summed trace is non-increasing.
inline BatchSolution ista_batch(const Dictionary& dict, const Eigen::Ref<const Matrix>& y, const SolverConfig& config,
                                const Matrix* warm_start = nullptr) {
  config.validate();
  require(y.rows() == dict.m(), "observation length does not match dictionary rows");
  require(y.allFinite(), "observations contain non-finite values");
  const Matrix& atoms = dict.atoms();
  BatchSolution out;
  if (warm_start) {
    require(warm_start->rows() == dict.n() && warm_start->cols() == y.cols(), "warm start has wrong shape");
    out.codes = *warm_start;
  } else {
    out.codes = Matrix::Zero(dict.n(), y.cols());
  }
  auto soft = [](const Matrix& v, double t) {
    return v.unaryExpr([t](double x) {
      const double mag = std::abs(x) - t;
      return mag > 0.0 ? std::copysign(mag, x) : 0.0;
    });
  };
  double lk = lipschitz_constant(dict);
  Matrix resid = atoms * out.codes - y;
  double smooth = resid.squaredNorm();
  double obj = smooth + config.lambda * out.codes.cwiseAbs().sum();
  out.objective_trace.push_back(obj);
  detail::StopRule stop(config.tol);
  for (int it = 1; it <= config.max_iters; ++it) {
    const Matrix grad = 2.0 * (atoms.transpose() * resid);
    Matrix next;
    Matrix next_resid;
    double next_smooth = 0.0;
    for (int tries = 0;; ++tries) {
      next = soft(out.codes - grad / lk, config.lambda / lk);
      next_resid = atoms * next - y;
      next_smooth = next_resid.squaredNorm();
      if (config.step_rule != StepRule::kBacktracking || tries >= 60) break;
      const Matrix d = next - out.codes;
      const double model = smooth + (grad.array() * d.array()).sum() + 0.5 * lk * d.squaredNorm();
      if (next_smooth <= model + 1e-15 * (1.0 + std::abs(smooth))) break;
      lk *= 2.0;
    }
    const double next_obj = next_smooth + config.lambda * next.cwiseAbs().sum();
    const double step_norm = (next - out.codes).norm();
    out.codes = std::move(next);
    resid = std::move(next_resid);
    smooth = next_smooth;
    out.objective_trace.push_back(next_obj);
    out.iterations_used = it;
    const bool done = stop.update(obj, next_obj, step_norm, out.codes.norm());
    obj = next_obj;
    if (done) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace splin

#endif  // SPLIN_SOLVERS_HPP
