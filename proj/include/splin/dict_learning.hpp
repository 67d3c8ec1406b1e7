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

#ifndef SPLIN_DICT_LEARNING_HPP
#define SPLIN_DICT_LEARNING_HPP

// Sparse coding by alternation: batched lasso inference at a fixed
// dictionary, then a dictionary update under the unit-norm column constraint.

#include <splin/core.hpp>
#include <splin/random.hpp>
#include <splin/solvers.hpp>

#include <algorithm>
#include <functional>
#include <numeric>

namespace splin {

enum class UpdateRule { kLeastSquares, kProjectedGradient };
enum class DeadAtomPolicy { kReinitWorstResidual, kKeep };

inline std::string_view to_string(UpdateRule r) {
  return r == UpdateRule::kLeastSquares ? "least-squares-then-project" : "projected-gradient";
}
inline std::string_view to_string(DeadAtomPolicy p) {
  return p == DeadAtomPolicy::kReinitWorstResidual ? "reinit-to-worst-residual" : "keep";
}

struct DictLearnConfig {
  int outer_rounds = 50;
  SolverConfig inner{0.1, 200, 1e-6, StepRule::kBacktracking};
  UpdateRule update_rule = UpdateRule::kLeastSquares;
  DeadAtomPolicy dead_atom_policy = DeadAtomPolicy::kReinitWorstResidual;
  Index batch_size = 0;  // 0: full batch

  void validate() const {
    require(outer_rounds >= 1, "outer_rounds must be >= 1");
    require(batch_size >= 0, "batch_size must be nonnegative");
    inner.validate();
  }
};

struct DictLearnTrace {
  std::vector<double> loss;            // mean lasso objective per sample
  std::vector<double> reconstruction;  // mean ||y - Theta z||^2
  std::vector<double> mean_sparsity;   // mean active atoms per sample
  std::vector<double> dictionary_change;  // max column angle (radians) vs previous round
  std::vector<long long> dead_atoms;
};

struct DictionaryUpdate {
  Dictionary dictionary;
  std::vector<Index> dead_atoms;
  bool ridge_used = false;
};

namespace detail {

inline double lasso_total(const Matrix& atoms, const Matrix& y, const Matrix& z, double lambda) {
  return (y - atoms * z).squaredNorm() + lambda * z.cwiseAbs().sum();
}

inline Matrix normalize_columns(Matrix a, const Matrix& fallback) {
  for (Index j = 0; j < a.cols(); ++j) {
    const double n = a.col(j).norm();
    if (n > 0.0 && std::isfinite(n))
      a.col(j) /= n;
    else
      a.col(j) = fallback.col(j);
  }
  return a;
}

}  // namespace detail

/// One dictionary update for fixed codes (N x D, column i codes sample i).
/// Least squares minimizes sum_i ||y_i - Theta z_i||^2 over the live atoms
/// (ridge 1e-8 when Z Z^T is singular) and rescales columns to unit norm.
/// Atoms whose code row is all zero are dead and handled by `policy`.
inline DictionaryUpdate update_dictionary(const ObservationBatch& batch, const Eigen::Ref<const Matrix>& codes,
                                          UpdateRule rule, const Dictionary& current,
                                          DeadAtomPolicy policy = DeadAtomPolicy::kKeep) {
  const Matrix& y = batch.samples();
  require(codes.cols() == y.cols(), "one code per sample is required");
  require(codes.rows() == current.n() && y.rows() == current.m(), "codes do not match the dictionary shape");
  require(codes.allFinite(), "codes contain non-finite values");

  DictionaryUpdate out;
  std::vector<Index> live;
  for (Index j = 0; j < codes.rows(); ++j) {
    if (codes.row(j).cwiseAbs().maxCoeff() == 0.0)
      out.dead_atoms.push_back(j);
    else
      live.push_back(j);
  }

  Matrix next = current.atoms();
  if (!live.empty()) {
    Matrix zl(static_cast<Index>(live.size()), codes.cols());
    for (std::size_t r = 0; r < live.size(); ++r) zl.row(static_cast<Index>(r)) = codes.row(live[r]);
    Matrix theta_live;
    if (rule == UpdateRule::kLeastSquares) {
      Matrix gram = zl * zl.transpose();
      Eigen::LDLT<Matrix> ldlt(gram);
      const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                            Eigen::FullPivLU<Matrix>(gram).rank() < gram.rows();
      if (singular) {
        out.ridge_used = true;
        gram.diagonal().array() += 1e-8;
        ldlt.compute(gram);
      }
      theta_live = ldlt.solve(zl * y.transpose()).transpose();
    } else {
      Matrix theta(current.m(), static_cast<Index>(live.size()));
      for (std::size_t r = 0; r < live.size(); ++r) theta.col(static_cast<Index>(r)) = current.col(live[r]);
      const double lip = 2.0 * spectral_norm_sq(zl.transpose());
      const Matrix grad = 2.0 * (theta * zl - y) * zl.transpose();
      theta_live = lip > 0.0 ? Matrix(theta - grad / lip) : theta;
    }
    for (std::size_t r = 0; r < live.size(); ++r) next.col(live[r]) = theta_live.col(static_cast<Index>(r));
    next = detail::normalize_columns(std::move(next), current.atoms());
  }

  if (policy == DeadAtomPolicy::kReinitWorstResidual && !out.dead_atoms.empty() && !live.empty()) {
    const Vector err = (y - next * codes).colwise().squaredNorm().transpose();
    std::vector<Index> order(static_cast<std::size_t>(err.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return err[a] > err[b]; });
    std::size_t pick = 0;
    for (Index j : out.dead_atoms) {
      while (pick < order.size() && y.col(order[pick]).norm() == 0.0) ++pick;
      if (pick >= order.size()) break;
      next.col(j) = y.col(order[pick]).normalized();
      ++pick;
    }
  }
  out.dictionary = Dictionary::normalized(std::move(next));
  return out;
}

/// Descent step on the product of unit spheres: tangent-projected gradient,
/// renormalized, step halved until the objective does not increase.
inline std::optional<Matrix> sphere_descent_step(const Matrix& atoms, const Matrix& y, const Matrix& z, double lambda) {
  const double base = detail::lasso_total(atoms, y, z, lambda);
  Matrix grad = 2.0 * (atoms * z - y) * z.transpose();
  for (Index j = 0; j < grad.cols(); ++j) grad.col(j) -= atoms.col(j).dot(grad.col(j)) * atoms.col(j);
  const double lip = 2.0 * spectral_norm_sq(z.transpose());
  if (lip <= 0.0 || grad.squaredNorm() == 0.0) return std::nullopt;
  double step = 1.0 / lip;
  for (int tries = 0; tries < 40; ++tries, step *= 0.5) {
    Matrix cand = detail::normalize_columns(atoms - step * grad, atoms);
    if (detail::lasso_total(cand, y, z, lambda) <= base) return cand;
  }
  return std::nullopt;
}

using SnapshotFn = std::function<void(int round, const Dictionary&)>;

struct LearnResult {
  Dictionary dictionary;
  DictLearnTrace trace;
  Matrix codes;  // N x D codes from the last inference step
};

/// Learns n_atoms unit-norm atoms. Atoms start as normalized training samples
/// chosen at random, skipping near-parallel repeats while others remain.
/// With full batches each round's mean objective is non-increasing: the
/// dictionary update is only accepted when it does not raise the objective
/// at the current codes, and inference is warm-started with a monotone
/// solver.
inline LearnResult learn(const ObservationBatch& batch, Index n_atoms, const DictLearnConfig& config,
                         std::uint64_t seed, const SnapshotFn& snapshot = {}) {
  config.validate();
  require(n_atoms >= 1, "n_atoms must be >= 1");
  const Matrix& y = batch.samples();
  require(y.allFinite(), "observations contain non-finite values");
  const Index d = y.cols();

  Rng rng = make_rng(derive_seed(seed, "dict-init"));
  std::vector<Index> candidates;
  for (Index i = 0; i < d; ++i)
    if (y.col(i).norm() > 0.0) candidates.push_back(i);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  // Samples nearly parallel to an earlier pick are deferred; otherwise
  // duplicate atoms share their codes and never go dead.
  std::vector<Index> picks, deferred;
  for (Index c : candidates) {
    if (static_cast<Index>(picks.size()) == n_atoms) break;
    const Vector u = y.col(c).normalized();
    bool parallel = false;
    for (Index p : picks)
      if (std::abs(u.dot(y.col(p).normalized())) > 0.99) {
        parallel = true;
        break;
      }
    (parallel ? deferred : picks).push_back(c);
  }
  for (std::size_t i = 0; i < deferred.size() && static_cast<Index>(picks.size()) < n_atoms; ++i)
    picks.push_back(deferred[i]);
  Matrix init(y.rows(), n_atoms);
  for (Index j = 0; j < n_atoms; ++j) {
    if (j < static_cast<Index>(picks.size()))
      init.col(j) = y.col(picks[static_cast<std::size_t>(j)]);
    else
      for (Index r = 0; r < y.rows(); ++r) init(r, j) = standard_normal(rng);
  }

  LearnResult res;
  res.dictionary = Dictionary::normalized(std::move(init));
  res.codes = Matrix::Zero(n_atoms, d);
  const double lambda = config.inner.lambda;
  const bool minibatch = config.batch_size > 0 && config.batch_size < d;
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});

  Matrix previous = res.dictionary.atoms();
  for (int round = 1; round <= config.outer_rounds; ++round) {
    Matrix ys, zs;
    std::vector<Index> cols;
    if (minibatch) {
      Rng shuffle_rng = make_rng(derive_seed(seed, "dict-minibatch", {std::uint64_t(round)}));
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      cols.assign(order.begin(), order.begin() + config.batch_size);
      std::sort(cols.begin(), cols.end());
      ys.resize(y.rows(), config.batch_size);
      zs.resize(n_atoms, config.batch_size);
      for (std::size_t c = 0; c < cols.size(); ++c) {
        ys.col(static_cast<Index>(c)) = y.col(cols[c]);
        zs.col(static_cast<Index>(c)) = res.codes.col(cols[c]);
      }
    } else {
      ys = y;
      zs = res.codes;
    }

    const BatchSolution inf = ista_batch(res.dictionary, ys, config.inner, &zs);
    zs = inf.codes;
    if (minibatch) {
      for (std::size_t c = 0; c < cols.size(); ++c) res.codes.col(cols[c]) = zs.col(static_cast<Index>(c));
    } else {
      res.codes = zs;
    }

    const double count = double(ys.cols());
    const double recon = (ys - res.dictionary.atoms() * zs).squaredNorm();
    const double loss = recon + lambda * zs.cwiseAbs().sum();
    if (!std::isfinite(loss)) throw DivergenceError("dictionary learning loss is not finite", round);
    double active = 0.0;
    for (Index c = 0; c < zs.cols(); ++c) active += double(active_support(zs.col(c)).size());
    double change = 0.0;
    for (Index j = 0; j < n_atoms; ++j)
      change = std::max(change, std::acos(std::clamp(previous.col(j).dot(res.dictionary.col(j)), -1.0, 1.0)));
    previous = res.dictionary.atoms();
    res.trace.loss.push_back(loss / count);
    res.trace.reconstruction.push_back(recon / count);
    res.trace.mean_sparsity.push_back(active / count);
    res.trace.dictionary_change.push_back(change);

    const ObservationBatch sub(ys);
    DictionaryUpdate upd = update_dictionary(sub, zs, config.update_rule, res.dictionary, config.dead_atom_policy);
    res.trace.dead_atoms.push_back(static_cast<long long>(upd.dead_atoms.size()));
    if (detail::lasso_total(upd.dictionary.atoms(), ys, zs, lambda) <= loss) {
      res.dictionary = std::move(upd.dictionary);
    } else if (auto step = sphere_descent_step(res.dictionary.atoms(), ys, zs, lambda)) {
      res.dictionary = Dictionary::normalized(std::move(*step));
    }
    if (snapshot) snapshot(round, res.dictionary);
  }
  return res;
}

}  // namespace splin

#endif  // SPLIN_DICT_LEARNING_HPP
