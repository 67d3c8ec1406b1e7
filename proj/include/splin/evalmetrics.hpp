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

#ifndef SPLIN_EVALMETRICS_HPP
#define SPLIN_EVALMETRICS_HPP

// Permutation-invariant evaluation of recovered codes and dictionaries.
//
// Code matrices here are D x N: one row per sample, one column per unit.
// All reductions that feed a reported number use fixed-order scalar loops and
// an exactly rounded sum, so results are bit-identical under any
// permutation (and sign flip) of the estimated units.

#include <splin/assignment.hpp>
#include <splin/core.hpp>
#include <splin/random.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace splin {

/// Correctly rounded sum of `xs` (Shewchuk's partials), independent of order.
inline double exact_sum(std::vector<double> xs) {
  std::vector<double> partials;
  for (double x : xs) {
    std::size_t k = 0;
    for (double y : partials) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[k++] = lo;
      x = hi;
    }
    partials.resize(k);
    partials.push_back(x);
  }
  // Round the partials (all non-overlapping) to one double, high to low.
  double hi = 0.0;
  if (!partials.empty()) {
    std::size_t n = partials.size();
    hi = partials[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials[--n];
      hi = x + y;
      const double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) break;
    }
    // half-way correction
    if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
  }
  return hi;
}

namespace detail {

inline double dot_fixed(const double* a, const double* b, Index n) {
  double s = 0.0;
  for (Index i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Centered copy of a column plus its norm; fixed evaluation order.
struct CenteredColumn {
  std::vector<double> values;
  double norm = 0.0;
};

inline CenteredColumn center(const Eigen::Ref<const Matrix>& m, Index col) {
  const Index d = m.rows();
  CenteredColumn c;
  c.values.resize(static_cast<std::size_t>(d));
  double mean = 0.0;
  for (Index i = 0; i < d; ++i) mean += m(i, col);
  mean /= double(d);
  for (Index i = 0; i < d; ++i) c.values[static_cast<std::size_t>(i)] = m(i, col) - mean;
  c.norm = std::sqrt(dot_fixed(c.values.data(), c.values.data(), d));
  return c;
}

// Orders columns of `score` lexicographically by content so the assignment
// solver sees the same matrix whatever the input order of estimated units.
inline std::vector<Index> canonical_column_order(const Matrix& score) {
  std::vector<Index> order(static_cast<std::size_t>(score.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index r = 0; r < score.rows(); ++r) {
      if (score(r, a) != score(r, b)) return score(r, a) > score(r, b);
    }
    return false;
  });
  return order;
}

// Assignment on a canonicalized copy; returns est column per true row.
inline std::vector<Index> canonical_assignment(const Matrix& score) {
  const std::vector<Index> order = canonical_column_order(score);
  Matrix canon(score.rows(), score.cols());
  for (Index c = 0; c < score.cols(); ++c) canon.col(c) = score.col(order[static_cast<std::size_t>(c)]);
  std::vector<Index> match = max_weight_assignment(canon);
  for (Index& j : match)
    if (j >= 0) j = order[static_cast<std::size_t>(j)];
  return match;
}

}  // namespace detail

struct CorrelationTable {
  Matrix abs_corr;       // N_true x N_est
  Matrix signed_corr;    // N_true x N_est
  std::vector<Index> zero_variance_true;
  std::vector<Index> zero_variance_est;
};

/// |Pearson correlation| between every true unit and every estimated unit.
/// A zero-variance unit correlates 0 with everything and is flagged.
inline CorrelationTable correlation_table(const Eigen::Ref<const Matrix>& truth, const Eigen::Ref<const Matrix>& est) {
  require(truth.rows() == est.rows(), "true and estimated codes need the same number of samples");
  require(truth.rows() >= 2, "at least two samples are needed");
  const Index d = truth.rows();
  std::vector<detail::CenteredColumn> tc, ec;
  CorrelationTable t;
  for (Index i = 0; i < truth.cols(); ++i) {
    tc.push_back(detail::center(truth, i));
    if (tc.back().norm == 0.0) t.zero_variance_true.push_back(i);
  }
  for (Index j = 0; j < est.cols(); ++j) {
    ec.push_back(detail::center(est, j));
    if (ec.back().norm == 0.0) t.zero_variance_est.push_back(j);
  }
  t.signed_corr = Matrix::Zero(truth.cols(), est.cols());
  for (Index i = 0; i < truth.cols(); ++i) {
    const auto& a = tc[static_cast<std::size_t>(i)];
    for (Index j = 0; j < est.cols(); ++j) {
      const auto& b = ec[static_cast<std::size_t>(j)];
      if (a.norm == 0.0 || b.norm == 0.0) continue;
      const double c = detail::dot_fixed(a.values.data(), b.values.data(), d) / (a.norm * b.norm);
      t.signed_corr(i, j) = std::clamp(c, -1.0, 1.0);
    }
  }
  t.abs_corr = t.signed_corr.cwiseAbs();
  return t;
}

struct MatchedUnit {
  Index true_index = 0;
  Index est_index = -1;  // -1: no estimated unit left to match
  int sign = 1;
  double score = 0.0;
};

struct RecoveryReport {
  double mcc = 0.0;
  double support_precision = std::numeric_limits<double>::quiet_NaN();
  double support_recall = std::numeric_limits<double>::quiet_NaN();
  double relative_l2 = 0.0;
  std::vector<MatchedUnit> permutation;
  std::vector<Index> spurious_est;  // estimated units left unmatched
  std::vector<Index> zero_variance_true;
  std::vector<Index> zero_variance_est;
};

/// Matches estimated to true units by maximum total |correlation|. Unmatched
/// true units score 0 in the mean. Support metrics use the per-sample rule
/// |z| > 1e-3 * max|z|; relative_l2 is measured after the least-squares
/// scale (and sign) alignment of each matched unit.
inline RecoveryReport match_codes(const Eigen::Ref<const Matrix>& truth, const Eigen::Ref<const Matrix>& est) {
  const CorrelationTable table = correlation_table(truth, est);
  const std::vector<Index> match = detail::canonical_assignment(table.abs_corr);
  const Index d = truth.rows();

  RecoveryReport r;
  r.zero_variance_true = table.zero_variance_true;
  r.zero_variance_est = table.zero_variance_est;
  std::vector<char> est_used(static_cast<std::size_t>(est.cols()), 0);
  std::vector<double> scores;
  for (Index i = 0; i < truth.cols(); ++i) {
    MatchedUnit u;
    u.true_index = i;
    u.est_index = match[static_cast<std::size_t>(i)];
    if (u.est_index >= 0) {
      est_used[static_cast<std::size_t>(u.est_index)] = 1;
      u.score = table.abs_corr(i, u.est_index);
      u.sign = table.signed_corr(i, u.est_index) < 0.0 ? -1 : 1;
    }
    scores.push_back(u.score);
    r.permutation.push_back(u);
  }
  for (Index j = 0; j < est.cols(); ++j)
    if (!est_used[static_cast<std::size_t>(j)]) r.spurious_est.push_back(j);
  r.mcc = truth.cols() ? exact_sum(scores) / double(truth.cols()) : 0.0;

  // Support precision / recall, with a per-sample activity rule for estimates.
  std::vector<double> est_peak(static_cast<std::size_t>(d), 0.0);
  for (Index s = 0; s < d; ++s)
    for (Index j = 0; j < est.cols(); ++j) est_peak[static_cast<std::size_t>(s)] = std::max(est_peak[static_cast<std::size_t>(s)], std::abs(est(s, j)));
  auto est_active = [&](Index s, Index j) {
    const double peak = est_peak[static_cast<std::size_t>(s)];
    return peak > 0.0 && std::abs(est(s, j)) > 1e-3 * peak;
  };
  long long true_active = 0, est_total = 0, hits = 0;
  for (Index s = 0; s < d; ++s) {
    for (Index i = 0; i < truth.cols(); ++i) true_active += truth(s, i) != 0.0;
    for (Index j = 0; j < est.cols(); ++j) est_total += est_active(s, j);
    for (const MatchedUnit& u : r.permutation)
      if (u.est_index >= 0 && truth(s, u.true_index) != 0.0 && est_active(s, u.est_index)) ++hits;
  }
  r.support_precision = est_total ? double(hits) / double(est_total) : 1.0;
  r.support_recall = true_active ? double(hits) / double(true_active) : 1.0;

  std::vector<double> err_terms, norm_terms;
  for (const MatchedUnit& u : r.permutation) {
    const Index i = u.true_index;
    double scale = 0.0;
    if (u.est_index >= 0) {
      double num = 0.0, den = 0.0;
      for (Index s = 0; s < d; ++s) {
        num += truth(s, i) * est(s, u.est_index);
        den += est(s, u.est_index) * est(s, u.est_index);
      }
      scale = den > 0.0 ? num / den : 0.0;
    }
    for (Index s = 0; s < d; ++s) {
      const double e = truth(s, i) - (u.est_index >= 0 ? scale * est(s, u.est_index) : 0.0);
      err_terms.push_back(e * e);
      norm_terms.push_back(truth(s, i) * truth(s, i));
    }
  }
  const double err = exact_sum(std::move(err_terms));
  const double ref = exact_sum(std::move(norm_terms));
  r.relative_l2 = ref > 0.0 ? std::sqrt(err / ref) : (err > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  return r;
}

/// Atom matching by maximum total |cosine|. `mcc` holds the mean matched
/// |cosine| over true atoms; relative_l2 compares sign-aligned atoms.
/// Support fields do not apply and stay NaN.
inline RecoveryReport match_dictionaries(const Dictionary& truth, const Dictionary& learned) {
  require(truth.m() == learned.m(), "dictionaries must share the ambient dimension");
  const Index m = truth.m();
  Matrix signed_cos(truth.n(), learned.n());
  for (Index i = 0; i < truth.n(); ++i) {
    const double* a = truth.atoms().col(i).data();
    const double na = std::sqrt(detail::dot_fixed(a, a, m));
    for (Index j = 0; j < learned.n(); ++j) {
      const double* b = learned.atoms().col(j).data();
      const double nb = std::sqrt(detail::dot_fixed(b, b, m));
      signed_cos(i, j) = std::clamp(detail::dot_fixed(a, b, m) / (na * nb), -1.0, 1.0);
    }
  }
  const Matrix abs_cos = signed_cos.cwiseAbs();
  const std::vector<Index> match = detail::canonical_assignment(abs_cos);

  RecoveryReport r;
  std::vector<char> used(static_cast<std::size_t>(learned.n()), 0);
  std::vector<double> scores, err_terms;
  for (Index i = 0; i < truth.n(); ++i) {
    MatchedUnit u;
    u.true_index = i;
    u.est_index = match[static_cast<std::size_t>(i)];
    if (u.est_index >= 0) {
      used[static_cast<std::size_t>(u.est_index)] = 1;
      u.score = abs_cos(i, u.est_index);
      u.sign = signed_cos(i, u.est_index) < 0.0 ? -1 : 1;
    }
    for (Index k = 0; k < m; ++k) {
      const double e = truth.atoms()(k, i) - (u.est_index >= 0 ? u.sign * learned.atoms()(k, u.est_index) : 0.0);
      err_terms.push_back(e * e);
    }
    scores.push_back(u.score);
    r.permutation.push_back(u);
  }
  for (Index j = 0; j < learned.n(); ++j)
    if (!used[static_cast<std::size_t>(j)]) r.spurious_est.push_back(j);
  r.mcc = exact_sum(scores) / double(truth.n());
  // every true atom has unit norm, so ||T||_F^2 = n
  r.relative_l2 = std::sqrt(exact_sum(std::move(err_terms)) / double(truth.n()));
  return r;
}

struct SuperpositionReport {
  bool is_superposed = false;
  double coherence = 0.0;
  long long offending_pairs = 0;
};

/// Non-orthogonality of distinct atoms, with orthogonality tolerance 1e-6.
inline SuperpositionReport superposition_check(const Dictionary& dict, double orth_tol = 1e-6) {
  SuperpositionReport r;
  const Index m = dict.m();
  for (Index j = 0; j < dict.n(); ++j) {
    for (Index i = 0; i < j; ++i) {
      const double c = std::abs(detail::dot_fixed(dict.atoms().col(i).data(), dict.atoms().col(j).data(), m));
      r.coherence = std::max(r.coherence, c);
      if (c > orth_tol) ++r.offending_pairs;
    }
  }
  r.is_superposed = r.coherence > orth_tol;
  return r;
}

struct InterpretabilityScore {
  std::vector<double> per_unit;
  double mean = 0.0;
  std::vector<Index> zero_variance_units;
};

/// Per-unit score: max_j |corr(unit, true latent j)|; population score is the
/// arithmetic mean over units.
inline InterpretabilityScore interpretability_proxy(const Eigen::Ref<const Matrix>& codes,
                                                    const Eigen::Ref<const Matrix>& true_latents) {
  const CorrelationTable table = correlation_table(true_latents, codes);
  InterpretabilityScore s;
  s.zero_variance_units = table.zero_variance_est;
  s.per_unit.resize(static_cast<std::size_t>(codes.cols()), 0.0);
  for (Index j = 0; j < codes.cols(); ++j)
    s.per_unit[static_cast<std::size_t>(j)] = table.abs_corr.rows() ? table.abs_corr.col(j).maxCoeff() : 0.0;
  s.mean = s.per_unit.empty() ? 0.0 : exact_sum(s.per_unit) / double(s.per_unit.size());
  return s;
}

struct IntrusionResult {
  double accuracy = 0.0;
  double chance = 0.0;
  long long trials = 0;   // judged trials
  long long skipped = 0;  // trials skipped on constant units
};

namespace detail {

inline std::uint64_t content_hash(const Eigen::Ref<const Matrix>& m, Index col) {
  std::uint64_t h = 0x51ED270B27AFE5C1ULL;
  for (Index i = 0; i < m.rows(); ++i) h = mix64(h ^ std::bit_cast<std::uint64_t>(m(i, col) + 0.0));
  return h;
}

}  // namespace detail

/// Simulated intrusion task. Per unit and trial: top_q exemplars are drawn
/// from the unit's top-activation pool (top decile, at least top_q), one
/// intruder from the bottom decile. The judge sees the exemplars' true latents
/// and names the item farthest from the centroid of the others; exact ties are
/// broken at random. The random stream of a unit depends on its contents,
/// not its position.
inline IntrusionResult intrusion_task(const Eigen::Ref<const Matrix>& codes, const Eigen::Ref<const Matrix>& true_latents,
                                      Index top_q, int n_trials, std::uint64_t seed) {
  require(codes.rows() == true_latents.rows(), "codes and latents need the same number of samples");
  require(top_q >= 1, "top_q must be positive");
  require(n_trials >= 1, "n_trials must be positive");
  const Index d = codes.rows();
  const Index decile = std::max<Index>(1, (d + 9) / 10);
  require(d >= top_q + 1 && d - decile >= top_q, "not enough samples for top_q exemplars plus an intruder");
  const Index top_pool = std::min(std::max(top_q, decile), d - decile);

  IntrusionResult res;
  res.chance = 1.0 / double(top_q + 1);
  long long correct = 0;
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::vector<Index> pool(static_cast<std::size_t>(top_pool));
  std::vector<Index> items(static_cast<std::size_t>(top_q + 1));
  const Index dim = true_latents.cols();
  for (Index u = 0; u < codes.cols(); ++u) {
    const auto col = codes.col(u);
    if (col.maxCoeff() == col.minCoeff()) {
      res.skipped += n_trials;
      continue;
    }
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return col[a] > col[b]; });
    const std::uint64_t unit_key = detail::content_hash(codes, u);
    for (int t = 0; t < n_trials; ++t) {
      Rng rng = make_rng(derive_seed(seed, "intrusion", {unit_key, std::uint64_t(t)}));
      std::copy(order.begin(), order.begin() + top_pool, pool.begin());
      for (Index q = 0; q < top_q; ++q) {
        std::uniform_int_distribution<Index> pick(q, top_pool - 1);
        std::swap(pool[static_cast<std::size_t>(q)], pool[static_cast<std::size_t>(pick(rng))]);
        items[static_cast<std::size_t>(q)] = pool[static_cast<std::size_t>(q)];
      }
      std::uniform_int_distribution<Index> low(d - decile, d - 1);
      items[static_cast<std::size_t>(top_q)] = order[static_cast<std::size_t>(low(rng))];

      // judge: distance of each item to the centroid of the others
      std::vector<double> dist(items.size(), 0.0);
      for (std::size_t a = 0; a < items.size(); ++a) {
        double acc = 0.0;
        for (Index k = 0; k < dim; ++k) {
          double centroid = 0.0;
          for (std::size_t b = 0; b < items.size(); ++b)
            if (b != a) centroid += true_latents(items[b], k);
          centroid /= double(top_q);
          const double diff = true_latents(items[a], k) - centroid;
          acc += diff * diff;
        }
        dist[a] = acc;
      }
      const double far = *std::max_element(dist.begin(), dist.end());
      std::vector<std::size_t> tied;
      for (std::size_t a = 0; a < dist.size(); ++a)
        if (dist[a] == far) tied.push_back(a);
      const std::size_t choice =
          tied.size() == 1 ? tied[0] : tied[std::uniform_int_distribution<std::size_t>(0, tied.size() - 1)(rng)];
      correct += choice == static_cast<std::size_t>(top_q);
      ++res.trials;
    }
  }
  res.accuracy = res.trials ? double(correct) / double(res.trials) : 0.0;
  return res;
}

/// Ground-truth dissimilarity between samples: Euclidean distance of their
/// latents, or the absolute difference in one latent coordinate.
class DissimilarityOracle {
 public:
  explicit DissimilarityOracle(Matrix latents, Index coordinate = -1)
      : latents_(std::move(latents)), coordinate_(coordinate) {
    require(coordinate_ < latents_.cols(), "oracle coordinate out of range");
  }

  double operator()(Index i, Index j) const {
    if (coordinate_ >= 0) return std::abs(latents_(i, coordinate_) - latents_(j, coordinate_));
    double acc = 0.0;
    for (Index k = 0; k < latents_.cols(); ++k) {
      const double diff = latents_(i, k) - latents_(j, k);
      acc += diff * diff;
    }
    return std::sqrt(acc);
  }

  Index samples() const noexcept { return latents_.rows(); }

 private:
  Matrix latents_;
  Index coordinate_;
};

/// sum_{a<b} | d_h(x_a, x_b) - |f(x_a) - f(x_b)| |, the one-dimensional MDS
/// stress of a scalar unit. `rep[a]` is the unit's value on sample samples[a].
inline double mds_stress(const Eigen::Ref<const Vector>& rep, const DissimilarityOracle& oracle,
                         const std::vector<Index>& samples) {
  require(rep.size() == static_cast<Index>(samples.size()), "one representation value per sample is required");
  require(samples.size() >= 2, "stress needs at least two samples");
  for (Index s : samples) require(s >= 0 && s < oracle.samples(), "sample index out of range");
  double stress = 0.0;
  for (std::size_t a = 0; a < samples.size(); ++a)
    for (std::size_t b = a + 1; b < samples.size(); ++b) {
      const double dh = oracle(samples[a], samples[b]);
      const double df = std::abs(rep[static_cast<Index>(a)] - rep[static_cast<Index>(b)]);
      stress += std::abs(dh - df);
    }
  return stress;
}

}  // namespace splin

#endif  // SPLIN_EVALMETRICS_HPP
