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

#ifndef SPLIN_IDENT_CHECK_HPP
#define SPLIN_IDENT_CHECK_HPP

#include <splin/core.hpp>
#include <splin/random.hpp>
#include <splin/synthdgp.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace splin {

// ---------------------------------------------------------------------------
// Cluster data on the sphere

struct ClusterDgpSpec {
  Index n_classes = 4;
  Index latent_dim = 3;
  Matrix centers;         // latent_dim x n_classes, unit columns
  double spread = 0.25;   // std of the isotropic perturbation before renormalizing
  GeneratorSpec generator;

  void validate() const {
    require(n_classes >= 2, "n_classes must be >= 2");
    require(latent_dim >= 1, "latent_dim must be >= 1");
    require(centers.rows() == latent_dim && centers.cols() == n_classes, "centers must be latent_dim x n_classes");
    for (Index c = 0; c < n_classes; ++c)
      require(std::abs(centers.col(c).norm() - 1.0) <= 1e-9, "cluster centers must be unit norm");
    require(std::isfinite(spread) && spread >= 0.0, "spread must be nonnegative");
    require(generator.input_dim == latent_dim, "generator input must equal latent_dim");
  }
};

/// Centers are normalized gaussian draws; the generator maps R^d to R^d.
inline ClusterDgpSpec make_cluster_spec(Index n_classes, Index latent_dim, GeneratorKind kind, std::uint64_t seed,
                                        double spread = 0.25) {
  ClusterDgpSpec spec;
  spec.n_classes = n_classes;
  spec.latent_dim = latent_dim;
  spec.spread = spread;
  Rng rng = make_rng(derive_seed(seed, "cluster-centers"));
  spec.centers = gaussian_matrix(latent_dim, n_classes, rng);
  for (Index c = 0; c < n_classes; ++c) spec.centers.col(c).normalize();
  spec.generator = GeneratorSpec{kind, latent_dim, latent_dim, derive_seed(seed, "cluster-generator"), std::nullopt};
  spec.validate();
  return spec;
}

struct ClusterSample {
  Matrix latents;               // d x count, unit columns
  Matrix data;                  // generator output, one column per sample
  std::vector<Index> labels;
};

/// Labels cycle through the classes so every class is equally represented.
inline ClusterSample sample_clusters(const ClusterDgpSpec& spec, Index count, std::uint64_t seed) {
  spec.validate();
  require(count >= 1, "count must be positive");
  Rng rng = make_rng(seed);
  ClusterSample s;
  s.latents.resize(spec.latent_dim, count);
  s.labels.resize(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    const Index c = i % spec.n_classes;
    Vector z = spec.centers.col(c);
    for (Index r = 0; r < spec.latent_dim; ++r) z[r] += spec.spread * standard_normal(rng);
    const double norm = z.norm();
    s.latents.col(i) = norm > 0.0 ? Vector(z / norm) : Vector(spec.centers.col(c));
    s.labels[static_cast<std::size_t>(i)] = c;
  }
  s.data = Generator(spec.generator).apply_batch(s.latents);
  return s;
}

// ---------------------------------------------------------------------------
// Encoder f with a linear classification head

enum class Activation { kTanh, kIdentity };

struct DenseLayer {
  Matrix weight;
  Vector bias;
};

struct MlpClassifier {
  std::vector<DenseLayer> layers;  // activation after every layer but the last
  Matrix head;                     // n_classes x feature_dim, no bias
  Activation activation = Activation::kTanh;

  Index input_dim() const { return layers.front().weight.cols(); }
  Index feature_dim() const { return layers.back().weight.rows(); }
  Index n_classes() const { return head.rows(); }

  bool finite() const {
    for (const auto& l : layers)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return head.allFinite();
  }
};

inline MlpClassifier init_classifier(Index input_dim, Index feature_dim, Index n_classes,
                                     const std::vector<Index>& hidden, std::uint64_t seed,
                                     Activation activation = Activation::kTanh) {
  require(input_dim >= 1 && feature_dim >= 1 && n_classes >= 2, "invalid classifier dimensions");
  Rng rng = make_rng(derive_seed(seed, "mlp-init"));
  MlpClassifier model;
  model.activation = activation;
  std::vector<Index> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(feature_dim);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    require(widths[l + 1] >= 1, "hidden widths must be positive");
    DenseLayer layer;
    layer.weight = gaussian_matrix(widths[l + 1], widths[l], rng) / std::sqrt(double(widths[l]));
    layer.bias = Vector::Zero(widths[l + 1]);
    model.layers.push_back(std::move(layer));
  }
  model.head = gaussian_matrix(n_classes, feature_dim, rng) / std::sqrt(double(feature_dim));
  return model;
}

namespace detail {

inline Matrix activate(const Matrix& pre, Activation a) {
  return a == Activation::kTanh ? Matrix(pre.array().tanh()) : pre;
}

struct Forward {
  std::vector<Matrix> inputs;  // input to each layer
  Matrix features;
  Matrix logits;
};

inline Forward forward(const MlpClassifier& model, const Eigen::Ref<const Matrix>& x) {
  require(x.rows() == model.input_dim(), "classifier input has wrong dimension");
  Forward fw;
  Matrix a = x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    fw.inputs.push_back(a);
    Matrix pre = (model.layers[l].weight * a).colwise() + model.layers[l].bias;
    a = l + 1 < model.layers.size() ? activate(pre, model.activation) : std::move(pre);
  }
  fw.features = std::move(a);
  fw.logits = model.head * fw.features;
  return fw;
}

// Column-wise softmax probabilities and mean cross-entropy.
inline double softmax_xent(const Matrix& logits, const std::vector<Index>& labels, Matrix* probs) {
  require(static_cast<Index>(labels.size()) == logits.cols(), "one label per sample is required");
  double total = 0.0;
  if (probs) probs->resize(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.cols(); ++i) {
    const Index y = labels[static_cast<std::size_t>(i)];
    require(y >= 0 && y < logits.rows(), "label out of range");
    const double mx = logits.col(i).maxCoeff();
    const Vector e = (logits.col(i).array() - mx).exp();
    const double z = e.sum();
    total += std::log(z) - (logits(y, i) - mx);
    if (probs) probs->col(i) = e / z;
  }
  return total / double(logits.cols());
}

}  // namespace detail

/// Encoder output f(x), one column per sample.
inline Matrix features(const MlpClassifier& model, const Eigen::Ref<const Matrix>& x) {
  return detail::forward(model, x).features;
}

inline double classifier_loss(const MlpClassifier& model, const Eigen::Ref<const Matrix>& x,
                              const std::vector<Index>& labels) {
  return detail::softmax_xent(detail::forward(model, x).logits, labels, nullptr);
}

inline double classifier_accuracy(const MlpClassifier& model, const Eigen::Ref<const Matrix>& x,
                                  const std::vector<Index>& labels) {
  const Matrix logits = detail::forward(model, x).logits;
  Index hits = 0;
  for (Index i = 0; i < logits.cols(); ++i) {
    Index best = 0;
    logits.col(i).maxCoeff(&best);
    if (best == labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return double(hits) / double(logits.cols());
}

struct ClassifierGradients {
  std::vector<DenseLayer> layers;
  Matrix head;
};

/// Backpropagation of the mean cross-entropy.
inline ClassifierGradients classifier_gradients(const MlpClassifier& model, const Eigen::Ref<const Matrix>& x,
                                                const std::vector<Index>& labels) {
  const detail::Forward fw = detail::forward(model, x);
  Matrix probs;
  detail::softmax_xent(fw.logits, labels, &probs);
  const double inv = 1.0 / double(x.cols());
  Matrix dlogits = probs;
  for (Index i = 0; i < x.cols(); ++i) dlogits(labels[static_cast<std::size_t>(i)], i) -= 1.0;
  dlogits *= inv;

  ClassifierGradients g;
  g.head = dlogits * fw.features.transpose();
  g.layers.resize(model.layers.size());
  Matrix delta = model.head.transpose() * dlogits;  // gradient w.r.t. the last layer output
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const Matrix& in = fw.inputs[l];
    g.layers[l].weight = delta * in.transpose();
    g.layers[l].bias = delta.rowwise().sum();
    if (l == 0) break;
    delta = model.layers[l].weight.transpose() * delta;
    // `in` is the activated output of layer l-1.
    if (model.activation == Activation::kTanh) delta.array() *= 1.0 - in.array().square();
  }
  return g;
}

struct ClassifierTrainConfig {
  int epochs = 200;
  double learning_rate = 0.5;
  Index batch_size = 0;  // 0: full batch
  Index n_train = 2048;
  std::vector<Index> hidden{64, 64};
  Activation activation = Activation::kTanh;

  void validate() const {
    require(epochs >= 0, "epochs must be nonnegative");
    require(std::isfinite(learning_rate) && learning_rate >= 0.0, "learning_rate must be nonnegative");
    require(batch_size >= 0 && n_train >= 1, "batch_size must be nonnegative and n_train positive");
  }
};

struct ClassifierTrainResult {
  MlpClassifier model;
  std::vector<double> loss_trace;  // sample-weighted mean minibatch loss per epoch
  double train_accuracy = 0.0;
};

/// Untrained model for `seed`; train_classifier starts from exactly this.
inline MlpClassifier initial_classifier(const ClusterDgpSpec& spec, const ClassifierTrainConfig& cfg,
                                        std::uint64_t seed) {
  return init_classifier(spec.generator.output_dim, spec.latent_dim, spec.n_classes, cfg.hidden, seed,
                         cfg.activation);
}

namespace detail {

inline void apply_step(MlpClassifier& model, const ClassifierGradients& g, double step) {
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    model.layers[l].weight -= step * g.layers[l].weight;
    model.layers[l].bias -= step * g.layers[l].bias;
  }
  model.head -= step * g.head;
}

}  // namespace detail

/// Gradient descent on softmax cross-entropy over a fixed training set drawn
/// from the cluster DGP. Full-batch runs (the default) halve the step
/// whenever it would raise the loss, so the epoch trace is non-increasing;
/// minibatch runs use plain SGD.
inline ClassifierTrainResult train_classifier(const ClusterDgpSpec& spec, const ClassifierTrainConfig& cfg,
                                              std::uint64_t seed) {
  spec.validate();
  cfg.validate();
  const ClusterSample train = sample_clusters(spec, cfg.n_train, derive_seed(seed, "classifier-train"));
  ClassifierTrainResult res;
  res.model = initial_classifier(spec, cfg, seed);
  const Index d = cfg.n_train;
  const Index bs = cfg.batch_size == 0 ? d : std::min(cfg.batch_size, d);
  std::vector<Index> order(static_cast<std::size_t>(d));
  Matrix xb;
  std::vector<Index> yb;
  double step = cfg.learning_rate;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng = make_rng(derive_seed(seed, "classifier-epoch", {std::uint64_t(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0.0;
    for (Index start = 0; start < d; start += bs) {
      const Index count = std::min(bs, d - start);
      xb.resize(train.data.rows(), count);
      yb.resize(static_cast<std::size_t>(count));
      for (Index c = 0; c < count; ++c) {
        const Index src = order[static_cast<std::size_t>(start + c)];
        xb.col(c) = train.data.col(src);
        yb[static_cast<std::size_t>(c)] = train.labels[static_cast<std::size_t>(src)];
      }
      const double loss = classifier_loss(res.model, xb, yb);
      if (!std::isfinite(loss)) throw DivergenceError("classifier loss is not finite", epoch);
      weighted += loss * double(count);
      if (cfg.learning_rate == 0.0) continue;
      const ClassifierGradients g = classifier_gradients(res.model, xb, yb);
      if (count < d) {
        detail::apply_step(res.model, g, cfg.learning_rate);
        continue;
      }
      // Full batch: halve the step until the loss does not increase.
      for (int tries = 0; tries < 40; ++tries, step *= 0.5) {
        MlpClassifier cand = res.model;
        detail::apply_step(cand, g, step);
        const double next = classifier_loss(cand, xb, yb);
        if (std::isfinite(next) && next <= loss) {
          res.model = std::move(cand);
          break;
        }
      }
    }
    if (!res.model.finite()) throw DivergenceError("classifier parameters diverged", epoch);
    res.loss_trace.push_back(weighted / double(d));
  }
  res.train_accuracy = classifier_accuracy(res.model, train.data, train.labels);
  return res;
}

// ---------------------------------------------------------------------------
// Linearity, additivity and analogy checks

struct AffineFit {
  double r_squared = 0.0;  // mean over output coordinates
  bool ridge_used = false;
  Matrix coef;             // out_dim x (in_dim + 1), last column the intercept
};

/// Least-squares fit y = A z + b; columns are samples.
inline AffineFit affine_r_squared(const Eigen::Ref<const Matrix>& z, const Eigen::Ref<const Matrix>& y) {
  require(z.cols() == y.cols() && z.cols() >= 1, "z and y need the same positive number of samples");
  const Index n = z.cols();
  Matrix design(n, z.rows() + 1);
  design.leftCols(z.rows()) = z.transpose();
  design.col(z.rows()).setOnes();
  AffineFit fit;
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  Matrix sol;
  if (qr.rank() < design.cols()) {
    fit.ridge_used = true;
    Matrix gram = design.transpose() * design;
    gram.diagonal().array() += 1e-8;
    sol = gram.ldlt().solve(design.transpose() * y.transpose());
  } else {
    sol = qr.solve(Matrix(y.transpose()));
  }
  fit.coef = sol.transpose();
  const Matrix resid = y - fit.coef * design.transpose();
  double total = 0.0;
  for (Index r = 0; r < y.rows(); ++r) {
    const double mean = y.row(r).mean();
    const double ss_tot = (y.row(r).array() - mean).square().sum();
    const double ss_res = resid.row(r).squaredNorm();
    if (ss_tot > 0.0)
      total += 1.0 - ss_res / ss_tot;
    else
      total += ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  }
  fit.r_squared = total / double(y.rows());
  return fit;
}

using LatentMap = std::function<Vector(const Vector&)>;

inline double cosine(const Vector& a, const Vector& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return a.dot(b) / (na * nb);
}

enum class PairPolicy { kRequireDisjoint, kAny };

struct LatentPair {
  Vector first;
  Vector second;
};

struct AdditivityStats {
  std::vector<double> cosines;           // cos(map(z1) + map(z2), map(z1 + z2))
  std::vector<double> baseline_cosines;  // cos(map(z1), map(z2))
  double mean = 0.0;
  double min = 0.0;
  double baseline_mean = 0.0;
  Index skipped = 0;                     // pairs with a zero vector
};

/// Pairs with any zero vector among the compared quantities are skipped.
inline AdditivityStats additivity_test(const LatentMap& map, const std::vector<LatentPair>& pairs,
                                       PairPolicy policy = PairPolicy::kRequireDisjoint) {
  AdditivityStats s;
  for (const LatentPair& p : pairs) {
    require(p.first.size() == p.second.size(), "pair members must have equal length");
    if (policy == PairPolicy::kRequireDisjoint)
      for (Index i = 0; i < p.first.size(); ++i)
        require(p.first[i] == 0.0 || p.second[i] == 0.0, "pair supports overlap");
    const Vector a = map(p.first), b = map(p.second), ab = map(Vector(p.first + p.second));
    const double c = cosine(Vector(a + b), ab);
    const double base = cosine(a, b);
    if (std::isnan(c) || std::isnan(base)) {
      ++s.skipped;
      continue;
    }
    s.cosines.push_back(c);
    s.baseline_cosines.push_back(base);
  }
  if (!s.cosines.empty()) {
    s.mean = std::accumulate(s.cosines.begin(), s.cosines.end(), 0.0) / double(s.cosines.size());
    s.min = *std::min_element(s.cosines.begin(), s.cosines.end());
    s.baseline_mean =
        std::accumulate(s.baseline_cosines.begin(), s.baseline_cosines.end(), 0.0) / double(s.baseline_cosines.size());
  } else {
    s.mean = s.min = s.baseline_mean = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

/// k-sparse pairs on disjoint supports drawn from {0..n-1}; requires 2k <= n.
inline std::vector<LatentPair> disjoint_pairs(Index n, Index k, Index count, ValueDist dist, std::uint64_t seed) {
  require(k >= 1 && 2 * k <= n, "disjoint pairs need 1 <= k and 2k <= n");
  std::vector<LatentPair> out;
  for (Index i = 0; i < count; ++i) {
    const LatentCode joint = sample_k_sparse(n, 2 * k, dist, derive_seed(seed, "pair", {std::uint64_t(i)}));
    const std::vector<Index>& supp = joint.support();
    Rng rng = make_rng(derive_seed(seed, "pair-split", {std::uint64_t(i)}));
    std::vector<Index> idx(supp.begin(), supp.end());
    std::shuffle(idx.begin(), idx.end(), rng);
    LatentPair p{Vector::Zero(n), Vector::Zero(n)};
    for (Index j = 0; j < 2 * k; ++j) {
      Vector& dst = j < k ? p.first : p.second;
      dst[idx[static_cast<std::size_t>(j)]] = joint.values()[idx[static_cast<std::size_t>(j)]];
    }
    out.push_back(std::move(p));
  }
  return out;
}

/// Independent k-sparse pairs; supports may overlap.
inline std::vector<LatentPair> random_pairs(Index n, Index k, Index count, ValueDist dist, std::uint64_t seed) {
  std::vector<LatentPair> out;
  for (Index i = 0; i < count; ++i)
    out.push_back({sample_k_sparse(n, k, dist, derive_seed(seed, "pair-a", {std::uint64_t(i)})).values(),
                   sample_k_sparse(n, k, dist, derive_seed(seed, "pair-b", {std::uint64_t(i)})).values()});
  return out;
}

struct SignTest {
  Index wins = 0;
  Index losses = 0;
  Index ties = 0;
  double p_value = 1.0;  // one-sided: P(Binomial(wins + losses, 1/2) >= wins)
};

/// Paired sign test of a > b; ties are dropped.
inline SignTest sign_test(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), "sign test needs paired samples");
  SignTest t;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i])
      ++t.wins;
    else if (a[i] < b[i])
      ++t.losses;
    else
      ++t.ties;
  }
  const Index n = t.wins + t.losses;
  if (n == 0) return t;
  const double log_half_n = double(n) * std::log(0.5);
  double p = 0.0;
  for (Index j = t.wins; j <= n; ++j)
    p += std::exp(std::lgamma(double(n) + 1.0) - std::lgamma(double(j) + 1.0) - std::lgamma(double(n - j) + 1.0) +
                  log_half_n);
  t.p_value = std::min(1.0, p);
  return t;
}

struct AnalogyResult {
  double residual = 0.0;  // ||(map(z_ab) - map(z_a)) - (map(z_cb) - map(z_c))||
  double cosine = 0.0;    // between the two differences; NaN when degenerate
  bool degenerate = false;
};

/// Requires z_ab - z_a == z_cb - z_c (the shared attribute z_b).
inline AnalogyResult analogy_test(const LatentMap& map, const Vector& z_a, const Vector& z_ab, const Vector& z_c,
                                  const Vector& z_cb) {
  require(z_a.size() == z_ab.size() && z_c.size() == z_cb.size() && z_a.size() == z_c.size(),
          "analogy latents must have equal length");
  require(((z_ab - z_a) - (z_cb - z_c)).cwiseAbs().maxCoeff() <= 1e-12,
          "analogy quadruple must share the same attribute offset");
  const Vector d1 = map(z_ab) - map(z_a);
  const Vector d2 = map(z_cb) - map(z_c);
  AnalogyResult r;
  r.residual = (d1 - d2).norm();
  r.cosine = cosine(d1, d2);
  r.degenerate = std::isnan(r.cosine);
  return r;
}

/// cos(map(alpha z), alpha map(z)).
inline double homogeneity_cosine(const LatentMap& map, const Vector& z, double alpha) {
  return cosine(map(Vector(alpha * z)), Vector(alpha * map(z)));
}

struct LinearityReport {
  double r_squared = 0.0;
  double baseline_r_squared = 0.0;
  bool ridge_used = false;
  AdditivityStats additivity;  // on held-out latent pairs, supports unrestricted
};

/// h = f o g evaluated on n_test fresh latents; `baseline` is typically the
/// untrained model.
inline LinearityReport linearity_score(const MlpClassifier& model, const MlpClassifier& baseline,
                                       const ClusterDgpSpec& spec, Index n_test, std::uint64_t seed) {
  spec.validate();
  require(n_test >= 2, "n_test must be >= 2");
  require(model.input_dim() == spec.generator.output_dim && baseline.input_dim() == spec.generator.output_dim,
          "model input does not match the generator output");
  const ClusterSample test = sample_clusters(spec, n_test, derive_seed(seed, "linearity-test"));
  LinearityReport rep;
  const AffineFit fit = affine_r_squared(test.latents, features(model, test.data));
  const AffineFit base = affine_r_squared(test.latents, features(baseline, test.data));
  rep.r_squared = fit.r_squared;
  rep.baseline_r_squared = base.r_squared;
  rep.ridge_used = fit.ridge_used || base.ridge_used;

  const Generator g(spec.generator);
  const LatentMap h = [&](const Vector& z) -> Vector { return features(model, g.apply(z)).col(0); };
  std::vector<LatentPair> pairs;
  for (Index i = 0; i + 1 < n_test; i += 2) pairs.push_back({test.latents.col(i), test.latents.col(i + 1)});
  rep.additivity = additivity_test(h, pairs, PairPolicy::kAny);
  return rep;
}

}  // namespace splin

#endif  // SPLIN_IDENT_CHECK_HPP
