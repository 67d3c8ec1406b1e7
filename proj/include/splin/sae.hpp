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

#ifndef SPLIN_SAE_HPP
#define SPLIN_SAE_HPP

// Sparse autoencoder: code = ReLU(W y + b), reconstruction = Theta code,
// trained by plain SGD on the lasso objective with the amortized code
// substituted. Subgradients of |.| and ReLU at 0 are taken as 0.

#include <splin/core.hpp>
#include <splin/random.hpp>
#include <splin/solvers.hpp>
#include <splin/synthdgp.hpp>

#include <algorithm>
#include <numeric>

namespace splin {

// Only kVanilla is trainable; the others are named so configs can refer to
// them, and are rejected by train_sae.
enum class SaeVariant { kVanilla, kGated, kJumpRelu, kTopK };

inline std::string_view to_string(SaeVariant v) {
  switch (v) {
    case SaeVariant::kVanilla: return "vanilla";
    case SaeVariant::kGated: return "gated";
    case SaeVariant::kJumpRelu: return "jump-relu";
    case SaeVariant::kTopK: return "top-k";
  }
  return "?";
}

struct SaeParams {
  Matrix enc_weight;  // N x M
  Vector enc_bias;    // N
  Matrix decoder;     // M x N, unit columns after every projection

  Index m() const noexcept { return decoder.rows(); }
  Index n() const noexcept { return decoder.cols(); }
  Dictionary dictionary() const { return Dictionary(decoder); }

  void project_decoder() {
    for (Index j = 0; j < decoder.cols(); ++j) {
      const double norm = decoder.col(j).norm();
      if (norm > 0.0 && std::isfinite(norm)) decoder.col(j) /= norm;
    }
  }

  void validate() const {
    require(enc_weight.rows() == decoder.cols() && enc_weight.cols() == decoder.rows(),
            "encoder weight must be N x M for an M x N decoder");
    require(enc_bias.size() == decoder.cols(), "encoder bias must have length N");
  }
};

struct SaeTrainConfig {
  double lambda = 0.05;
  double learning_rate = 1e-2;
  int epochs = 50;
  Index batch_size = 64;
  bool tie_weights = false;
  std::uint64_t seed = 0;
  SaeVariant variant = SaeVariant::kVanilla;

  void validate() const {
    require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be nonnegative");
    // zero is accepted as the frozen-parameter case
    require(std::isfinite(learning_rate) && learning_rate >= 0.0, "learning_rate must be nonnegative");
    require(epochs >= 0, "epochs must be nonnegative");
    require(batch_size >= 1, "batch_size must be positive");
  }
};

/// Decoder: random orthonormal atoms when n <= m, normalized gaussian atoms
/// otherwise; encoder initialized to the
/// decoder transpose with zero bias.
inline SaeParams init_sae(Index m, Index n, std::uint64_t seed) {
  require(m >= 1 && n >= 1, "SAE dimensions must be positive");
  Rng rng = make_rng(derive_seed(seed, "sae-init"));
  SaeParams p;
  p.decoder = n <= m ? Matrix(random_orthogonal(m, rng).leftCols(n)) : gaussian_matrix(m, n, rng);
  p.project_decoder();
  p.enc_weight = p.decoder.transpose();
  p.enc_bias = Vector::Zero(n);
  return p;
}

inline Vector encode(const SaeParams& params, const Eigen::Ref<const Vector>& y) {
  params.validate();
  require(y.size() == params.m(), "input has wrong dimension");
  return (params.enc_weight * y + params.enc_bias).cwiseMax(0.0);
}

inline Matrix encode_batch(const SaeParams& params, const Eigen::Ref<const Matrix>& y) {
  params.validate();
  require(y.rows() == params.m(), "input has wrong dimension");
  return ((params.enc_weight * y).colwise() + params.enc_bias).cwiseMax(0.0);
}

/// Mean over samples (columns of y) of ||y - Theta code||^2 + lambda ||code||_1.
inline double sae_loss(const SaeParams& params, const Eigen::Ref<const Matrix>& y, double lambda) {
  require(y.cols() >= 1, "empty batch");
  const Matrix codes = encode_batch(params, y);
  return ((y - params.decoder * codes).squaredNorm() + lambda * codes.sum()) / double(y.cols());
}

struct SaeGradients {
  Matrix enc_weight;
  Vector enc_bias;
  Matrix decoder;
};

/// Analytic gradients of sae_loss, treating W and Theta as independent.
inline SaeGradients gradients(const SaeParams& params, const Eigen::Ref<const Matrix>& y, double lambda) {
  require(y.cols() >= 1, "empty batch");
  params.validate();
  require(y.rows() == params.m(), "input has wrong dimension");
  const double inv = 1.0 / double(y.cols());
  const Matrix pre = (params.enc_weight * y).colwise() + params.enc_bias;
  const Matrix codes = pre.cwiseMax(0.0);
  const Matrix resid = params.decoder * codes - y;  // M x D

  SaeGradients g;
  g.decoder = (2.0 * inv) * resid * codes.transpose();
  Matrix d_codes = 2.0 * (params.decoder.transpose() * resid);
  d_codes.array() += lambda * (codes.array() > 0.0).cast<double>();
  const Matrix d_pre = (d_codes.array() * (pre.array() > 0.0).cast<double>()).matrix();
  g.enc_weight = inv * d_pre * y.transpose();
  g.enc_bias = inv * d_pre.rowwise().sum();
  return g;
}

struct SaeTrainResult {
  SaeParams params;
  std::vector<double> loss_trace;  // sample-weighted mean minibatch loss per epoch
};

/// Minibatch SGD; batches are reshuffled each epoch from the config seed.
inline SaeTrainResult train_sae(const ObservationBatch& batch, Index n_atoms, const SaeTrainConfig& config,
                                const SaeParams* init = nullptr) {
  config.validate();
  require(config.variant == SaeVariant::kVanilla,
          "SAE variant '" + std::string(to_string(config.variant)) + "' is not implemented");
  require(n_atoms >= 1, "n_atoms must be positive");
  const Matrix& y = batch.samples();
  require(y.allFinite(), "observations contain non-finite values");

  SaeTrainResult res;
  res.params = init ? *init : init_sae(y.rows(), n_atoms, config.seed);
  res.params.validate();
  require(res.params.m() == y.rows() && res.params.n() == n_atoms, "initial parameters have the wrong shape");
  if (config.tie_weights) res.params.enc_weight = res.params.decoder.transpose();

  const Index d = y.cols();
  const Index bs = std::min(config.batch_size, d);
  std::vector<Index> order(static_cast<std::size_t>(d));
  Matrix yb;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng = make_rng(derive_seed(config.seed, "sae-epoch", {std::uint64_t(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0.0;
    for (Index start = 0; start < d; start += bs) {
      const Index count = std::min(bs, d - start);
      yb.resize(y.rows(), count);
      for (Index c = 0; c < count; ++c) yb.col(c) = y.col(order[static_cast<std::size_t>(start + c)]);
      const double loss = sae_loss(res.params, yb, config.lambda);
      if (!std::isfinite(loss)) throw DivergenceError("SAE loss is not finite", epoch);
      weighted += loss * double(count);
      if (config.learning_rate == 0.0) continue;
      const SaeGradients g = gradients(res.params, yb, config.lambda);
      if (config.tie_weights) {
        res.params.decoder -= config.learning_rate * (g.decoder + g.enc_weight.transpose());
      } else {
        res.params.decoder -= config.learning_rate * g.decoder;
        res.params.enc_weight -= config.learning_rate * g.enc_weight;
      }
      res.params.enc_bias -= config.learning_rate * g.enc_bias;
      res.params.project_decoder();
      if (config.tie_weights) res.params.enc_weight = res.params.decoder.transpose();
    }
    const double epoch_loss = weighted / double(d);
    if (!std::isfinite(epoch_loss) || !res.params.decoder.allFinite() || !res.params.enc_weight.allFinite())
      throw DivergenceError("SAE parameters diverged", epoch);
    res.loss_trace.push_back(epoch_loss);
  }
  return res;
}

struct AmortizationGap {
  std::vector<double> per_sample;
  double mean = 0.0;
};

/// gap_i = F(encode(y_i)) - F(ista(y_i)) with F the lasso objective at the
/// SAE decoder (or `dict_for_ista` when given). ISTA is warm-started at the
/// amortized code and uses backtracking, so each gap is nonnegative up to
/// rounding.
inline AmortizationGap amortization_gap(const SaeParams& params, const Eigen::Ref<const Matrix>& y, double lambda,
                                        const SolverConfig& ista_config = SolverConfig{0.0, 20000, 1e-12,
                                                                                       StepRule::kBacktracking},
                                        const Dictionary* dict_for_ista = nullptr) {
  require(y.cols() >= 1, "empty batch");
  const Dictionary dict = dict_for_ista ? *dict_for_ista : params.dictionary();
  require(dict.m() == params.m() && dict.n() == params.n(), "ista dictionary does not match the SAE shape");
  SolverConfig cfg = ista_config;
  cfg.lambda = lambda;
  const double lip = lipschitz_constant(dict);
  const Matrix codes = encode_batch(params, y);
  AmortizationGap gap;
  for (Index i = 0; i < y.cols(); ++i) {
    const Vector yi = y.col(i);
    const Vector amortized = codes.col(i);
    const SparseSolution opt = ista(dict, yi, cfg, amortized, lip);
    gap.per_sample.push_back(objective(dict, yi, amortized, lambda) - objective(dict, yi, opt.code, lambda));
  }
  double total = 0.0;
  for (double g : gap.per_sample) total += g;
  gap.mean = total / double(gap.per_sample.size());
  return gap;
}

}  // namespace splin

#endif  // SPLIN_SAE_HPP
