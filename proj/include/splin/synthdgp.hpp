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

#ifndef SPLIN_SYNTHDGP_HPP
#define SPLIN_SYNTHDGP_HPP

// Synthetic world model: sparse latents z, random dictionaries, linear
// observations y = Phi z + noise, and nonlinear generators x = g(z).

#include <splin/core.hpp>
#include <splin/random.hpp>

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>

namespace splin {

enum class ValueDist { kUnitGaussian, kUniformSigned, kBinary };

enum class DictKind { kGaussianNormalized, kOrthonormalSubset, kIdentity };

inline std::string_view to_string(ValueDist d) {
  switch (d) {
    case ValueDist::kUnitGaussian: return "unit-gaussian-magnitude";
    case ValueDist::kUniformSigned: return "uniform-signed";
    case ValueDist::kBinary: return "binary";
  }
  return "?";
}

inline std::string_view to_string(DictKind k) {
  switch (k) {
    case DictKind::kGaussianNormalized: return "gaussian-normalized";
    case DictKind::kOrthonormalSubset: return "random-orthonormal-subset";
    case DictKind::kIdentity: return "identity";
  }
  return "?";
}

/// Draws a code with exactly k nonzeros on a uniformly random support.
/// kUnitGaussian draws |N(0, 1)| (nonnegative); kUniformSigned draws
/// magnitudes from [0.5, 1.5] with a fair random sign; kBinary sets ones.
inline LatentCode sample_k_sparse(Index n, Index k, ValueDist dist, std::uint64_t seed) {
  require(n >= 1, "n must be positive");
  require(k >= 0 && k <= n, "k must lie in [0, n]");
  Rng rng = make_rng(seed);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  // partial Fisher-Yates: the first k slots form a uniform k-subset
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
  }
  std::sort(perm.begin(), perm.begin() + k);
  Vector v = Vector::Zero(n);
  for (Index i = 0; i < k; ++i) {
    double x = 1.0;
    switch (dist) {
      case ValueDist::kUnitGaussian:
        do x = std::abs(standard_normal(rng));
        while (x == 0.0);
        break;
      case ValueDist::kUniformSigned:
        x = uniform(rng, 0.5, 1.5);
        if (std::bernoulli_distribution(0.5)(rng)) x = -x;
        break;
      case ValueDist::kBinary:
        break;
    }
    v[perm[static_cast<std::size_t>(i)]] = x;
  }
  return LatentCode(std::move(v));
}

/// D codes, code i drawn from the sub-seed (seed, i).
inline std::vector<LatentCode> sample_codes(Index n, Index k, Index count, ValueDist dist, std::uint64_t seed) {
  std::vector<LatentCode> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i)
    out.push_back(sample_k_sparse(n, k, dist, derive_seed(seed, "code", {static_cast<std::uint64_t>(i)})));
  return out;
}

inline Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  Matrix a(rows, cols);
  // column-major fill order is part of the seed contract
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) a(i, j) = standard_normal(rng);
  return a;
}

// Haar-distributed orthogonal matrix (QR of a gaussian matrix with sign fix).
inline Matrix random_orthogonal(Index d, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(d, d, rng));
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

inline Dictionary sample_dictionary(Index m, Index n, DictKind kind, std::uint64_t seed) {
  require(m >= 1 && n >= 1, "dictionary dimensions must be positive");
  Rng rng = make_rng(seed);
  switch (kind) {
    case DictKind::kIdentity:
      require(m == n, "identity dictionary requires m == n");
      return Dictionary(Matrix::Identity(m, n));
    case DictKind::kOrthonormalSubset: {
      require(n <= m, "orthonormal subset requires n <= m");
      Matrix q = random_orthogonal(m, rng);
      return Dictionary::normalized(q.leftCols(n));
    }
    case DictKind::kGaussianNormalized:
      break;
  }
  return Dictionary::normalized(gaussian_matrix(m, n, rng));
}

/// y_i = Phi z_i + eps_i with eps_i ~ N(0, sigma^2 I). Noise for sample i
/// comes from sub-seed (seed, i).
inline ObservationBatch observe(const Dictionary& dict, const std::vector<LatentCode>& codes, double noise_sigma,
                                std::uint64_t seed, std::string dictionary_id = {}) {
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "noise_sigma must be nonnegative");
  require(!codes.empty(), "observe needs at least one code");
  Matrix y(dict.m(), static_cast<Index>(codes.size()));
  for (std::size_t i = 0; i < codes.size(); ++i) {
    require(codes[i].size() == dict.n(), "code length does not match dictionary");
    auto col = y.col(static_cast<Index>(i));
    col.noalias() = dict.atoms() * codes[i].values();
    if (noise_sigma > 0.0) {
      Rng rng = make_rng(derive_seed(seed, "noise", {i}));
      for (Index r = 0; r < y.rows(); ++r) col[r] += noise_sigma * standard_normal(rng);
    }
  }
  return ObservationBatch(std::move(y), Provenance{std::move(dictionary_id), noise_sigma, seed});
}

// ---------------------------------------------------------------------------
// Nonlinear generators

enum class GeneratorKind { kLinear, kCubicRotation, kTwoLayerInvertible };

inline std::string_view to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::kLinear: return "linear";
    case GeneratorKind::kCubicRotation: return "pointwise-cubic-then-rotation";
    case GeneratorKind::kTwoLayerInvertible: return "two-layer-invertible";
  }
  return "?";
}

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::kLinear;
  Index input_dim = 1;
  Index output_dim = 1;
  std::uint64_t seed = 0;
  // Linear kind only: use this matrix instead of a random one.
  std::optional<Matrix> matrix;
};

/// Materialized generator. The two-layer kind computes
///   x = s(B s(A z + a) + b),   s(u) = u + 2 tanh(2u)
/// with A, B random orthogonal; s is strictly increasing with slope in [1, 5].
class Generator {
 public:
  explicit Generator(const GeneratorSpec& spec) : spec_(spec) {
    require(spec.input_dim >= 1 && spec.output_dim >= 1, "generator dimensions must be positive");
    Rng rng = make_rng(derive_seed(spec.seed, "generator"));
    switch (spec.kind) {
      case GeneratorKind::kLinear:
        if (spec.matrix) {
          require(spec.matrix->rows() == spec.output_dim && spec.matrix->cols() == spec.input_dim,
                  "linear generator matrix has wrong shape");
          first_ = *spec.matrix;
        } else {
          first_ = gaussian_matrix(spec.output_dim, spec.input_dim, rng) / std::sqrt(double(spec.input_dim));
        }
        break;
      case GeneratorKind::kCubicRotation:
        require(spec.input_dim == spec.output_dim, "cubic-rotation generator must be square");
        first_ = random_orthogonal(spec.input_dim, rng);
        break;
      case GeneratorKind::kTwoLayerInvertible:
        require(spec.input_dim == spec.output_dim, "two-layer invertible generator must be square");
        first_ = random_orthogonal(spec.input_dim, rng);
        second_ = random_orthogonal(spec.input_dim, rng);
        bias1_ = 0.3 * gaussian_matrix(spec.input_dim, 1, rng);
        bias2_ = 0.3 * gaussian_matrix(spec.input_dim, 1, rng);
        break;
    }
  }

  const GeneratorSpec& spec() const noexcept { return spec_; }
  bool invertible() const noexcept {
    return spec_.kind != GeneratorKind::kLinear || spec_.input_dim == spec_.output_dim;
  }

  static double squash(double u) { return u + 2.0 * std::tanh(2.0 * u); }

  // Inverse of squash by safeguarded Newton; squash' >= 1 so this converges fast.
  static double unsquash(double x) {
    double u = x / 5.0;
    for (int it = 0; it < 100; ++it) {
      const double t = std::tanh(2.0 * u);
      const double f = u + 2.0 * t - x;
      const double df = 1.0 + 4.0 * (1.0 - t * t);
      const double step = f / df;
      u -= step;
      if (std::abs(step) <= 1e-15 * (1.0 + std::abs(u))) break;
    }
    return u;
  }

  Vector apply(const Eigen::Ref<const Vector>& z) const {
    require(z.size() == spec_.input_dim, "generator input has wrong dimension");
    switch (spec_.kind) {
      case GeneratorKind::kLinear:
        return first_ * z;
      case GeneratorKind::kCubicRotation:
        return first_ * z.array().cube().matrix();
      case GeneratorKind::kTwoLayerInvertible: {
        Vector h = (first_ * z + bias1_).unaryExpr(&squash);
        return (second_ * h + bias2_).unaryExpr(&squash);
      }
    }
    return {};
  }

  Matrix apply_batch(const Eigen::Ref<const Matrix>& z) const {
    Matrix x(spec_.output_dim, z.cols());
    for (Index i = 0; i < z.cols(); ++i) x.col(i) = apply(z.col(i));
    return x;
  }

  Vector invert(const Eigen::Ref<const Vector>& x) const {
    require(x.size() == spec_.output_dim, "generator output has wrong dimension");
    switch (spec_.kind) {
      case GeneratorKind::kLinear:
        require(invertible(), "linear generator is not square");
        return first_.partialPivLu().solve(x);
      case GeneratorKind::kCubicRotation:
        return (first_.transpose() * x).unaryExpr([](double v) { return std::cbrt(v); });
      case GeneratorKind::kTwoLayerInvertible: {
        Vector h = second_.transpose() * (x.unaryExpr(&unsquash) - bias2_);
        return first_.transpose() * (h.unaryExpr(&unsquash) - bias1_);
      }
    }
    return {};
  }

  // Max round-trip error over the columns of z; the injectivity check.
  double round_trip_error(const Eigen::Ref<const Matrix>& z) const {
    double worst = 0.0;
    for (Index i = 0; i < z.cols(); ++i)
      worst = std::max(worst, (invert(apply(z.col(i))) - z.col(i)).cwiseAbs().maxCoeff());
    return worst;
  }

 private:
  GeneratorSpec spec_;
  Matrix first_;
  Matrix second_;
  Vector bias1_;
  Vector bias2_;
};

/// Maps codes through g; one output column per code.
inline Matrix generate_nonlinear(const GeneratorSpec& spec, const std::vector<LatentCode>& codes) {
  const Generator g(spec);
  Matrix x(spec.output_dim, static_cast<Index>(codes.size()));
  for (std::size_t i = 0; i < codes.size(); ++i) {
    require(codes[i].size() == spec.input_dim, "code length does not match generator input");
    x.col(static_cast<Index>(i)) = g.apply(codes[i].values());
  }
  return x;
}

inline double mutual_coherence(const Dictionary& dict) {
  if (dict.n() < 2) return 0.0;
  const Matrix g = dict.atoms().transpose() * dict.atoms();
  double c = 0.0;
  for (Index j = 0; j < g.cols(); ++j)
    for (Index i = 0; i < j; ++i) c = std::max(c, std::abs(g(i, j)));
  return c;
}

}  // namespace splin

#endif  // SPLIN_SYNTHDGP_HPP
