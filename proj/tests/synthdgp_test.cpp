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

#include <splin/synthdgp.hpp>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace splin {
namespace {

using testing::tri_dictionary;
using testing::vec;

TEST(SampleKSparse, ZeroSparsityGivesZeroVector) {
  for (auto dist : {ValueDist::kUnitGaussian, ValueDist::kUniformSigned, ValueDist::kBinary}) {
    const LatentCode z = sample_k_sparse(8, 0, dist, 11);
    EXPECT_EQ(z.size(), 8);
    EXPECT_TRUE(z.support().empty());
    EXPECT_EQ(z.values().squaredNorm(), 0.0);
  }
}

TEST(SampleKSparse, FullBinarySupportIsAllOnes) {
  const LatentCode z = sample_k_sparse(4, 4, ValueDist::kBinary, 5);
  EXPECT_TRUE(z.values().isApprox(Vector::Ones(4)));
  EXPECT_EQ(z.support(), (std::vector<Index>{0, 1, 2, 3}));
}

TEST(SampleKSparse, RejectsKAboveN) {
  EXPECT_THROW(sample_k_sparse(3, 4, ValueDist::kBinary, 0), InvalidArgument);
  EXPECT_THROW(sample_k_sparse(3, -1, ValueDist::kBinary, 0), InvalidArgument);
}

// Monte-Carlo count oracle: each index should be active with probability k/n.
TEST(SampleKSparse, SupportIsUniform) {
  constexpr int kDraws = 10000;
  std::vector<int> hits(16, 0);
  for (int d = 0; d < kDraws; ++d) {
    const LatentCode z = sample_k_sparse(16, 3, ValueDist::kUniformSigned, derive_seed(42, "freq", {std::uint64_t(d)}));
    ASSERT_EQ(z.nnz(), 3u);
    for (Index i : z.support()) ++hits[static_cast<std::size_t>(i)];
  }
  for (int h : hits) EXPECT_NEAR(double(h) / kDraws, 3.0 / 16.0, 0.01);
}

TEST(SampleKSparse, UniformSignedStaysInBand) {
  for (int d = 0; d < 200; ++d) {
    const LatentCode z = sample_k_sparse(10, 5, ValueDist::kUniformSigned, std::uint64_t(d));
    for (Index i : z.support()) {
      EXPECT_GE(std::abs(z.values()[i]), 0.5);
      EXPECT_LE(std::abs(z.values()[i]), 1.5);
    }
  }
}

TEST(SampleKSparse, SeedDeterminism) {
  const LatentCode a = sample_k_sparse(50, 7, ValueDist::kUnitGaussian, 99);
  const LatentCode b = sample_k_sparse(50, 7, ValueDist::kUnitGaussian, 99);
  EXPECT_EQ(a.values(), b.values());
  EXPECT_EQ(a.support(), b.support());
}

TEST(SampleDictionary, Identity) {
  const Dictionary d = sample_dictionary(3, 3, DictKind::kIdentity, 0);
  EXPECT_EQ(d.atoms(), Matrix::Identity(3, 3));
  EXPECT_THROW(sample_dictionary(2, 3, DictKind::kIdentity, 0), InvalidArgument);
}

TEST(SampleDictionary, GaussianColumnsAreUnitNorm) {
  const Dictionary d = sample_dictionary(2, 3, DictKind::kGaussianNormalized, 7);
  for (Index j = 0; j < d.n(); ++j) EXPECT_NEAR(d.col(j).norm(), 1.0, 1e-12);
}

TEST(SampleDictionary, OrthonormalSubset) {
  const Dictionary d = sample_dictionary(6, 4, DictKind::kOrthonormalSubset, 3);
  EXPECT_TRUE((d.atoms().transpose() * d.atoms()).isApprox(Matrix::Identity(4, 4), 1e-12));
  EXPECT_THROW(sample_dictionary(3, 4, DictKind::kOrthonormalSubset, 3), InvalidArgument);
}

// Band calibrated from the max off-diagonal |Gram| entry over 100 seeds
// (observed range 0.45 .. 0.60 for 64 x 256).
TEST(SampleDictionary, CoherenceBand) {
  const double c = mutual_coherence(sample_dictionary(64, 256, DictKind::kGaussianNormalized, 1));
  EXPECT_GE(c, 0.2);
  EXPECT_LE(c, 0.6);
}

TEST(SampleDictionary, ColumnNormInvariantAcrossKinds) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    EXPECT_LT(sample_dictionary(5, 17, DictKind::kGaussianNormalized, s).max_norm_deviation(), 1e-9);
    EXPECT_LT(sample_dictionary(17, 5, DictKind::kOrthonormalSubset, s).max_norm_deviation(), 1e-9);
  }
}

TEST(Dictionary, RejectsNonUnitColumns) {
  EXPECT_THROW(Dictionary(Matrix::Constant(2, 2, 1.0)), InvalidArgument);
  EXPECT_THROW(Dictionary::normalized(Matrix::Zero(2, 2)), InvalidArgument);
}

TEST(Observe, IdentityProjection) {
  const Dictionary d = sample_dictionary(4, 4, DictKind::kIdentity, 0);
  const auto batch = observe(d, {LatentCode(vec({1, 0, 2, 0}))}, 0.0, 0);
  EXPECT_EQ(Vector(batch.sample(0)), vec({1, 0, 2, 0}));
}

TEST(Observe, ZeroCodeGivesZero) {
  const Dictionary d = sample_dictionary(5, 9, DictKind::kGaussianNormalized, 4);
  const auto batch = observe(d, {LatentCode(Vector::Zero(9))}, 0.0, 0);
  EXPECT_EQ(batch.sample(0).squaredNorm(), 0.0);
}

TEST(Observe, HandComputedProduct) {
  const auto batch = observe(tri_dictionary(), {LatentCode(vec({0, 0, 1}))}, 0.0, 0);
  EXPECT_NEAR(batch.sample(0)[0], 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(batch.sample(0)[1], 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Observe, NoiselessEqualsMatrixProduct) {
  const Dictionary d = sample_dictionary(8, 20, DictKind::kGaussianNormalized, 12);
  const auto codes = sample_codes(20, 3, 50, ValueDist::kUniformSigned, 1);
  const auto batch = observe(d, codes, 0.0, 0);
  EXPECT_TRUE(batch.samples().isApprox(d.atoms() * stack_codes(codes), 1e-15));
  EXPECT_EQ(batch.provenance().noise_sigma, 0.0);
}

TEST(Observe, NoiseHasRequestedScale) {
  const Dictionary d = sample_dictionary(10, 10, DictKind::kIdentity, 0);
  const auto codes = sample_codes(10, 0, 2000, ValueDist::kBinary, 1);
  const auto batch = observe(d, codes, 0.5, 77);
  const double var = batch.samples().squaredNorm() / double(batch.samples().size());
  EXPECT_NEAR(std::sqrt(var), 0.5, 0.01);
  const auto again = observe(d, codes, 0.5, 77);
  EXPECT_EQ(batch.samples(), again.samples());
}

TEST(Observe, LengthMismatch) {
  const Dictionary d = sample_dictionary(3, 3, DictKind::kIdentity, 0);
  EXPECT_THROW(observe(d, {LatentCode(Vector::Zero(4))}, 0.0, 0), InvalidArgument);
  EXPECT_THROW(observe(d, {LatentCode(Vector::Zero(3))}, -1.0, 0), InvalidArgument);
}

TEST(Generator, LinearIdentityIsPassThrough) {
  GeneratorSpec spec{GeneratorKind::kLinear, 3, 3, 0, Matrix::Identity(3, 3)};
  const auto codes = sample_codes(3, 2, 5, ValueDist::kUnitGaussian, 2);
  EXPECT_EQ(generate_nonlinear(spec, codes), stack_codes(codes));
}

TEST(Generator, CubicFixesOrigin) {
  GeneratorSpec spec{GeneratorKind::kCubicRotation, 6, 6, 9, std::nullopt};
  EXPECT_EQ(generate_nonlinear(spec, {LatentCode(Vector::Zero(6))}).squaredNorm(), 0.0);
}

TEST(Generator, DimensionMismatch) {
  GeneratorSpec spec{GeneratorKind::kCubicRotation, 4, 4, 9, std::nullopt};
  EXPECT_THROW(generate_nonlinear(spec, {LatentCode(Vector::Zero(5))}), InvalidArgument);
  EXPECT_THROW(Generator(GeneratorSpec{GeneratorKind::kTwoLayerInvertible, 3, 4, 0, std::nullopt}), InvalidArgument);
}

// Independent inversion oracle: damped Newton on the full map with a
// central-difference Jacobian. Shares nothing with Generator::invert.
Vector newton_invert(const Generator& g, const Vector& x) {
  const Index d = x.size();
  Vector z = Vector::Zero(d);
  for (int it = 0; it < 200; ++it) {
    const Vector r = g.apply(z) - x;
    if (r.cwiseAbs().maxCoeff() < 1e-13) break;
    Matrix jac(d, d);
    for (Index j = 0; j < d; ++j) {
      Vector zp = z, zm = z;
      zp[j] += 1e-6;
      zm[j] -= 1e-6;
      jac.col(j) = (g.apply(zp) - g.apply(zm)) / 2e-6;
    }
    const Vector step = jac.partialPivLu().solve(r);
    double alpha = 1.0;
    while (alpha > 1e-4 && (g.apply(z - alpha * step) - x).norm() > r.norm()) alpha *= 0.5;
    z -= alpha * step;
  }
  return z;
}

TEST(Generator, TwoLayerRoundTripMatchesNewtonOracle) {
  GeneratorSpec spec{GeneratorKind::kTwoLayerInvertible, 5, 5, 21, std::nullopt};
  const Generator g(spec);
  const auto codes = sample_codes(5, 3, 1000, ValueDist::kUnitGaussian, 8);
  double worst = 0.0;
  for (const auto& c : codes) {
    const Vector x = g.apply(c.values());
    worst = std::max(worst, (newton_invert(g, x) - c.values()).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-6);
  EXPECT_LT(g.round_trip_error(stack_codes(codes)), 1e-6);
}

TEST(Generator, DistinctInputsMapToDistinctOutputs) {
  for (auto kind : {GeneratorKind::kCubicRotation, GeneratorKind::kTwoLayerInvertible}) {
    const Generator g(GeneratorSpec{kind, 4, 4, 3, std::nullopt});
    const Matrix z = stack_codes(sample_codes(4, 4, 200, ValueDist::kUnitGaussian, 5));
    const Matrix x = g.apply_batch(z);
    for (Index i = 0; i < x.cols(); ++i)
      for (Index j = 0; j < i; ++j) EXPECT_GT((x.col(i) - x.col(j)).norm(), 0.0);
    EXPECT_LT(g.round_trip_error(z), 1e-6);
  }
}

TEST(Generator, SeedDeterminism) {
  GeneratorSpec spec{GeneratorKind::kTwoLayerInvertible, 4, 4, 31, std::nullopt};
  const auto codes = sample_codes(4, 2, 10, ValueDist::kUnitGaussian, 3);
  EXPECT_EQ(generate_nonlinear(spec, codes), generate_nonlinear(spec, codes));
}

}  // namespace
}  // namespace splin
