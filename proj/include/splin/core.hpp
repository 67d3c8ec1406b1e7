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

#ifndef SPLIN_CORE_HPP
#define SPLIN_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace splin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error hierarchy. Each class maps onto one failure class of the CLI.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch)
      : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

/// K-sparse latent vector with its support kept explicitly.
class LatentCode {
 public:
  LatentCode() = default;
  explicit LatentCode(Vector values) : values_(std::move(values)) { rebuild_support(); }

  const Vector& values() const noexcept { return values_; }
  const std::vector<Index>& support() const noexcept { return support_; }
  Index size() const noexcept { return values_.size(); }
  std::size_t nnz() const noexcept { return support_.size(); }

 private:
  void rebuild_support() {
    support_.clear();
    for (Index i = 0; i < values_.size(); ++i)
      if (values_[i] != 0.0) support_.push_back(i);
  }

  Vector values_;
  std::vector<Index> support_;
};

/// M x N matrix whose columns all have unit Euclidean norm.
class Dictionary {
 public:
  static constexpr double kNormTolerance = 1e-9;

  Dictionary() = default;

  // Columns must already be unit norm; use normalized() otherwise.
  explicit Dictionary(Matrix atoms) : atoms_(std::move(atoms)) {
    require(atoms_.rows() >= 1 && atoms_.cols() >= 1, "dictionary must be at least 1x1");
    require(atoms_.allFinite(), "dictionary entries must be finite");
    for (Index j = 0; j < atoms_.cols(); ++j)
      require(std::abs(atoms_.col(j).norm() - 1.0) < kNormTolerance,
              "dictionary column " + std::to_string(j) + " is not unit norm");
  }

  // Rescales every column to unit norm. Zero columns are rejected.
  static Dictionary normalized(Matrix atoms) {
    for (Index j = 0; j < atoms.cols(); ++j) {
      const double n = atoms.col(j).norm();
      require(n > 0.0 && std::isfinite(n), "cannot normalize zero or non-finite column " + std::to_string(j));
      atoms.col(j) /= n;
    }
    return Dictionary(std::move(atoms));
  }

  const Matrix& atoms() const noexcept { return atoms_; }
  Index m() const noexcept { return atoms_.rows(); }
  Index n() const noexcept { return atoms_.cols(); }
  auto col(Index j) const { return atoms_.col(j); }

  double max_norm_deviation() const {
    double worst = 0.0;
    for (Index j = 0; j < atoms_.cols(); ++j) worst = std::max(worst, std::abs(atoms_.col(j).norm() - 1.0));
    return worst;
  }

  friend bool operator==(const Dictionary& a, const Dictionary& b) {
    return a.atoms_.rows() == b.atoms_.rows() && a.atoms_.cols() == b.atoms_.cols() && a.atoms_ == b.atoms_;
  }

 private:
  Matrix atoms_;
};

struct Provenance {
  std::string dictionary_id;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// D observations of dimension M, stored one sample per column (M x D).
class ObservationBatch {
 public:
  ObservationBatch() = default;
  ObservationBatch(Matrix samples, Provenance provenance)
      : samples_(std::move(samples)), provenance_(std::move(provenance)) {
    require(samples_.cols() >= 1, "observation batch needs at least one sample");
    require(samples_.rows() >= 1, "observation dimension must be positive");
  }
  explicit ObservationBatch(Matrix samples) : ObservationBatch(std::move(samples), Provenance{}) {}

  const Matrix& samples() const noexcept { return samples_; }
  const Provenance& provenance() const noexcept { return provenance_; }
  Index dim() const noexcept { return samples_.rows(); }
  Index count() const noexcept { return samples_.cols(); }
  auto sample(Index i) const { return samples_.col(i); }

 private:
  Matrix samples_;
  Provenance provenance_;
};

// Stacks codes as columns of an N x D matrix.
inline Matrix stack_codes(const std::vector<LatentCode>& codes) {
  require(!codes.empty(), "no codes given");
  Matrix out(codes.front().size(), static_cast<Index>(codes.size()));
  for (std::size_t i = 0; i < codes.size(); ++i) {
    require(codes[i].size() == out.rows(), "codes have inconsistent lengths");
    out.col(static_cast<Index>(i)) = codes[i].values();
  }
  return out;
}

// Indices with |z_i| > rel * max|z|. Zero vector has empty support.
inline std::vector<Index> active_support(const Eigen::Ref<const Vector>& z, double rel = 1e-3) {
  std::vector<Index> s;
  const double peak = z.size() ? z.cwiseAbs().maxCoeff() : 0.0;
  if (peak == 0.0) return s;
  for (Index i = 0; i < z.size(); ++i)
    if (std::abs(z[i]) > rel * peak) s.push_back(i);
  return s;
}

}  // namespace splin

#endif  // SPLIN_CORE_HPP
