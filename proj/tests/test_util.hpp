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

#ifndef SPLIN_TESTS_TEST_UTIL_HPP
#define SPLIN_TESTS_TEST_UTIL_HPP

#include <splin/core.hpp>
#include <splin/synthdgp.hpp>

#include <cmath>

namespace splin::testing {

// Columns e1, e2 and (e1 + e2) / sqrt(2).
inline Dictionary tri_dictionary() {
  Matrix a(2, 3);
  const double r = 1.0 / std::sqrt(2.0);
  a << 1.0, 0.0, r,
       0.0, 1.0, r;
  return Dictionary(a);
}

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

struct Instance {
  Dictionary dict;
  LatentCode truth;
  Vector y;
};

// Noiseless y = Phi z* with a gaussian dictionary and uniform-signed values.
inline Instance noiseless_instance(Index m, Index n, Index k, std::uint64_t seed) {
  Instance inst{sample_dictionary(m, n, DictKind::kGaussianNormalized, derive_seed(seed, "dict")),
                sample_k_sparse(n, k, ValueDist::kUniformSigned, derive_seed(seed, "code")), Vector()};
  inst.y = inst.dict.atoms() * inst.truth.values();
  return inst;
}

}  // namespace splin::testing

#endif  // SPLIN_TESTS_TEST_UTIL_HPP
