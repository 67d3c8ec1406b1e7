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

#ifndef SPLIN_ASSIGNMENT_HPP
#define SPLIN_ASSIGNMENT_HPP

#include <splin/core.hpp>

#include <limits>
#include <vector>

namespace splin {

/// Maximum-weight bipartite matching (Hungarian method with potentials,
/// O(r^2 c)). Returns, for every row of `score`, its assigned column, or -1
/// when there are more rows than columns and the row is left unmatched.
inline std::vector<Index> max_weight_assignment(const Eigen::Ref<const Matrix>& score) {
  const Index rows = score.rows();
  const Index cols = score.cols();
  std::vector<Index> result(static_cast<std::size_t>(rows), -1);
  if (rows == 0 || cols == 0) return result;
  require(score.allFinite(), "assignment scores must be finite");

  // Solve on the orientation with n <= m, minimizing negated scores.
  const bool transposed = rows > cols;
  const Matrix cost = transposed ? Matrix(-score.transpose()) : Matrix(-score);
  const Index n = cost.rows();
  const Index m = cost.cols();
  const double inf = std::numeric_limits<double>::infinity();

  // 1-based arrays; p[j] is the row matched to column j (0 = none).
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(m + 1), 0.0);
  std::vector<Index> p(static_cast<std::size_t>(m + 1), 0), way(static_cast<std::size_t>(m + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  for (Index j = 1; j <= m; ++j) {
    const Index i = p[static_cast<std::size_t>(j)];
    if (i == 0) continue;
    if (transposed)
      result[static_cast<std::size_t>(j - 1)] = i - 1;
    else
      result[static_cast<std::size_t>(i - 1)] = j - 1;
  }
  return result;
}

}  // namespace splin

#endif  // SPLIN_ASSIGNMENT_HPP
