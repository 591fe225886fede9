#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "ecstream/error.hpp"

namespace ecstream {

/// Minimum-cost perfect matching on a square cost matrix (row-major, n x n) by the
/// Hungarian method with potentials, O(n^3). Returns col[row].
inline std::vector<int> hungarian(const std::vector<double>& cost, std::size_t n) {
  if (cost.size() != n * n) throw ConfigError("hungarian: cost matrix is not square");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is a virtual start.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 == 0) throw Error(ErrorCategory::numeric, "hungarian: non-finite costs");
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col(n, -1);
  for (std::size_t j = 1; j <= n; ++j)
    if (p[j] != 0) col[p[j] - 1] = static_cast<int>(j - 1);
  return col;
}

}  // namespace ecstream
