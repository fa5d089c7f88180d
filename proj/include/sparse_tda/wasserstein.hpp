#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sparse_tda/diagram.hpp"

namespace sparse_tda {

/// Minimum-cost perfect assignment on a square cost matrix (row-major,
/// size n*n) via the shortest augmenting path Hungarian method with
/// potentials. Returns the column assigned to each row.
inline std::vector<std::size_t> hungarian_assignment(const std::vector<double>& cost, std::size_t n) {
  require(cost.size() == n * n, "cost matrix must be square");
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based internally; index 0 is the virtual root column.
  std::vector<double> row_pot(n + 1, 0.0), col_pot(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - row_pot[i0] - col_pot[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          row_pot[match[j]] += delta;
          col_pot[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t j = 1; j <= n; ++j)
    if (match[j] != 0) assignment[match[j] - 1] = j - 1;
  return assignment;
}

inline double linf_distance(const DiagramPoint& a, const DiagramPoint& b) noexcept {
  return std::max(std::abs(a.birth - b.birth), std::abs(a.death - b.death));
}

inline double diagonal_distance(const DiagramPoint& p) noexcept { return 0.5 * p.persistence(); }

/// Exact 1-Wasserstein distance between the finite parts of two diagrams
/// with the L-infinity ground metric. Each point may instead be sent to
/// the diagonal at cost persistence/2. Cubic in the total point count;
/// meant for test-sized diagrams.
inline double wasserstein1(const PersistenceDiagram& a, const PersistenceDiagram& b) {
  const auto& pa = a.points();
  const auto& pb = b.points();
  const std::size_t m = pa.size(), k = pb.size(), n = m + k;
  if (n == 0) return 0.0;

  // [ a->b     | a->diag ]
  // [ diag->b  |   0     ]
  std::vector<double> cost(n * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) cost[i * n + j] = linf_distance(pa[i], pb[j]);
    for (std::size_t j = k; j < n; ++j) cost[i * n + j] = diagonal_distance(pa[i]);
  }
  for (std::size_t i = m; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) cost[i * n + j] = diagonal_distance(pb[j]);

  const auto assignment = hungarian_assignment(cost, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost[i * n + assignment[i]];
  return total;
}

}  // namespace sparse_tda
