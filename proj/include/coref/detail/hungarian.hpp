#pragma once

#include <limits>
#include <vector>

namespace coref::detail {

// Maximum-weight one-to-one assignment (Kuhn-Munkres with potentials).
// `weight` is an n x m matrix with non-negative entries; rows and columns in
// excess of the smaller dimension stay unassigned (equivalent to matching
// against zero-weight padding). Returns the total weight of an optimal
// assignment; if `row_to_col` is given it receives, per row, the assigned
// column or -1.
inline double max_assignment(const std::vector<std::vector<double>>& weight,
                             std::vector<int>* row_to_col = nullptr) {
  const int n = static_cast<int>(weight.size());
  const int m = n == 0 ? 0 : static_cast<int>(weight[0].size());
  const int dim = std::max(n, m);
  if (dim == 0) {
    if (row_to_col) row_to_col->clear();
    return 0.0;
  }

  const double inf = std::numeric_limits<double>::infinity();
  // cost[i][j] = -weight for minimization; padding cells cost 0.
  auto cost = [&](int i, int j) -> double {
    if (i < n && j < m) return -weight[i][j];
    return 0.0;
  };

  std::vector<double> u(dim + 1, 0.0), v(dim + 1, 0.0);
  std::vector<int> match(dim + 1, 0), way(dim + 1, 0);  // 1-based, match[j] = row
  for (int i = 1; i <= dim; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(dim + 1, inf);
    std::vector<bool> used(dim + 1, false);
    do {
      used[j0] = true;
      int i0 = match[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= dim; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= dim; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  if (row_to_col) row_to_col->assign(n, -1);
  double total = 0.0;
  for (int j = 1; j <= dim; ++j) {
    int i = match[j];
    if (i >= 1 && i <= n && j <= m) {
      total += weight[i - 1][j - 1];
      if (row_to_col) (*row_to_col)[i - 1] = j - 1;
    }
  }
  return total;
}

}  // namespace coref::detail
