#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <type_traits>
#include <vector>

#include "finer/core/error.hpp"

namespace finer::eval {

template <typename T>
struct AssignmentResult {
  // Column matched to each row, or -1 when the row was matched to padding.
  std::vector<std::ptrdiff_t> row_to_col;
  T total{};
};

namespace detail {

template <typename T>
bool is_tight(T reduced, T tolerance) {
  if constexpr (std::is_integral_v<T>) {
    return reduced == 0;
  } else {
    return std::abs(reduced) <= tolerance;
  }
}

// Alternating-path search used to move a matching inside the equality
// subgraph without leaving it.
template <typename Tight>
bool reroute(std::size_t row, std::size_t target_col, std::size_t banned_col, std::size_t fixed_rows,
             const Tight& tight, std::vector<std::size_t>& row_col, std::vector<std::size_t>& col_row,
             std::vector<char>& seen) {
  const std::size_t n = row_col.size();
  for (std::size_t c = 0; c < n; ++c) {
    if (c == banned_col || seen[c] || !tight(row, c)) continue;
    seen[c] = 1;
    if (c == target_col) {
      row_col[row] = c;
      col_row[c] = row;
      return true;
    }
    const std::size_t next = col_row[c];
    if (next < fixed_rows) continue;
    if (reroute(next, target_col, banned_col, fixed_rows, tight, row_col, col_row, seen)) {
      row_col[row] = c;
      col_row[c] = row;
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Maximum-weight injective matching between the rows and columns of a
// rectangular non-negative matrix. The matrix is padded to square with zero
// weights. Among all optimal matchings of the padded matrix, the one whose
// row->column vector is lexicographically smallest is returned.
template <typename T>
AssignmentResult<T> optimal_assignment(const std::vector<std::vector<T>>& weights) {
  static_assert(std::is_arithmetic_v<T>);
  const std::size_t rows = weights.size();
  if (rows == 0 || weights.front().empty()) throw Error("assignment", "empty matrix");
  const std::size_t cols = weights.front().size();
  T max_w{};
  for (const auto& r : weights) {
    if (r.size() != cols) throw Error("assignment", "matrix is not rectangular");
    for (T w : r) {
      if (w < T{}) throw Error("assignment", "negative weight");
      max_w = std::max(max_w, w);
    }
  }
  const std::size_t n = std::max(rows, cols);
  auto cost = [&](std::size_t i, std::size_t j) -> T {
    return (i < rows && j < cols) ? -weights[i][j] : T{};
  };

  // Shortest augmenting path Hungarian method with potentials (1-indexed).
  const T inf = std::numeric_limits<T>::has_infinity ? std::numeric_limits<T>::infinity()
                                                     : std::numeric_limits<T>::max() / 4;
  std::vector<T> u(n + 1, T{}), v(n + 1, T{});
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<T> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      T delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const T cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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

  std::vector<std::size_t> row_col(n), col_row(n);
  for (std::size_t j = 1; j <= n; ++j) {
    row_col[p[j] - 1] = j - 1;
    col_row[j - 1] = p[j] - 1;
  }

  // Every optimal matching lives in the equality subgraph of any optimal
  // dual, so the lexicographic minimum is found by fixing rows greedily.
  const T tolerance = std::is_integral_v<T> ? T{} : static_cast<T>(1e-9 * (1.0 + static_cast<double>(max_w)) * n);
  const std::vector<std::size_t> initial = row_col;
  auto tight = [&](std::size_t i, std::size_t j) {
    return initial[i] == j || detail::is_tight<T>(cost(i, j) - u[i + 1] - v[j + 1], tolerance);
  };
  std::vector<char> seen(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (row_col[i] == j) break;
      if (!tight(i, j) || col_row[j] < i) continue;
      std::fill(seen.begin(), seen.end(), 0);
      const std::size_t freed = row_col[i];
      const std::size_t displaced = col_row[j];
      std::vector<std::size_t> rc = row_col, cr = col_row;
      if (detail::reroute(displaced, freed, j, i + 1, tight, rc, cr, seen)) {
        rc[i] = j;
        cr[j] = i;
        row_col = std::move(rc);
        col_row = std::move(cr);
        break;
      }
    }
  }

  AssignmentResult<T> result;
  result.row_to_col.assign(rows, -1);
  for (std::size_t i = 0; i < rows; ++i) {
    if (row_col[i] < cols) {
      result.row_to_col[i] = static_cast<std::ptrdiff_t>(row_col[i]);
      result.total += weights[i][row_col[i]];
    }
  }
  return result;
}

}  // namespace finer::eval
