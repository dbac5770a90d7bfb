#pragma once

// Rectangular minimum-cost assignment (Kuhn-Munkres with potentials).
// Every row or every column is matched, whichever side is smaller. Among
// optimal assignments the lexicographically smallest (row, col) pair list is
// returned, so results do not depend on solver internals.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "statetrack/error.hpp"

namespace statetrack {

class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static CostMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    CostMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != m.cols_) throw ValidationError("cost matrix rows differ in length");
      for (std::size_t c = 0; c < m.cols_; ++c) m(r, c) = rows[r][c];
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // sorted by row
  double total = 0.0;
};

namespace detail {

// Optimal cost of matching min(|rows|, |cols|) pairs within the given
// subsets. Optionally reports the pairs.
inline double solve_subset(const CostMatrix& cost, const std::vector<std::size_t>& rows,
                           const std::vector<std::size_t>& cols,
                           std::vector<std::pair<std::size_t, std::size_t>>* pairs = nullptr) {
  if (rows.empty() || cols.empty()) return 0.0;
  const bool transpose = rows.size() > cols.size();
  const auto& small = transpose ? cols : rows;
  const auto& large = transpose ? rows : cols;
  auto a = [&](std::size_t i, std::size_t j) {
    return transpose ? cost(large[j - 1], small[i - 1]) : cost(small[i - 1], large[j - 1]);
  };
  const std::size_t n = small.size();
  const std::size_t m = large.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
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
  std::vector<std::pair<std::size_t, std::size_t>> found;
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const auto si = small[p[j] - 1];
    const auto lj = large[j - 1];
    found.emplace_back(transpose ? lj : si, transpose ? si : lj);
  }
  std::sort(found.begin(), found.end());
  double total = 0.0;
  for (const auto& [r, c] : found) total += cost(r, c);
  if (pairs) *pairs = std::move(found);
  return total;
}

inline bool close(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace detail

inline Assignment hungarian(const CostMatrix& cost) {
  Assignment result;
  if (cost.rows() == 0 || cost.cols() == 0) return result;
  std::vector<std::size_t> rows(cost.rows()), cols(cost.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = j;
  const double target = detail::solve_subset(cost, rows, cols);
  std::size_t need = std::min(rows.size(), cols.size());

  // Greedy lexicographic refinement: fix pairs row by row, always taking the
  // smallest column that keeps the optimum reachable.
  double fixed = 0.0;
  std::vector<std::size_t> remaining_rows = rows;
  std::vector<std::size_t> remaining_cols = cols;
  for (std::size_t r = 0; r < cost.rows() && need > 0; ++r) {
    remaining_rows.erase(std::find(remaining_rows.begin(), remaining_rows.end(), r));
    bool matched = false;
    for (std::size_t k = 0; k < remaining_cols.size(); ++k) {
      const auto c = remaining_cols[k];
      auto cols_left = remaining_cols;
      cols_left.erase(cols_left.begin() + static_cast<std::ptrdiff_t>(k));
      if (std::min(remaining_rows.size(), cols_left.size()) != need - 1) continue;
      const double rest = detail::solve_subset(cost, remaining_rows, cols_left);
      if (detail::close(fixed + cost(r, c) + rest, target)) {
        result.pairs.emplace_back(r, c);
        fixed += cost(r, c);
        remaining_cols = std::move(cols_left);
        --need;
        matched = true;
        break;
      }
    }
    if (!matched && remaining_rows.size() < need) {
      throw Error("hungarian: lexicographic refinement lost feasibility");
    }
  }
  for (const auto& [r, c] : result.pairs) result.total += cost(r, c);
  return result;
}

inline Assignment hungarian(const std::vector<std::vector<double>>& cost) {
  return hungarian(CostMatrix::from_rows(cost));
}

}  // namespace statetrack
