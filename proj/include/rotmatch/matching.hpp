#pragma once

// Bipartite assignment between ground truths (rows) and candidates (columns).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rotmatch/costs.hpp"
#include "rotmatch/errors.hpp"
#include "rotmatch/geometry.hpp"

namespace rotmatch {

/// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) throw InvalidArgument("cost matrix value count does not match shape");
  }
  CostMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    for (const auto& r : rows) {
      if (r.size() != cols_) throw InvalidArgument("ragged cost matrix");
      values_.insert(values_.end(), r.begin(), r.end());
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct MatchPair {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

/// One pair per row, in row order.
struct Assignment {
  std::vector<MatchPair> pairs;
  double total_cost = 0.0;

  std::size_t col_of(std::size_t row) const { return pairs.at(row).col; }
};

/// Entry (i, j) = match_cost(candidates[j], gts[i]).
inline CostMatrix build_cost_matrix(std::span<const GroundTruth> gts, std::span<const Prediction> candidates,
                                    const CostConfig& cfg) {
  if (gts.empty() || candidates.empty()) throw InvalidArgument("cost matrix needs ground truths and candidates");
  CostMatrix m(gts.size(), candidates.size());
  for (std::size_t i = 0; i < gts.size(); ++i) {
    for (std::size_t j = 0; j < candidates.size(); ++j) m(i, j) = match_cost(candidates[j], gts[i], cfg);
  }
  return m;
}

namespace detail {

inline void require_finite(const CostMatrix& cost) {
  if (cost.rows() == 0) throw InvalidArgument("cost matrix has no rows");
  for (double v : cost.values()) {
    if (!std::isfinite(v)) throw InvalidArgument("cost matrix has a non-finite entry");
  }
}

/// Slack under which two totals count as tied.
inline double tie_tolerance(const CostMatrix& cost) {
  double scale = 1.0;
  for (double v : cost.values()) scale = std::max(scale, std::abs(v));
  return 1e-10 * scale * static_cast<double>(cost.rows());
}

inline double total_of(const CostMatrix& cost, std::span<const std::size_t> col_of_row) {
  double total = 0.0;
  for (std::size_t i = 0; i < col_of_row.size(); ++i) total += cost(i, col_of_row[i]);
  return total;
}

struct DualSolution {
  std::vector<std::size_t> col_of_row;
  std::vector<double> u;  // row potentials
  std::vector<double> v;  // column potentials (<= 0, zero on unassigned columns)
};

// Shortest augmenting path Hungarian method for rows <= cols, O(rows^2 cols).
inline DualSolution solve_rectangular(const CostMatrix& cost) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> row_of_col(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of_col[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  DualSolution out;
  out.col_of_row.assign(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (row_of_col[j] != 0) out.col_of_row[row_of_col[j] - 1] = j - 1;
  }
  out.u.assign(u.begin() + 1, u.end());
  out.v.assign(v.begin() + 1, v.end());
  return out;
}

inline Assignment make_assignment(const CostMatrix& cost, std::span<const std::size_t> col_of_row) {
  Assignment a;
  a.pairs.reserve(col_of_row.size());
  for (std::size_t i = 0; i < col_of_row.size(); ++i) a.pairs.push_back({i, col_of_row[i]});
  a.total_cost = total_of(cost, col_of_row);
  return a;
}

}  // namespace detail

/// Minimum-cost injective row -> column assignment (rows <= cols). Among
/// optima tied within a relative 1e-10 slack, the lexicographically smallest
/// column sequence is returned.
inline Assignment hungarian(const CostMatrix& cost) {
  detail::require_finite(cost);
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  if (n > m) {
    throw InfeasibleAssignment("cannot assign " + std::to_string(n) + " rows to " + std::to_string(m) + " columns");
  }
  const detail::DualSolution dual = detail::solve_rectangular(cost);
  std::vector<std::size_t> current = dual.col_of_row;
  const double optimum = detail::total_of(cost, current);
  const double tol = detail::tie_tolerance(cost);

  // Lexicographic refinement. Any near-optimal assignment only uses edges with
  // near-zero reduced cost, so candidates outside that set are skipped.
  std::vector<char> taken(m, 0);
  double prefix_cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < current[i]; ++j) {
      if (taken[j]) continue;
      if (cost(i, j) - dual.u[i] - dual.v[j] > 2.0 * tol) continue;
      // Solve the remaining rows with (i, j) fixed.
      std::vector<std::size_t> free_cols;
      for (std::size_t c = 0; c < m; ++c) {
        if (!taken[c] && c != j) free_cols.push_back(c);
      }
      const std::size_t rest = n - i - 1;
      double completion = 0.0;
      std::vector<std::size_t> rest_cols;
      if (rest > 0) {
        CostMatrix sub(rest, free_cols.size());
        for (std::size_t r = 0; r < rest; ++r) {
          for (std::size_t c = 0; c < free_cols.size(); ++c) sub(r, c) = cost(i + 1 + r, free_cols[c]);
        }
        const auto sub_dual = detail::solve_rectangular(sub);
        completion = detail::total_of(sub, sub_dual.col_of_row);
        for (std::size_t c : sub_dual.col_of_row) rest_cols.push_back(free_cols[c]);
      }
      if (prefix_cost + cost(i, j) + completion <= optimum + tol) {
        current[i] = j;
        for (std::size_t r = 0; r < rest; ++r) current[i + 1 + r] = rest_cols[r];
        break;
      }
    }
    taken[current[i]] = 1;
    prefix_cost += cost(i, current[i]);
  }
  return detail::make_assignment(cost, current);
}

inline constexpr std::size_t kBruteForceMaxCols = 8;

/// Exhaustive search over all injections; same tie-break as hungarian().
inline Assignment brute_force_assignment(const CostMatrix& cost) {
  detail::require_finite(cost);
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  if (m > kBruteForceMaxCols) throw SizeLimit("brute-force assignment supports at most 8 columns");
  if (n > m) throw InfeasibleAssignment("more rows than columns");

  // Enumerate injections in lexicographic order of the column sequence.
  std::vector<std::vector<std::size_t>> all;
  std::vector<std::size_t> seq(n);
  std::vector<char> used(m, 0);
  auto recurse = [&](auto&& self, std::size_t row) -> void {
    if (row == n) {
      all.push_back(seq);
      return;
    }
    for (std::size_t c = 0; c < m; ++c) {
      if (used[c]) continue;
      used[c] = 1;
      seq[row] = c;
      self(self, row + 1);
      used[c] = 0;
    }
  };
  recurse(recurse, 0);

  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : all) best = std::min(best, detail::total_of(cost, s));
  const double tol = detail::tie_tolerance(cost);
  for (const auto& s : all) {
    if (detail::total_of(cost, s) <= best + tol) return detail::make_assignment(cost, s);
  }
  return {};  // unreachable: `all` is non-empty
}

struct DuplicateReport {
  std::map<ClassId, std::size_t> duplicates_per_class;
  std::map<ClassId, std::size_t> predictions_per_class;
  std::size_t total = 0;
  std::size_t duplicates = 0;
  double rate = 0.0;
};

/// A prediction scoring at least `score_threshold` is a duplicate when a
/// strictly higher scored same-class prediction overlaps it with IoU above
/// `iou_threshold`.
inline DuplicateReport duplicate_report(std::span<const ScoredBox> predictions, double score_threshold = 0.3,
                                        double iou_threshold = 0.5) {
  if (!(score_threshold > 0.0 && score_threshold < 1.0) || !(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw InvalidArgument("duplicate thresholds must lie in (0, 1)");
  }
  DuplicateReport report;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const ScoredBox& p = predictions[i];
    if (p.score < score_threshold) continue;
    ++report.total;
    ++report.predictions_per_class[p.label];
    bool duplicate = false;
    for (std::size_t k = 0; k < predictions.size() && !duplicate; ++k) {
      const ScoredBox& q = predictions[k];
      duplicate = k != i && q.label == p.label && q.score > p.score && rotated_iou(q.box, p.box) > iou_threshold;
    }
    if (duplicate) {
      ++report.duplicates;
      ++report.duplicates_per_class[p.label];
    }
  }
  report.rate = report.total == 0 ? 0.0 : static_cast<double>(report.duplicates) / static_cast<double>(report.total);
  return report;
}

}  // namespace rotmatch
