#pragma once

// Matching-region heatmaps, metric sweeps over box families and the small
// rank statistics used to summarise filter trajectories.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rotmatch/costs.hpp"
#include "rotmatch/errors.hpp"
#include "rotmatch/geometry.hpp"

namespace rotmatch {

struct MovingTemplate {
  double w = 1.0;
  double h = 1.0;
  double theta = 0.0;
  ClassScores scores;
};

/// A fixed ground truth, a fixed candidate and a candidate template whose
/// center is swept over a grid.
struct Scenario {
  GroundTruth gt;
  Prediction fixed;
  MovingTemplate moving;
  ImageSize image{1024.0, 1024.0};
  CostConfig cost;
};

/// Sample positions are origin + (col, row) * cell_size.
struct GridSpec {
  Point2 origin;
  double cell_size = 1.0;
  std::size_t rows = 1;
  std::size_t cols = 1;
};

struct HeatmapGrid {
  Point2 origin;
  double cell_size = 1.0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  /// Row-major margins: cost(moving) - cost(fixed). Negative = moving preferred.
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values.at(r * cols + c); }
  Point2 center(std::size_t r, std::size_t c) const {
    return {origin.x + static_cast<double>(c) * cell_size, origin.y + static_cast<double>(r) * cell_size};
  }
};

/// Localisation-only cost config for one named metric.
inline CostConfig single_metric_config(std::string_view metric, ImageSize image, int points = 4) {
  CostConfig cfg;
  cfg.image = image;
  cfg.weights = {0.0, 0.0, 0.0};
  if (metric == "l1") {
    cfg.loc = {LocCostKind::l1_5d, points};
    cfg.weights.lambda_loc = 1.0;
  } else if (metric == "xywh-l1") {
    cfg.loc = {LocCostKind::xywh_l1, points};
    cfg.weights.lambda_loc = 1.0;
  } else if (metric == "hausdorff") {
    cfg.loc = {LocCostKind::hausdorff, points};
    cfg.weights.lambda_loc = 1.0;
  } else {
    cfg.loc = {LocCostKind::none, points};
    cfg.weights.lambda_iou = 1.0;
    if (metric == "kld") {
      cfg.iou = IouCostKind::kld;
    } else if (metric == "gwd") {
      cfg.iou = IouCostKind::gwd;
    } else if (metric == "riou") {
      cfg.iou = IouCostKind::riou;
    } else if (metric == "griou") {
      cfg.iou = IouCostKind::griou;
    } else {
      throw InvalidArgument("unknown metric '" + std::string(metric) + "'");
    }
  }
  return cfg;
}

/// Representative matching scenario: a 10:4 ground truth at the center of a
/// 1024 x 1024 image, a fixed candidate on the same center rotated by 20
/// degrees, and a moving candidate sharing the ground truth's angle.
inline Scenario default_scenario(std::string_view metric = "l1", int points = 4) {
  Scenario s;
  s.image = {1024.0, 1024.0};
  s.gt = {{512.0, 512.0, 100.0, 40.0, 0.0}, 0};
  const ClassScores scores{{0.5}};
  s.fixed = {{512.0, 512.0, 100.0, 40.0, 20.0 * std::numbers::pi / 180.0}, scores};
  s.moving = {100.0, 40.0, 0.0, scores};
  s.cost = single_metric_config(metric, s.image, points);
  return s;
}

/// 201 x 201 samples spanning the image, edges included.
inline GridSpec default_grid(const ImageSize& image, std::size_t samples = 201) {
  const double side = std::max(image.width, image.height);
  GridSpec g;
  g.origin = {0.0, 0.0};
  g.cell_size = side / static_cast<double>(samples - 1);
  g.cols = static_cast<std::size_t>(std::floor(image.width / g.cell_size + 1e-9)) + 1;
  g.rows = static_cast<std::size_t>(std::floor(image.height / g.cell_size + 1e-9)) + 1;
  return g;
}

/// One row of samples through the ground-truth center along x.
inline GridSpec x_axis_sweep(const Scenario& s, std::size_t samples = 201) {
  GridSpec g;
  g.origin = {0.0, s.gt.box.cy};
  g.cell_size = s.image.width / static_cast<double>(samples - 1);
  g.rows = 1;
  g.cols = samples;
  return g;
}

inline Prediction moving_candidate(const Scenario& s, Point2 center) {
  return {{center.x, center.y, s.moving.w, s.moving.h, s.moving.theta}, s.moving.scores};
}

inline HeatmapGrid matching_region_heatmap(const Scenario& s, const GridSpec& grid) {
  validate(s.image);
  if (grid.rows == 0 || grid.cols == 0 || !(grid.cell_size > 0.0) || !std::isfinite(grid.cell_size)) {
    throw InvalidArgument("grid needs positive dimensions and cell size");
  }
  const double tol = 1e-9 * std::max(s.image.width, s.image.height);
  const Point2 last{grid.origin.x + static_cast<double>(grid.cols - 1) * grid.cell_size,
                    grid.origin.y + static_cast<double>(grid.rows - 1) * grid.cell_size};
  if (grid.origin.x < -tol || grid.origin.y < -tol || last.x > s.image.width + tol || last.y > s.image.height + tol) {
    throw InvalidArgument("grid extends outside the image");
  }
  HeatmapGrid out{grid.origin, grid.cell_size, grid.rows, grid.cols, {}};
  out.values.resize(grid.rows * grid.cols);
  const double fixed_cost = match_cost(s.fixed, s.gt, s.cost);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      out.values[r * grid.cols + c] = match_cost(moving_candidate(s, out.center(r, c)), s.gt, s.cost) - fixed_cost;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class Metric { l1, xywh_l1, hausdorff, kld, gwd, riou, griou };

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::l1: return "l1";
    case Metric::xywh_l1: return "xywh-l1";
    case Metric::hausdorff: return "hausdorff";
    case Metric::kld: return "kld";
    case Metric::gwd: return "gwd";
    case Metric::riou: return "riou";
    case Metric::griou: return "griou";
  }
  return "?";
}

inline Metric parse_metric(std::string_view name) {
  for (Metric m : {Metric::l1, Metric::xywh_l1, Metric::hausdorff, Metric::kld, Metric::gwd, Metric::riou,
                   Metric::griou}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown metric '" + std::string(name) + "'");
}

struct MetricContext {
  ImageSize image{1024.0, 1024.0};
  int points = 4;
};

/// Cost of `candidate` against `reference` under a single metric.
inline double evaluate_metric(Metric m, const RotatedBox& candidate, const RotatedBox& reference,
                              const MetricContext& ctx) {
  switch (m) {
    case Metric::l1: return loc_term(candidate, reference, {LocCostKind::l1_5d, ctx.points}, ctx.image);
    case Metric::xywh_l1: return loc_term(candidate, reference, {LocCostKind::xywh_l1, ctx.points}, ctx.image);
    case Metric::hausdorff: return hausdorff_cost(candidate, reference, ctx.points, ctx.image);
    case Metric::kld: return iou_term(candidate, reference, IouCostKind::kld);
    case Metric::gwd: return iou_term(candidate, reference, IouCostKind::gwd);
    case Metric::riou: return riou_cost(candidate, reference);
    case Metric::griou: return griou_cost(candidate, reference);
  }
  throw InvalidArgument("unknown metric");
}

/// A one-parameter family of (candidate, reference) box pairs.
struct SweepFamily {
  std::string parameter_name;
  std::vector<double> parameters;
  std::function<std::pair<RotatedBox, RotatedBox>(double)> pair_at;
};

struct SweepTable {
  std::string parameter_name;
  std::vector<Metric> metrics;
  std::vector<double> parameters;
  /// rows[i][k] = metric k at parameters[i].
  std::vector<std::vector<double>> rows;
};

inline std::vector<double> linspace(double first, double last, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = count == 1 ? first : first + (last - first) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

/// Candidate = reference rotated to angle t, t in [0, pi].
inline SweepFamily angle_family(const RotatedBox& reference, std::size_t samples) {
  return {"theta", linspace(0.0, std::numbers::pi, samples), [reference](double t) {
            RotatedBox cand = reference;
            cand.theta = t;
            return std::pair{canonicalize(cand), canonicalize(reference)};
          }};
}

/// Candidate = reference shifted by t along x, t in [0, max_offset].
inline SweepFamily center_family(const RotatedBox& reference, double max_offset, std::size_t samples) {
  return {"dx", linspace(0.0, max_offset, samples), [reference](double t) {
            RotatedBox cand = reference;
            cand.cx += t;
            return std::pair{canonicalize(cand), canonicalize(reference)};
          }};
}

/// Reference (w, r w, 0) against candidate (w, r w, pi/2) for aspect ratio
/// r in [min_ratio, 1]; r = 1 is the square case.
inline SweepFamily aspect_family(double width, double min_ratio, std::size_t samples) {
  return {"aspect", linspace(min_ratio, 1.0, samples), [width](double r) {
            const RotatedBox ref{0.0, 0.0, width, r * width, 0.0};
            RotatedBox cand = ref;
            cand.theta = 0.5 * std::numbers::pi;
            return std::pair{canonicalize(cand), canonicalize(ref)};
          }};
}

inline SweepTable run_sweep(const SweepFamily& family, std::span<const Metric> metrics,
                            const MetricContext& ctx = {}) {
  if (family.parameters.size() < 2) throw InvalidArgument("a sweep needs at least 2 parameter samples");
  if (metrics.empty()) throw InvalidArgument("a sweep needs at least one metric");
  SweepTable table{family.parameter_name, {metrics.begin(), metrics.end()}, family.parameters, {}};
  for (double t : family.parameters) {
    const auto [cand, ref] = family.pair_at(t);
    std::vector<double> row;
    row.reserve(metrics.size());
    for (Metric m : metrics) row.push_back(evaluate_metric(m, cand, ref, ctx));
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Rank statistics

/// Average ranks (1-based), ties share the mean rank.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("spearman needs two equal-length series");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

/// One-sided permutation p-value for a negative Spearman correlation:
/// (1 + #{perm : rho_perm <= rho_obs}) / (1 + permutations).
inline double spearman_negative_pvalue(std::span<const double> x, std::span<const double> y,
                                       std::size_t permutations, std::uint64_t seed) {
  const double observed = spearman(x, y);
  std::vector<double> shuffled(y.begin(), y.end());
  std::mt19937_64 rng(seed);
  std::size_t hits = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    if (spearman(x, shuffled) <= observed) ++hits;
  }
  return static_cast<double>(hits + 1) / static_cast<double>(permutations + 1);
}

}  // namespace rotmatch
