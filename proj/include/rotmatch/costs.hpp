#pragma once

// Pairwise matching costs and scalar training losses.
//
// A match cost (used to build the assignment problem) and a training loss
// (evaluated on an already-matched pair) share the same weighted structure:
//   lambda_cls * classification + lambda_loc * localisation + lambda_iou * overlap
// and are configured independently through two CostConfig values.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rotmatch/errors.hpp"
#include "rotmatch/geometry.hpp"

namespace rotmatch {

/// Offset inside logarithms.
inline constexpr double kLogEps = 1e-8;

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  double trace() const { return xx + yy; }
  double det() const { return xx * yy - xy * xy; }
};

struct Gaussian2 {
  Point2 mean;
  Sym2 cov;
};

struct CostWeights {
  double lambda_cls = 2.0;
  double lambda_loc = 5.0;
  double lambda_iou = 5.0;
};

/// Per-class probabilities (sigmoid convention, no sum-to-one constraint).
struct ClassScores {
  std::vector<double> probabilities;

  std::size_t num_classes() const { return probabilities.size(); }
  double operator[](std::size_t i) const { return probabilities[i]; }

  static ClassScores one_hot(std::size_t num_classes, ClassId label, double p = 1.0) {
    ClassScores s{std::vector<double>(num_classes, 0.0)};
    s.probabilities.at(static_cast<std::size_t>(label)) = p;
    return s;
  }
};

inline void validate(const ClassScores& scores) {
  for (double p : scores.probabilities) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw InvalidArgument("class probability outside [0, 1]");
    }
  }
}

struct LossBreakdown {
  double cls = 0.0;
  double loc = 0.0;
  double iou = 0.0;
  double total = 0.0;
};

enum class LocCostKind { l1_5d, xywh_l1, hausdorff, none };
enum class IouCostKind { kld, gwd, riou, griou };

struct LocCost {
  LocCostKind kind = LocCostKind::hausdorff;
  int points = 4;  // only used by hausdorff
};

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

struct CostConfig {
  CostWeights weights;
  LocCost loc;
  IouCostKind iou = IouCostKind::kld;
  ImageSize image{1024.0, 1024.0};
  FocalParams focal;
};

/// Matching defaults: Hausdorff over 4 corners, KLD overlap term.
inline CostConfig default_matching_config(ImageSize image = {1024.0, 1024.0}) {
  CostConfig cfg;
  cfg.image = image;
  cfg.loc = {LocCostKind::hausdorff, 4};
  return cfg;
}

/// Training loss defaults: normalized 5D L1 regression, KLD overlap term.
inline CostConfig default_loss_config(ImageSize image = {1024.0, 1024.0}) {
  CostConfig cfg;
  cfg.image = image;
  cfg.loc = {LocCostKind::l1_5d, 4};
  return cfg;
}

struct Prediction {
  RotatedBox box;
  ClassScores scores;
};

struct GroundTruth {
  RotatedBox box;
  ClassId label = 0;
};

// ---------------------------------------------------------------------------
// Localisation costs

inline double l1_cost_5d(const NormalizedBox5D& a, const NormalizedBox5D& b) {
  if (a.angle_divisor != b.angle_divisor || a.angle_divisor != std::numbers::pi) {
    throw InvalidArgument("5D L1 cost needs both boxes normalized with angle divisor pi");
  }
  // The angle difference is deliberately not wrapped.
  return std::abs(a.cx - b.cx) + std::abs(a.cy - b.cy) + std::abs(a.w - b.w) + std::abs(a.h - b.h) +
         std::abs(a.theta - b.theta);
}

inline double xywh_l1_cost(const NormalizedBox5D& a, const NormalizedBox5D& b) {
  return std::abs(a.cx - b.cx) + std::abs(a.cy - b.cy) + std::abs(a.w - b.w) + std::abs(a.h - b.h);
}

/// Symmetric Hausdorff distance between finite point sets.
inline double hausdorff_distance(std::span<const Point2> xs, std::span<const Point2> ys) {
  if (xs.empty() || ys.empty()) throw InvalidArgument("Hausdorff distance of an empty point set");
  auto directed = [](std::span<const Point2> from, std::span<const Point2> to) {
    double worst = 0.0;
    for (const Point2& p : from) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const Point2& q : to) nearest = std::min(nearest, distance(p, q));
      worst = std::max(worst, nearest);
    }
    return worst;
  };
  return std::max(directed(xs, ys), directed(ys, xs));
}

/// Hausdorff distance between sampled boundaries, points scaled by 1/(I_w, I_h).
inline double hausdorff_cost(const RotatedBox& a, const RotatedBox& b, int count, const ImageSize& size) {
  validate(size);
  auto sample = [&](const RotatedBox& box) {
    auto pts = boundary_points(canonicalize(box), count);
    for (Point2& p : pts) p = {p.x / size.width, p.y / size.height};
    return pts;
  };
  const auto pa = sample(a);
  const auto pb = sample(b);
  return hausdorff_distance(pa, pb);
}

// ---------------------------------------------------------------------------
// Gaussian overlap surrogates

inline Gaussian2 box_to_gaussian(const RotatedBox& box) {
  validate(box);
  const double c = std::cos(box.theta);
  const double s = std::sin(box.theta);
  const double a = 0.25 * box.w * box.w;
  const double b = 0.25 * box.h * box.h;
  return {{box.cx, box.cy}, {a * c * c + b * s * s, (a - b) * c * s, a * s * s + b * c * c}};
}

namespace detail {

inline void require_nondegenerate(const RotatedBox& box) {
  if (0.25 * std::min(box.w, box.h) * std::min(box.w, box.h) < 1e-12) {
    throw DegenerateBox("box covariance is near-singular");
  }
}

inline double bounded_divergence_cost(double divergence) {
  constexpr double tau = 1.0;
  return 1.0 - 1.0 / (tau + std::log1p(std::max(0.0, divergence)));
}

}  // namespace detail

/// KL(N_a || N_b) between two 2D Gaussians.
inline double kl_divergence(const Gaussian2& a, const Gaussian2& b) {
  const double det_b = b.cov.det();
  const double det_a = a.cov.det();
  // Inverse of b's covariance.
  const Sym2 inv_b{b.cov.yy / det_b, -b.cov.xy / det_b, b.cov.xx / det_b};
  const Point2 d = b.mean - a.mean;
  const double mahalanobis = d.x * (inv_b.xx * d.x + inv_b.xy * d.y) + d.y * (inv_b.xy * d.x + inv_b.yy * d.y);
  const double trace_term = inv_b.xx * a.cov.xx + 2.0 * inv_b.xy * a.cov.xy + inv_b.yy * a.cov.yy;
  const double value = 0.5 * (mahalanobis + trace_term + std::log(det_b / det_a) - 2.0);
  return std::max(0.0, value);
}

/// Squared 2-Wasserstein distance between two 2D Gaussians.
///
/// For 2x2 SPD X, tr(sqrt(X)) = sqrt(tr X + 2 sqrt(det X)); with
/// X = A^1/2 B A^1/2 this gives tr X = tr(AB), det X = det A det B.
inline double wasserstein_sq(const Gaussian2& a, const Gaussian2& b) {
  const Point2 d = a.mean - b.mean;
  const double tr_ab = a.cov.xx * b.cov.xx + 2.0 * a.cov.xy * b.cov.xy + a.cov.yy * b.cov.yy;
  const double det_prod = std::max(0.0, a.cov.det() * b.cov.det());
  const double cross_term = std::sqrt(std::max(0.0, tr_ab + 2.0 * std::sqrt(det_prod)));
  const double value = dot(d, d) + a.cov.trace() + b.cov.trace() - 2.0 * cross_term;
  return std::max(0.0, value);
}

inline double kld_cost(const RotatedBox& a, const RotatedBox& b) {
  detail::require_nondegenerate(a);
  detail::require_nondegenerate(b);
  return detail::bounded_divergence_cost(kl_divergence(box_to_gaussian(a), box_to_gaussian(b)));
}

inline double gwd_cost(const RotatedBox& a, const RotatedBox& b) {
  detail::require_nondegenerate(a);
  detail::require_nondegenerate(b);
  return detail::bounded_divergence_cost(wasserstein_sq(box_to_gaussian(a), box_to_gaussian(b)));
}

inline double riou_cost(const RotatedBox& a, const RotatedBox& b) { return 1.0 - rotated_iou(a, b); }
inline double griou_cost(const RotatedBox& a, const RotatedBox& b) { return 1.0 - griou(a, b); }

// ---------------------------------------------------------------------------
// Classification

namespace detail {

inline void require_focal(const ClassScores& scores, const FocalParams& focal) {
  validate(scores);
  if (!(focal.alpha > 0.0 && focal.alpha < 1.0) || !(focal.gamma >= 0.0)) {
    throw InvalidArgument("focal parameters need alpha in (0, 1) and gamma >= 0");
  }
}

inline void require_class(const ClassScores& scores, ClassId label) {
  if (label < 0 || static_cast<std::size_t>(label) >= scores.num_classes()) {
    throw InvalidArgument("class index " + std::to_string(label) + " out of range for " +
                          std::to_string(scores.num_classes()) + " classes");
  }
}

}  // namespace detail

/// Focal matching cost: positive-term minus negative-term for the target class.
inline double focal_class_cost(const ClassScores& scores, ClassId target, const FocalParams& focal = {}) {
  detail::require_focal(scores, focal);
  detail::require_class(scores, target);
  const double p = scores[static_cast<std::size_t>(target)];
  const double pos = focal.alpha * std::pow(1.0 - p, focal.gamma) * -std::log(p + kLogEps);
  const double neg = (1.0 - focal.alpha) * std::pow(p, focal.gamma) * -std::log(1.0 - p + kLogEps);
  return pos - neg;
}

/// Marker for the "no object" target.
inline constexpr ClassId kNoObject = -1;

/// Sigmoid focal loss summed over classes. With target kNoObject every class
/// is a negative.
inline double focal_loss(const ClassScores& scores, ClassId target, const FocalParams& focal = {}) {
  detail::require_focal(scores, focal);
  if (target != kNoObject) detail::require_class(scores, target);
  double total = 0.0;
  for (std::size_t c = 0; c < scores.num_classes(); ++c) {
    const double p = scores[c];
    if (static_cast<ClassId>(c) == target) {
      total += focal.alpha * std::pow(1.0 - p, focal.gamma) * -std::log(p + kLogEps);
    } else {
      total += (1.0 - focal.alpha) * std::pow(p, focal.gamma) * -std::log(1.0 - p + kLogEps);
    }
  }
  return std::max(0.0, total);
}

// ---------------------------------------------------------------------------
// Composite cost and loss

inline double loc_term(const RotatedBox& pred, const RotatedBox& gt, const LocCost& loc, const ImageSize& image) {
  switch (loc.kind) {
    case LocCostKind::l1_5d:
      return l1_cost_5d(normalize_box(canonicalize(pred), image, std::numbers::pi),
                        normalize_box(canonicalize(gt), image, std::numbers::pi));
    case LocCostKind::xywh_l1:
      return xywh_l1_cost(normalize_box(canonicalize(pred), image, 1.0),
                          normalize_box(canonicalize(gt), image, 1.0));
    case LocCostKind::hausdorff:
      return hausdorff_cost(pred, gt, loc.points, image);
    case LocCostKind::none:
      validate(pred);
      validate(gt);
      return 0.0;
  }
  throw InvalidArgument("unknown localisation cost kind");
}

inline double iou_term(const RotatedBox& pred, const RotatedBox& gt, IouCostKind kind) {
  switch (kind) {
    case IouCostKind::kld: return kld_cost(canonicalize(pred), canonicalize(gt));
    case IouCostKind::gwd: return gwd_cost(canonicalize(pred), canonicalize(gt));
    case IouCostKind::riou: return riou_cost(pred, gt);
    case IouCostKind::griou: return griou_cost(pred, gt);
  }
  throw InvalidArgument("unknown IoU cost kind");
}

namespace detail {

inline void require_weights(const CostWeights& w) {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!ok(w.lambda_cls) || !ok(w.lambda_loc) || !ok(w.lambda_iou)) {
    throw InvalidArgument("cost weights must be finite and non-negative");
  }
}

}  // namespace detail

/// Weighted matching cost of assigning `pred` to `gt`. Zero-weighted terms are
/// skipped (not evaluated).
inline double match_cost(const Prediction& pred, const GroundTruth& gt, const CostConfig& cfg) {
  detail::require_weights(cfg.weights);
  double cost = 0.0;
  if (cfg.weights.lambda_cls != 0.0) {
    cost += cfg.weights.lambda_cls * focal_class_cost(pred.scores, gt.label, cfg.focal);
  }
  if (cfg.weights.lambda_loc != 0.0) cost += cfg.weights.lambda_loc * loc_term(pred.box, gt.box, cfg.loc, cfg.image);
  if (cfg.weights.lambda_iou != 0.0) cost += cfg.weights.lambda_iou * iou_term(pred.box, gt.box, cfg.iou);
  return cost;
}

/// Weighted box-regression part of the training objective.
inline double bbox_loss(const Prediction& pred, const GroundTruth& gt, const CostConfig& cfg) {
  detail::require_weights(cfg.weights);
  return cfg.weights.lambda_loc * loc_term(pred.box, gt.box, cfg.loc, cfg.image) +
         cfg.weights.lambda_iou * iou_term(pred.box, gt.box, cfg.iou);
}

inline LossBreakdown training_loss(const Prediction& pred, const GroundTruth& gt, const CostConfig& cfg) {
  detail::require_weights(cfg.weights);
  LossBreakdown out;
  out.cls = focal_loss(pred.scores, gt.label, cfg.focal);
  out.loc = loc_term(pred.box, gt.box, cfg.loc, cfg.image);
  out.iou = iou_term(pred.box, gt.box, cfg.iou);
  out.total = cfg.weights.lambda_cls * out.cls + cfg.weights.lambda_loc * out.loc + cfg.weights.lambda_iou * out.iou;
  return out;
}

inline std::string_view to_string(LocCostKind kind) {
  switch (kind) {
    case LocCostKind::l1_5d: return "l1";
    case LocCostKind::xywh_l1: return "xywh-l1";
    case LocCostKind::hausdorff: return "hausdorff";
    case LocCostKind::none: return "none";
  }
  return "?";
}

inline std::string_view to_string(IouCostKind kind) {
  switch (kind) {
    case IouCostKind::kld: return "kld";
    case IouCostKind::gwd: return "gwd";
    case IouCostKind::riou: return "riou";
    case IouCostKind::griou: return "griou";
  }
  return "?";
}

}  // namespace rotmatch
