#pragma once

// Query denoising: noised query generation, the static-assignment contrastive
// denoising loss, adaptive filtering of positive queries by bipartite
// matching against [positives; predictions], and a training-trajectory
// simulator that replaces the neural decoder with a parametric refinement.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "rotmatch/costs.hpp"
#include "rotmatch/errors.hpp"
#include "rotmatch/geometry.hpp"
#include "rotmatch/matching.hpp"

namespace rotmatch {

struct NoisedQuery {
  RotatedBox box;
  ClassId label = 0;
};

struct DenoisingGroup {
  std::vector<NoisedQuery> positives;
  std::vector<NoisedQuery> negatives;
  std::vector<GroundTruth> source_gts;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
};

struct NoiseConfig {
  double noise_level = 0.4;
  bool label_noise = true;
  /// A query's label is resampled with probability label_noise_ratio / 2.
  double label_noise_ratio = 0.5;
  int num_classes = 1;
  /// Lower clamp for noised side lengths, as a fraction of the source side.
  double min_size_fraction = 1e-3;
};

/// SplitMix64 finalizer, used to derive independent per-step / per-group seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Builds one positive and one negative query per ground truth.
///
/// Positive: center offset u * lambda1 * (w/2, h/2), |u| <= 1, and side
/// scales 1 + u * lambda1. Negative: the same draws pushed into the band
/// (lambda1, lambda2] with lambda2 = 2 * lambda1, so each negative center
/// offset component strictly exceeds its positive counterpart. The angle is
/// never noised.
inline DenoisingGroup generate_denoising_group(std::span<const GroundTruth> gts, const NoiseConfig& cfg,
                                               std::uint64_t seed) {
  if (gts.empty()) throw InvalidArgument("denoising group needs at least one ground truth");
  if (!(cfg.noise_level > 0.0 && cfg.noise_level <= 1.0)) throw InvalidArgument("noise level must lie in (0, 1]");
  if (cfg.num_classes < 1) throw InvalidArgument("num_classes must be positive");

  const double lo = cfg.noise_level;
  const double hi = 2.0 * cfg.noise_level;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto signed_unit = [&] { return 2.0 * unit(rng) - 1.0; };
  auto band = [&] { return 1.0 - unit(rng); };  // (0, 1]

  auto flip_label = [&](ClassId label) {
    if (!cfg.label_noise || cfg.num_classes < 2) return label;
    if (unit(rng) >= 0.5 * cfg.label_noise_ratio) return label;
    std::uniform_int_distribution<int> other(0, cfg.num_classes - 2);
    const int pick = other(rng);
    return static_cast<ClassId>(pick >= label ? pick + 1 : pick);
  };

  DenoisingGroup group;
  group.noise_level = cfg.noise_level;
  group.seed = seed;
  group.source_gts.assign(gts.begin(), gts.end());
  for (const GroundTruth& gt : gts) {
    const RotatedBox src = canonicalize(gt.box);
    double u[4];
    double mag[4];
    for (int k = 0; k < 4; ++k) {
      u[k] = signed_unit();
      mag[k] = band();
    }
    auto clamp_side = [&](double side, double scale) { return std::max(side * scale, side * cfg.min_size_fraction); };

    RotatedBox pos = src;
    pos.cx += u[0] * lo * 0.5 * src.w;
    pos.cy += u[1] * lo * 0.5 * src.h;
    pos.w = clamp_side(src.w, 1.0 + u[2] * lo);
    pos.h = clamp_side(src.h, 1.0 + u[3] * lo);

    auto banded = [&](int k) { return std::copysign(lo + (hi - lo) * mag[k], u[k] == 0.0 ? 1.0 : u[k]); };
    RotatedBox neg = src;
    neg.cx += banded(0) * 0.5 * src.w;
    neg.cy += banded(1) * 0.5 * src.h;
    neg.w = clamp_side(src.w, 1.0 + banded(2));
    neg.h = clamp_side(src.h, 1.0 + banded(3));

    group.positives.push_back({canonicalize(pos), flip_label(gt.label)});
    group.negatives.push_back({canonicalize(neg), flip_label(gt.label)});
  }
  return group;
}

/// Independent groups with seeds derived from (seed, group index).
inline std::vector<DenoisingGroup> generate_denoising_groups(std::span<const GroundTruth> gts, const NoiseConfig& cfg,
                                                             std::uint64_t seed, std::size_t count) {
  std::vector<DenoisingGroup> out;
  out.reserve(count);
  for (std::size_t g = 0; g < count; ++g) out.push_back(generate_denoising_group(gts, cfg, mix_seed(seed, g)));
  return out;
}

/// Scores a freshly noised query carries before refinement.
inline Prediction query_to_prediction(const NoisedQuery& q, int num_classes, double label_confidence = 0.5) {
  return {q.box, ClassScores::one_hot(static_cast<std::size_t>(num_classes), q.label, label_confidence)};
}

/// Stand-in for the decoder: moves a query toward its source ground truth.
/// accuracy 0 is the identity, accuracy 1 returns the ground-truth geometry
/// and a probability of 1 on the target class.
class RefinementSimulator {
 public:
  explicit RefinementSimulator(double accuracy) : accuracy_(accuracy) {
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw InvalidArgument("refinement accuracy must lie in [0, 1]");
  }

  double accuracy() const { return accuracy_; }

  Prediction refine_positive(const Prediction& query, const GroundTruth& source) const {
    if (accuracy_ == 0.0) return query;
    const double a = accuracy_;
    const RotatedBox gt = canonicalize(source.box);
    const RotatedBox q = align_to(canonicalize(query.box), gt);
    RotatedBox out;
    out.cx = (1.0 - a) * q.cx + a * gt.cx;
    out.cy = (1.0 - a) * q.cy + a * gt.cy;
    out.w = (1.0 - a) * q.w + a * gt.w;
    out.h = (1.0 - a) * q.h + a * gt.h;
    out.theta = gt.theta + (1.0 - a) * angle_offset(q.theta, gt.theta);
    ClassScores scores = query.scores;
    for (std::size_t c = 0; c < scores.probabilities.size(); ++c) {
      const double target = static_cast<ClassId>(c) == source.label ? 1.0 : 0.0;
      scores.probabilities[c] = (1.0 - a) * scores.probabilities[c] + a * target;
    }
    return {canonicalize(out), std::move(scores)};
  }

  /// Negatives keep their geometry; their scores decay toward background.
  Prediction refine_negative(const Prediction& query) const {
    Prediction out = query;
    for (double& p : out.scores.probabilities) p *= (1.0 - accuracy_);
    return out;
  }

 private:
  // Signed offset of `theta` from `ref` modulo pi, in [-pi/2, pi/2).
  static double angle_offset(double theta, double ref) {
    constexpr double pi = std::numbers::pi;
    double d = std::fmod(theta - ref + 0.5 * pi, pi);
    if (d < 0.0) d += pi;
    return d - 0.5 * pi;
  }

  // Picks between (w, h, theta) and (h, w, theta + pi/2) so the angle is
  // closest to `ref`; both describe the same rectangle.
  static RotatedBox align_to(const RotatedBox& box, const RotatedBox& ref) {
    RotatedBox swapped{box.cx, box.cy, box.h, box.w, box.theta + 0.5 * std::numbers::pi};
    const double d0 = std::abs(angle_offset(box.theta, ref.theta));
    const double d1 = std::abs(angle_offset(swapped.theta, ref.theta));
    return d1 < d0 ? swapped : box;
  }

  double accuracy_;
};

struct DenoisingLossReport {
  double pos_loss = 0.0;
  double neg_loss = 0.0;
  double filtered_background_loss = 0.0;
  double filtered_bbox_loss = 0.0;
  double total = 0.0;

  DenoisingLossReport& operator+=(const DenoisingLossReport& o) {
    pos_loss += o.pos_loss;
    neg_loss += o.neg_loss;
    filtered_background_loss += o.filtered_background_loss;
    filtered_bbox_loss += o.filtered_bbox_loss;
    total += o.total;
    return *this;
  }
};

namespace detail {

inline void require_aligned(std::size_t a, std::size_t b, std::size_t c) {
  if (a != b || b != c) throw InvalidArgument("denoising inputs must have equal lengths");
  if (a == 0) throw InvalidArgument("denoising inputs are empty");
}

}  // namespace detail

/// Static assignment sigma_i = i: every positive is reconstructed toward its
/// own ground truth and every negative is pushed to background.
inline DenoisingLossReport contrastive_denoising_loss(std::span<const Prediction> p_pos,
                                                      std::span<const Prediction> p_neg,
                                                      std::span<const GroundTruth> gts, const CostConfig& loss_cfg) {
  detail::require_aligned(p_pos.size(), p_neg.size(), gts.size());
  DenoisingLossReport r;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    r.pos_loss += training_loss(p_pos[i], gts[i], loss_cfg).total;
    r.neg_loss += focal_loss(p_neg[i].scores, kNoObject, loss_cfg.focal);
  }
  r.total = r.pos_loss + r.neg_loss;
  return r;
}

enum class Verdict { kept, filtered };

struct FilterDecision {
  std::vector<Verdict> verdicts;
  /// Column matched to each ground truth in [positives; predictions].
  std::vector<std::size_t> matched;
  double kept_fraction = 0.0;

  bool kept(std::size_t i) const { return verdicts.at(i) == Verdict::kept; }
  std::size_t kept_count() const {
    return static_cast<std::size_t>(std::count(verdicts.begin(), verdicts.end(), Verdict::kept));
  }
};

/// Decision from a precomputed gts x [positives; predictions] assignment.
inline FilterDecision filter_from_assignment(const Assignment& assignment, std::size_t num_gts) {
  FilterDecision d;
  d.verdicts.reserve(num_gts);
  for (std::size_t i = 0; i < num_gts; ++i) {
    const std::size_t col = assignment.col_of(i);
    d.matched.push_back(col);
    d.verdicts.push_back(col == i ? Verdict::kept : Verdict::filtered);
  }
  d.kept_fraction = static_cast<double>(d.kept_count()) / static_cast<double>(num_gts);
  return d;
}

/// Concatenation [positives; predictions] used as assignment columns.
inline std::vector<Prediction> concat_candidates(std::span<const Prediction> p_pos,
                                                 std::span<const Prediction> predictions) {
  std::vector<Prediction> all(p_pos.begin(), p_pos.end());
  all.insert(all.end(), predictions.begin(), predictions.end());
  return all;
}

/// Ground truth i keeps its positive query iff the optimal assignment over
/// [positives; predictions] gives it column i.
inline FilterDecision adaptive_filter(std::span<const Prediction> p_pos, std::span<const Prediction> predictions,
                                      std::span<const GroundTruth> gts, const CostConfig& cost_cfg) {
  if (gts.empty()) throw InvalidArgument("adaptive filter needs at least one ground truth");
  if (p_pos.size() != gts.size()) throw InvalidArgument("one positive query per ground truth is required");
  const auto all = concat_candidates(p_pos, predictions);
  return filter_from_assignment(hungarian(build_cost_matrix(gts, all, cost_cfg)), gts.size());
}

/// Loss with a precomputed filter decision. Kept positives get the full
/// training loss, filtered ones are treated as background; with `improved`
/// the filtered ones also keep their box-regression term.
inline DenoisingLossReport adaptive_denoising_loss(std::span<const Prediction> p_pos, std::span<const Prediction> p_neg,
                                                   std::span<const GroundTruth> gts, const FilterDecision& decision,
                                                   bool improved, const CostConfig& loss_cfg) {
  detail::require_aligned(p_pos.size(), p_neg.size(), gts.size());
  if (decision.verdicts.size() != gts.size()) throw InvalidArgument("filter decision does not match ground truths");
  DenoisingLossReport r;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (decision.kept(i)) {
      r.pos_loss += training_loss(p_pos[i], gts[i], loss_cfg).total;
    } else {
      r.filtered_background_loss += focal_loss(p_pos[i].scores, kNoObject, loss_cfg.focal);
      if (improved) r.filtered_bbox_loss += bbox_loss(p_pos[i], gts[i], loss_cfg);
    }
    r.neg_loss += focal_loss(p_neg[i].scores, kNoObject, loss_cfg.focal);
  }
  r.total = r.pos_loss + r.neg_loss + r.filtered_background_loss + r.filtered_bbox_loss;
  return r;
}

inline DenoisingLossReport adaptive_denoising_loss(std::span<const Prediction> p_pos, std::span<const Prediction> p_neg,
                                                   std::span<const Prediction> predictions,
                                                   std::span<const GroundTruth> gts, bool improved,
                                                   const CostConfig& cost_cfg, const CostConfig& loss_cfg) {
  const FilterDecision decision = adaptive_filter(p_pos, predictions, gts, cost_cfg);
  return adaptive_denoising_loss(p_pos, p_neg, gts, decision, improved, loss_cfg);
}

// ---------------------------------------------------------------------------
// Trajectory simulation

/// Produces model predictions for the ground truths at an accuracy level.
using PredictionGenerator =
    std::function<std::vector<Prediction>(std::span<const GroundTruth>, double accuracy, std::mt19937_64&)>;

/// One prediction per ground truth; center error up to (1 - a) * spread * w,
/// side error up to (1 - a) * spread, target-class probability a.
inline PredictionGenerator perturbing_prediction_generator(int num_classes, double spread = 1.5) {
  return [num_classes, spread](std::span<const GroundTruth> gts, double a, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Prediction> preds;
    preds.reserve(gts.size());
    const double e = (1.0 - a) * spread;
    for (const GroundTruth& gt : gts) {
      RotatedBox b = canonicalize(gt.box);
      const double dx = u(rng) * e * b.w;
      const double dy = u(rng) * e * b.w;
      const double sw = 1.0 + u(rng) * std::min(e, 0.9);
      const double sh = 1.0 + u(rng) * std::min(e, 0.9);
      b.cx += dx;
      b.cy += dy;
      b.w *= sw;
      b.h *= sh;
      preds.push_back({canonicalize(b), ClassScores::one_hot(static_cast<std::size_t>(num_classes), gt.label, a)});
    }
    return preds;
  };
}

struct TrajectoryConfig {
  std::size_t steps = 100;
  NoiseConfig noise;
  /// Prediction accuracy at a step, non-decreasing in step.
  std::function<double(std::size_t step, std::size_t steps)> accuracy_schedule =
      [](std::size_t s, std::size_t n) { return n > 1 ? static_cast<double>(s) / static_cast<double>(n - 1) : 1.0; };
  /// Refinement accuracy = refinement_ratio * prediction accuracy.
  double refinement_ratio = 1.0;
  PredictionGenerator prediction_generator;
  CostConfig cost = default_matching_config();
  double query_label_confidence = 0.5;
  std::uint64_t seed = 0;
};

struct TrajectoryPoint {
  std::size_t step = 0;
  double accuracy = 0.0;
  double kept_fraction = 0.0;
  double mean_prediction_iou = 0.0;
};

/// Runs the filter at every step with a fresh denoising group. Step s uses
/// seed mix_seed(seed, s), so steps are independent of evaluation order.
inline std::vector<TrajectoryPoint> simulate_training_trajectory(std::span<const GroundTruth> gts,
                                                                 const TrajectoryConfig& cfg) {
  if (cfg.steps < 2) throw InvalidArgument("trajectory needs at least 2 steps");
  if (gts.empty()) throw InvalidArgument("trajectory needs ground truths");
  const PredictionGenerator generate =
      cfg.prediction_generator ? cfg.prediction_generator : perturbing_prediction_generator(cfg.noise.num_classes);

  std::vector<TrajectoryPoint> out;
  out.reserve(cfg.steps);
  double previous = -1.0;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const double a = cfg.accuracy_schedule(step, cfg.steps);
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("accuracy schedule left [0, 1]");
    if (a < previous) throw InvalidArgument("accuracy schedule must be non-decreasing");
    previous = a;

    const std::uint64_t step_seed = mix_seed(cfg.seed, step);
    std::mt19937_64 rng(step_seed);
    const auto preds = generate(gts, a, rng);
    const DenoisingGroup group = generate_denoising_group(gts, cfg.noise, mix_seed(step_seed, 1));
    const RefinementSimulator refine(std::clamp(cfg.refinement_ratio * a, 0.0, 1.0));

    std::vector<Prediction> p_pos;
    p_pos.reserve(gts.size());
    for (std::size_t i = 0; i < gts.size(); ++i) {
      p_pos.push_back(refine.refine_positive(
          query_to_prediction(group.positives[i], cfg.noise.num_classes, cfg.query_label_confidence), gts[i]));
    }
    const FilterDecision decision = adaptive_filter(p_pos, preds, gts, cfg.cost);

    double iou_sum = 0.0;
    const std::size_t paired = std::min(preds.size(), gts.size());
    for (std::size_t i = 0; i < paired; ++i) iou_sum += rotated_iou(preds[i].box, gts[i].box);
    out.push_back({step, a, decision.kept_fraction, paired ? iou_sum / static_cast<double>(paired) : 0.0});
  }
  return out;
}

/// Ground truths on a jittered grid, well separated, in a square image.
inline std::vector<GroundTruth> grid_ground_truths(std::size_t count, double image_side, int num_classes,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t per_row = 1;
  while (per_row * per_row < count) ++per_row;
  const double cell = image_side / static_cast<double>(per_row);
  std::vector<GroundTruth> gts;
  for (std::size_t k = 0; k < count; ++k) {
    const double r = static_cast<double>(k / per_row);
    const double c = static_cast<double>(k % per_row);
    const double w = cell * (0.25 + 0.1 * unit(rng));
    const double h = w * (0.3 + 0.7 * unit(rng));
    RotatedBox b{(c + 0.5) * cell, (r + 0.5) * cell, w, h, unit(rng) * std::numbers::pi};
    gts.push_back({canonicalize(b), static_cast<ClassId>(k % static_cast<std::size_t>(num_classes))});
  }
  return gts;
}

}  // namespace rotmatch
