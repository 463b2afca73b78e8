// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rotmatch/rotmatch.hpp"
#include "test_support.hpp"

using namespace rotmatch;
using rotmatch::oracle::kPi;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  const char* name;
  double budget_seconds;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

constexpr ImageSize kImage{1024.0, 1024.0};

Outcome hausdorff_pseudometric() {
  std::mt19937_64 rng(1001);
  double worst_sym = 0.0, worst_tri = -1e300, worst_self = 0.0, min_val = 1e300;
  for (int t = 0; t < 1000; ++t) {
    const RotatedBox a = oracle::random_box(rng, 1024.0, 2.0, 200.0);
    const RotatedBox b = oracle::random_box(rng, 1024.0, 2.0, 200.0);
    const RotatedBox c = oracle::random_box(rng, 1024.0, 2.0, 200.0);
    const double ab = hausdorff_cost(a, b, 4, kImage), ba = hausdorff_cost(b, a, 4, kImage);
    const double bc = hausdorff_cost(b, c, 4, kImage), ac = hausdorff_cost(a, c, 4, kImage);
    worst_sym = std::max(worst_sym, std::abs(ab - ba));
    worst_self = std::max(worst_self, hausdorff_cost(a, a, 4, kImage));
    min_val = std::min({min_val, ab, bc, ac});
    worst_tri = std::max(worst_tri, ac - (ab + bc));
  }
  Outcome o;
  o.pass = worst_sym <= 1e-9 && worst_self <= 1e-9 && min_val >= 0.0 && worst_tri <= 1e-9;
  o.detail = "max |d(a,b)-d(b,a)| " + fmt("%.2e", worst_sym) + ", max d(a,a) " + fmt("%.2e", worst_self) +
             ", min d " + fmt("%.3g", min_val) + ", max triangle excess " + fmt("%.2e", worst_tri);
  return o;
}

Outcome square_like() {
  std::mt19937_64 rng(1002);
  double worst_h = 0.0, worst_l1 = 0.0;
  for (int t = 0; t < 100; ++t) {
    const RotatedBox a = oracle::random_square(rng, 1024.0);
    const RotatedBox b{a.cx, a.cy, a.w, a.h, a.theta + kPi / 2};
    worst_h = std::max(worst_h, hausdorff_cost(a, b, 4, kImage));
    const double l1 = l1_cost_5d(normalize_box(a, kImage, kPi), normalize_box(b, kImage, kPi));
    worst_l1 = std::max(worst_l1, std::abs(l1 - 0.5));
  }
  return {worst_h <= 1e-9 && worst_l1 <= 1e-12,
          "max hausdorff " + fmt("%.2e", worst_h) + ", max |l1 - 0.5| " + fmt("%.2e", worst_l1)};
}

Outcome boundary_continuity() {
  std::mt19937_64 rng(1003);
  std::uniform_real_distribution<double> pos(100.0, 900.0), side(10.0, 200.0), ratio(0.1, 0.8);
  Outcome o;
  double worst_ratio = 0.0, min_l1 = 1e300;
  for (int t = 0; t < 100; ++t) {
    const double w = side(rng);
    const double h = w * ratio(rng);
    const double cx = pos(rng), cy = pos(rng);
    double prev = 1e300;
    for (double eps : {0.2, 0.1, 0.05, 0.01}) {
      const RotatedBox a{cx, cy, w, h, eps}, b{cx, cy, w, h, kPi - eps};
      const double d = hausdorff_cost(a, b, 4, kImage);
      if (!(d < prev)) o.pass = false;
      prev = d;
      min_l1 = std::min(min_l1, l1_cost_5d(normalize_box(a, kImage, kPi), normalize_box(b, kImage, kPi)));
      if (eps == 0.01) worst_ratio = std::max(worst_ratio, d / (0.02 * w / kImage.width));
    }
  }
  o.pass = o.pass && worst_ratio < 1.0 && min_l1 > 0.85;
  o.detail = "strictly decreasing on 100 boxes: " + std::string(o.pass ? "yes" : "see values") +
             ", max d(0.01) / (0.02 w/I_w) " + fmt("%.3f", worst_ratio) + ", min l1 " + fmt("%.4f", min_l1);
  return o;
}

Outcome hungarian_vs_brute_force() {
  std::mt19937_64 rng(1004);
  std::uniform_int_distribution<int> rows_d(1, 6);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_int_distribution<int> small(0, 4);
  int mismatches = 0, pair_mismatches = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t rows = static_cast<std::size_t>(rows_d(rng));
    const std::size_t cols = rows + std::uniform_int_distribution<std::size_t>(0, 8 - rows)(rng);
    CostMatrix m(rows, cols);
    const bool tied = t % 5 == 0;
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = tied ? small(rng) : u(rng);
    }
    const auto fast = hungarian(m);
    const auto slow = brute_force_assignment(m);
    mismatches += fast.total_cost != slow.total_cost;
    pair_mismatches += !(fast.pairs == slow.pairs);
  }
  return {mismatches == 0,
          std::to_string(mismatches) + " total-cost mismatches, " + std::to_string(pair_mismatches) +
              " assignment mismatches over 500 matrices (100 with integer ties)"};
}

Outcome rotated_iou_monte_carlo() {
  std::mt19937_64 rng(1005);
  std::uniform_real_distribution<double> off(-15.0, 15.0);
  double worst = 0.0;
  int disjoint = 0;
  for (int t = 0; t < 200; ++t) {
    const RotatedBox a = oracle::random_box(rng, 100.0, 2.0, 40.0);
    RotatedBox b = oracle::random_box(rng, 100.0, 2.0, 40.0);
    b.cx = a.cx + off(rng);
    b.cy = a.cy + off(rng);
    const double exact = rotated_iou(a, b);
    disjoint += exact == 0.0;
    const double mc = oracle::monte_carlo_iou_in_a(a, b, 10'000'000, 5000 + t);
    worst = std::max(worst, std::abs(exact - mc));
  }
  return {worst <= 3e-3, "max |iou - mc| " + fmt("%.2e", worst) + " over 200 pairs (" + std::to_string(disjoint) +
                             " disjoint), 1e7 samples each"};
}

Outcome axis_sweep_margins() {
  std::size_t l1_zero = 0, l1_pref = 0, h_zero = 0, h_pref = 0;
  for (const char* metric : {"l1", "hausdorff"}) {
    const Scenario s = default_scenario(metric);
    const HeatmapGrid row = matching_region_heatmap(s, x_axis_sweep(s, 201));
    for (std::size_t c = 0; c < row.cols; ++c) {
      if (row.at(0, c) >= 0.0) continue;
      const bool zero = rotated_iou(moving_candidate(s, row.center(0, c)).box, s.gt.box) == 0.0;
      if (metric[0] == 'l') {
        ++l1_pref;
        l1_zero += zero;
      } else {
        ++h_pref;
        h_zero += zero;
      }
    }
  }
  return {l1_zero > 0 && h_pref > 0 && h_zero == 0,
          "l1 prefers " + std::to_string(l1_pref) + " centers (" + std::to_string(l1_zero) +
              " with IoU 0); hausdorff prefers " + std::to_string(h_pref) + " (" + std::to_string(h_zero) +
              " with IoU 0)"};
}

constexpr int kClasses = 3;

std::vector<Prediction> as_predictions(const std::vector<NoisedQuery>& qs, double p) {
  std::vector<Prediction> out;
  for (const auto& q : qs) out.push_back(query_to_prediction(q, kClasses, p));
  return out;
}

Outcome aqd_reduction() {
  std::mt19937_64 rng(1006);
  std::uniform_int_distribution<std::size_t> count(1, 8), extra(0, 3);
  std::uniform_real_distribution<double> level(0.05, 0.4), unit(0.0, 1.0);
  const CostConfig match = default_matching_config(kImage);
  const CostConfig loss = default_loss_config(kImage);
  int fixtures = 0, attempts = 0;
  double worst = 0.0;
  while (fixtures < 100 && attempts < 10000) {
    ++attempts;
    const auto gts = grid_ground_truths(count(rng), kImage.width, kClasses, rng());
    NoiseConfig nc;
    nc.num_classes = kClasses;
    nc.noise_level = level(rng);
    const auto group = generate_denoising_group(gts, nc, rng());
    std::vector<Prediction> pos;
    const RefinementSimulator refine(unit(rng));
    for (std::size_t i = 0; i < gts.size(); ++i) {
      pos.push_back(refine.refine_positive(query_to_prediction(group.positives[i], kClasses, 0.5), gts[i]));
    }
    const auto neg = as_predictions(group.negatives, unit(rng));
    std::vector<Prediction> preds;
    const std::size_t n = extra(rng);
    for (std::size_t k = 0; k < n; ++k) {
      preds.push_back({oracle::random_box(rng, kImage.width, 10, 300), {{unit(rng), unit(rng), unit(rng)}}});
    }
    const auto decision = adaptive_filter(pos, preds, gts, match);
    if (decision.kept_count() != gts.size()) continue;
    ++fixtures;
    const double a = adaptive_denoising_loss(pos, neg, gts, decision, false, loss).total;
    const double c = contrastive_denoising_loss(pos, neg, gts, loss).total;
    worst = std::max(worst, std::abs(a - c));
  }
  return {fixtures == 100 && worst <= 1e-9, std::to_string(fixtures) + " all-kept fixtures (" +
                                                std::to_string(attempts) + " drawn), max |adaptive - contrastive| " +
                                                fmt("%.2e", worst)};
}

Outcome aqd_filtering() {
  const CostConfig match = default_matching_config(kImage);
  auto oracle_cols = [&](const std::vector<Prediction>& pos, const std::vector<Prediction>& preds,
                         const std::vector<GroundTruth>& gts) {
    return filter_from_assignment(brute_force_assignment(build_cost_matrix(gts, concat_candidates(pos, preds), match)),
                                  gts.size());
  };
  // Far positive against an exact, confident prediction.
  const std::vector<GroundTruth> one{{{500, 500, 120, 30, 0.3}, 0}};
  const std::vector<Prediction> far_pos{{{560, 560, 110, 35, 0.3}, ClassScores::one_hot(kClasses, 0, 0.5)}};
  const std::vector<Prediction> exact{{one[0].box, ClassScores::one_hot(kClasses, 0, 0.95)},
                                      {{100, 100, 50, 50, 0}, ClassScores::one_hot(kClasses, 1, 0.9)}};
  const auto d1 = adaptive_filter(far_pos, exact, one, match);
  const auto o1 = oracle_cols(far_pos, exact, one);
  const bool filtered = d1.verdicts[0] == Verdict::filtered && o1.verdicts[0] == Verdict::filtered &&
                        d1.matched == o1.matched;

  // Accurate positives against random predictions.
  const auto gts = grid_ground_truths(5, kImage.width, kClasses, 7);
  std::vector<Prediction> perfect;
  for (const auto& g : gts) perfect.push_back({g.box, ClassScores::one_hot(kClasses, g.label, 1.0)});
  std::mt19937_64 rng(1007);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  std::vector<Prediction> noise;
  for (int k = 0; k < 3; ++k) noise.push_back({oracle::random_box(rng, kImage.width, 20, 200), {{p(rng), p(rng), p(rng)}}});
  const auto d2 = adaptive_filter(perfect, noise, gts, match);
  const auto o2 = oracle_cols(perfect, noise, gts);
  const bool all_kept = d2.kept_fraction == 1.0 && o2.kept_fraction == 1.0;
  return {filtered && all_kept, std::string("far positive ") + (filtered ? "FILTERED" : "not filtered") +
                                    " (matched column " + std::to_string(d1.matched[0]) + "), accurate fixture kept " +
                                    std::to_string(d2.kept_count()) + "/5, oracle agrees"};
}

Outcome kept_fraction_trend() {
  constexpr std::size_t kSteps = 100;
  std::vector<double> mean(kSteps, 0.0);
  int negative_seeds = 0;
  std::vector<double> steps(kSteps);
  for (std::size_t s = 0; s < kSteps; ++s) steps[s] = static_cast<double>(s);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto gts = grid_ground_truths(16, kImage.width, kClasses, seed);
    TrajectoryConfig cfg;
    cfg.steps = kSteps;
    cfg.noise.num_classes = kClasses;
    cfg.refinement_ratio = 0.5;
    cfg.cost = default_matching_config(kImage);
    cfg.seed = seed;
    const auto traj = simulate_training_trajectory(gts, cfg);
    std::vector<double> kept;
    for (const auto& p : traj) kept.push_back(p.kept_fraction);
    negative_seeds += spearman(steps, kept) < 0.0;
    for (std::size_t s = 0; s < kSteps; ++s) mean[s] += kept[s] / 50.0;
  }
  const double rho = spearman(steps, mean);
  const double pvalue = spearman_negative_pvalue(steps, mean, 20000, 1008);
  return {rho < 0.0 && pvalue < 0.01, "spearman(step, mean kept) " + fmt("%.3f", rho) + ", permutation p " +
                                          fmt("%.2e", pvalue) + ", kept " + fmt("%.2f", mean.front()) + " -> " +
                                          fmt("%.2f", mean.back()) + ", " + std::to_string(negative_seeds) +
                                          "/50 seeds individually negative"};
}

Outcome gaussian_invariances() {
  std::mt19937_64 rng(1009);
  std::uniform_real_distribution<double> ang(-kPi, kPi), shift(-500.0, 500.0);
  double self = 0.0, inv = 0.0, square = 0.0;
  for (int t = 0; t < 200; ++t) {
    const RotatedBox a = oracle::random_box(rng, 1024.0, 2.0, 200.0);
    const RotatedBox b = oracle::random_box(rng, 1024.0, 2.0, 200.0);
    self = std::max({self, kld_cost(a, a), gwd_cost(a, a)});
    const Point2 pivot{shift(rng), shift(rng)}, offset{shift(rng), shift(rng)};
    const double angle = ang(rng);
    const RotatedBox ta = transform_box(a, pivot, angle, offset), tb = transform_box(b, pivot, angle, offset);
    inv = std::max({inv, std::abs(kld_cost(a, b) - kld_cost(ta, tb)), std::abs(gwd_cost(a, b) - gwd_cost(ta, tb))});
    const RotatedBox s = oracle::random_square(rng, 1024.0);
    const RotatedBox s90{s.cx, s.cy, s.w, s.h, s.theta + kPi / 2};
    square = std::max({square, kld_cost(s, s90), gwd_cost(s, s90)});
  }
  return {self <= 1e-9 && inv <= 1e-9 && square <= 1e-9,
          "max self " + fmt("%.2e", self) + ", max rigid-motion change " + fmt("%.2e", inv) +
              ", max square quarter-turn " + fmt("%.2e", square)};
}

Outcome io_golden() {
  const std::string dir = ROTMATCH_FIXTURE_DIR;
  const std::string boxes_text = detail::read_file(dir + "/boxes.json");
  const std::string empty_text = detail::read_file(dir + "/empty_boxes.json");
  const std::string heat_text = detail::read_file(dir + "/heatmap_2x2.csv");
  const bool boxes = format_boxes(parse_boxes(boxes_text)) == boxes_text;
  const bool empty = format_boxes(parse_boxes(empty_text)) == empty_text;
  const HeatmapGrid known{{10.0, 20.5}, 0.25, 2, 2, {-0.5, 0.1, 1.0 / 3.0, 2.0}};
  const bool heat = format_heatmap(parse_heatmap(heat_text)) == heat_text && format_heatmap(known) == heat_text &&
                    parse_heatmap(heat_text).values == known.values;
  return {boxes && empty && heat, std::string("box set ") + (boxes ? "exact" : "differs") + ", empty set " +
                                      (empty ? "exact" : "differs") + ", heatmap " + (heat ? "exact" : "differs")};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"hausdorff pseudometric", 5.0, hausdorff_pseudometric},
      {"square-like resolution", 0.0, square_like},
      {"boundary continuity", 0.0, boundary_continuity},
      {"hungarian vs brute force", 10.0, hungarian_vs_brute_force},
      {"rotated iou vs monte carlo", 60.0, rotated_iou_monte_carlo},
      {"matching region x-axis sweep", 0.0, axis_sweep_margins},
      {"adaptive denoising reduction", 0.0, aqd_reduction},
      {"adaptive denoising filtering", 0.0, aqd_filtering},
      {"kept fraction trend", 60.0, kept_fraction_trend},
      {"kld/gwd invariances", 0.0, gaussian_invariances},
      {"i/o golden files", 0.0, io_golden},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = o.pass;
    std::string timing = fmt("%.2f s", secs);
    if (c.budget_seconds > 0.0) {
      timing += fmt(" of %.0f s budget", c.budget_seconds);
      pass = pass && secs < c.budget_seconds;
    }
    std::printf("%s  %-30s %s [%s]\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    failures += !pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
