// rotmatch command-line front end. Exit codes: 0 ok, 2 invalid input, 1 other failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rotmatch/rotmatch.hpp"

using namespace rotmatch;

namespace {

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    detail::write_file(out, text);
  }
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& text) {
  const auto x = text.find_first_of("xX");
  std::size_t used_r = 0, used_c = 0;
  long long r = -1, c = -1;
  if (x != std::string::npos) {
    try {
      r = std::stoll(text.substr(0, x), &used_r);
      c = std::stoll(text.substr(x + 1), &used_c);
    } catch (const std::exception&) {
      r = -1;
    }
  }
  if (x == std::string::npos || r < 1 || c < 1 || used_r != x || used_c != text.size() - x - 1) {
    throw InvalidArgument("--grid expects ROWSxCOLS with positive integers, got '" + text + "'");
  }
  return {static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
}

// Square cells spanning the image; a single row or column runs through the
// ground-truth center.
GridSpec image_grid(const Scenario& s, std::size_t rows, std::size_t cols) {
  double cell = std::numeric_limits<double>::infinity();
  if (cols > 1) cell = std::min(cell, s.image.width / static_cast<double>(cols - 1));
  if (rows > 1) cell = std::min(cell, s.image.height / static_cast<double>(rows - 1));
  if (!std::isfinite(cell)) cell = 1.0;
  GridSpec g;
  g.cell_size = cell;
  g.rows = rows;
  g.cols = cols;
  g.origin = {cols > 1 ? 0.0 : s.gt.box.cx, rows > 1 ? 0.0 : s.gt.box.cy};
  return g;
}

std::vector<Metric> parse_metrics(const std::string& list) {
  std::vector<Metric> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const std::string name = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!name.empty()) out.push_back(parse_metric(name));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw InvalidArgument("--metrics is empty");
  return out;
}

ClassId max_label(const std::vector<BoxRecord>& a, const std::vector<BoxRecord>& b) {
  ClassId m = 0;
  for (const auto* set : {&a, &b}) {
    for (const auto& r : *set) m = std::max(m, r.label);
  }
  return m;
}

const std::vector<std::string> kMetricNames{"l1", "xywh-l1", "hausdorff", "kld", "gwd", "riou", "griou"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotated-box matching costs, assignment and query-denoising analysis"};
  app.require_subcommand(1);

  // heatmap
  std::string hm_scenario, hm_cost = "hausdorff", hm_grid = "201x201", hm_out;
  int hm_points = 4;
  auto* heatmap = app.add_subcommand("heatmap", "Matching-region margin map for a moving candidate");
  heatmap->add_option("--scenario", hm_scenario, "Scenario JSON (default: built-in scenario)")->check(CLI::ExistingFile);
  heatmap->add_option("--cost", hm_cost, "Cost metric")->check(CLI::IsMember(kMetricNames));
  heatmap->add_option("--points", hm_points, "Boundary points for the Hausdorff cost (multiple of 4)");
  heatmap->add_option("--grid", hm_grid, "Sample grid as ROWSxCOLS");
  heatmap->add_option("--out", hm_out, "Output CSV (default: stdout)");

  // sweep
  std::string sw_family = "angle", sw_metrics = "l1,hausdorff,kld", sw_out;
  std::size_t sw_samples = 181;
  int sw_points = 4;
  auto* sweep = app.add_subcommand("sweep", "Tabulate metrics over a one-parameter box family");
  sweep->add_option("--family", sw_family, "Family")->check(CLI::IsMember({"angle", "center", "aspect"}));
  sweep->add_option("--metrics", sw_metrics, "Comma-separated metrics");
  sweep->add_option("--samples", sw_samples, "Parameter samples")->check(CLI::Range(2, 1000000));
  sweep->add_option("--points", sw_points, "Boundary points for the Hausdorff cost");
  sweep->add_option("--out", sw_out, "Output CSV (default: stdout)");

  // match
  std::string m_gts, m_preds, m_cost = "hausdorff", m_iou = "kld";
  int m_points = 4;
  double m_width = 1024.0, m_height = 1024.0;
  auto* match = app.add_subcommand("match", "Optimal one-to-one assignment of predictions to ground truths");
  match->add_option("--gts", m_gts, "Ground-truth box set JSON")->required()->check(CLI::ExistingFile);
  match->add_option("--preds", m_preds, "Prediction box set JSON")->required()->check(CLI::ExistingFile);
  match->add_option("--cost", m_cost, "Localisation term")->check(CLI::IsMember({"l1", "xywh-l1", "hausdorff"}));
  match->add_option("--iou", m_iou, "IoU-style term")->check(CLI::IsMember({"kld", "gwd", "riou", "griou"}));
  match->add_option("--points", m_points, "Boundary points for the Hausdorff cost");
  match->add_option("--image-width", m_width, "Image width for normalisation");
  match->add_option("--image-height", m_height, "Image height for normalisation");

  // nms
  std::string n_boxes, n_out;
  double n_iou = 0.5, n_score = 0.0;
  auto* nms = app.add_subcommand("nms", "Rotated non-maximum suppression");
  nms->add_option("--boxes", n_boxes, "Scored box set JSON")->required()->check(CLI::ExistingFile);
  nms->add_option("--iou", n_iou, "Suppression IoU threshold")->check(CLI::Range(0.0, 1.0));
  nms->add_option("--score", n_score, "Drop boxes scoring below this first")->check(CLI::Range(0.0, 1.0));
  nms->add_option("--out", n_out, "Output box set JSON (default: stdout)");

  // duplicates
  std::string d_preds;
  double d_score = 0.3, d_iou = 0.5;
  auto* dups = app.add_subcommand("duplicates", "Class-wise duplicate prediction report");
  dups->add_option("--preds", d_preds, "Scored box set JSON")->required()->check(CLI::ExistingFile);
  dups->add_option("--score", d_score, "Minimum score of a counted prediction");
  dups->add_option("--iou", d_iou, "Overlap threshold");

  // aqd-sim
  std::size_t a_steps = 100, a_gts = 16;
  double a_noise = 0.4, a_ratio = 0.5;
  std::uint64_t a_seed = 0;
  int a_classes = 3;
  std::string a_out;
  auto* aqd = app.add_subcommand("aqd-sim", "Simulate the kept fraction of denoising queries over training");
  aqd->add_option("--steps", a_steps, "Training steps")->check(CLI::Range(2, 10000000));
  aqd->add_option("--noise-level", a_noise, "Positive noise scale in (0, 1]");
  aqd->add_option("--seed", a_seed, "Random seed");
  aqd->add_option("--gts", a_gts, "Ground truths per image")->check(CLI::Range(1, 100000));
  aqd->add_option("--classes", a_classes, "Number of classes")->check(CLI::Range(1, 100000));
  aqd->add_option("--refinement-ratio", a_ratio, "Query refinement accuracy relative to prediction accuracy")
      ->check(CLI::Range(0.0, 1.0));
  aqd->add_option("--out", a_out, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*heatmap) {
      Scenario s = hm_scenario.empty() ? default_scenario(hm_cost, hm_points) : load_scenario(hm_scenario);
      s.cost = single_metric_config(hm_cost, s.image, hm_points);
      const auto [rows, cols] = parse_grid(hm_grid);
      emit(format_heatmap(matching_region_heatmap(s, image_grid(s, rows, cols))), hm_out);
    } else if (*sweep) {
      const RotatedBox ref{512.0, 512.0, 100.0, 40.0, 0.0};
      SweepFamily family = sw_family == "angle"    ? angle_family(ref, sw_samples)
                           : sw_family == "center" ? center_family(ref, 200.0, sw_samples)
                                                   : aspect_family(100.0, 0.1, sw_samples);
      const auto metrics = parse_metrics(sw_metrics);
      emit(format_sweep(run_sweep(family, metrics, {{1024.0, 1024.0}, sw_points})), sw_out);
    } else if (*match) {
      const auto gts = load_boxes(m_gts);
      const auto preds = load_boxes(m_preds);
      if (gts.empty()) throw InvalidArgument("ground-truth set is empty");
      if (preds.size() < gts.size()) throw InfeasibleAssignment("fewer predictions than ground truths");
      const std::size_t classes = static_cast<std::size_t>(max_label(gts, preds)) + 1;
      CostConfig cfg = default_matching_config({m_width, m_height});
      cfg.loc = {m_cost == "l1" ? LocCostKind::l1_5d : m_cost == "xywh-l1" ? LocCostKind::xywh_l1 : LocCostKind::hausdorff,
                 m_points};
      cfg.iou = m_iou == "kld" ? IouCostKind::kld : m_iou == "gwd" ? IouCostKind::gwd
                : m_iou == "riou"                  ? IouCostKind::riou
                                                   : IouCostKind::griou;
      std::vector<GroundTruth> g;
      for (const auto& r : gts) g.push_back({canonicalize(r.box), r.label});
      std::vector<Prediction> p;
      for (const auto& r : preds) {
        p.push_back({canonicalize(r.box), ClassScores::one_hot(classes, r.label, r.score.value_or(1.0))});
      }
      emit(format_assignment(hungarian(build_cost_matrix(g, p, cfg))), "");
    } else if (*nms) {
      const auto records = load_boxes(n_boxes);
      std::vector<BoxRecord> pool;
      for (const auto& r : records) {
        if (r.score.value_or(1.0) >= n_score) pool.push_back(r);
      }
      const auto scored = to_scored(pool);
      std::vector<BoxRecord> kept;
      for (std::size_t i : rotated_nms(scored, n_iou)) kept.push_back(pool[i]);
      emit(format_boxes(kept), n_out);
    } else if (*dups) {
      emit(format_duplicates(duplicate_report(to_scored(load_boxes(d_preds)), d_score, d_iou)), "");
    } else if (*aqd) {
      TrajectoryConfig cfg;
      cfg.steps = a_steps;
      cfg.noise.noise_level = a_noise;
      cfg.noise.num_classes = a_classes;
      cfg.refinement_ratio = a_ratio;
      cfg.seed = a_seed;
      const auto gts = grid_ground_truths(a_gts, 1024.0, a_classes, a_seed);
      emit(format_trajectory(simulate_training_trajectory(gts, cfg)), a_out);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
