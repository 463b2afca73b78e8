#pragma once

// Text formats: box sets (JSON array of records), heatmaps and tables (CSV).
// Reals are written with 17 significant digits so they round-trip exactly.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rotmatch/analysis.hpp"
#include "rotmatch/denoising.hpp"
#include "rotmatch/errors.hpp"
#include "rotmatch/geometry.hpp"
#include "rotmatch/matching.hpp"

namespace rotmatch {

struct BoxRecord {
  RotatedBox box;
  ClassId label = 0;
  std::optional<double> score;

  friend bool operator==(const BoxRecord&, const BoxRecord&) = default;
};

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

inline nlohmann::json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

inline double real_field(const nlohmann::json& obj, const char* name, const std::string& where) {
  const auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + name + "'");
  if (!it->is_number()) throw ParseError(where + ": field '" + name + "' is not a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ValidationError(where + ": field '" + name + "' is not finite");
  return v;
}

inline RotatedBox box_fields(const nlohmann::json& obj, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  RotatedBox b{real_field(obj, "cx", where), real_field(obj, "cy", where), real_field(obj, "w", where),
               real_field(obj, "h", where), real_field(obj, "theta", where)};
  if (!(b.w > 0.0) || !(b.h > 0.0)) throw ValidationError(where + ": fields 'w' and 'h' must be positive");
  return b;
}

inline ClassId class_field(const nlohmann::json& obj, const std::string& where) {
  const auto it = obj.find("class");
  if (it == obj.end()) throw ParseError(where + ": missing field 'class'");
  if (!it->is_number_integer()) throw ParseError(where + ": field 'class' is not an integer");
  const auto v = it->get<long long>();
  if (v < 0 || v > 1'000'000) throw ValidationError(where + ": field 'class' out of range");
  return static_cast<ClassId>(v);
}

inline ClassScores scores_field(const nlohmann::json& obj, const std::string& where) {
  const auto it = obj.find("scores");
  if (it == obj.end() || !it->is_array() || it->empty()) {
    throw ParseError(where + ": field 'scores' must be a non-empty array");
  }
  ClassScores s;
  for (const auto& v : *it) {
    if (!v.is_number()) throw ParseError(where + ": field 'scores' holds a non-number");
    const double p = v.get<double>();
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) throw ValidationError(where + ": score outside [0, 1]");
    s.probabilities.push_back(p);
  }
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Box sets

inline std::vector<BoxRecord> parse_boxes(const std::string& text) {
  const auto doc = detail::parse_json(text, "box set");
  if (!doc.is_array()) throw ParseError("box set: top level must be an array of records");
  std::vector<BoxRecord> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "box set record " + std::to_string(i);
    const auto& rec = doc[i];
    BoxRecord r;
    r.box = detail::box_fields(rec, where);
    r.label = detail::class_field(rec, where);
    if (rec.contains("score")) {
      const double s = detail::real_field(rec, "score", where);
      if (s < 0.0 || s > 1.0) throw ValidationError(where + ": field 'score' outside [0, 1]");
      r.score = s;
    }
    out.push_back(r);
  }
  return out;
}

inline std::string format_boxes(const std::vector<BoxRecord>& records) {
  if (records.empty()) return "[]\n";
  std::string out = "[\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const BoxRecord& r = records[i];
    for (double v : {r.box.cx, r.box.cy, r.box.w, r.box.h, r.box.theta}) {
      if (!std::isfinite(v)) throw ValidationError("cannot serialize a non-finite box field");
    }
    out += "  {\"cx\": " + format_real(r.box.cx) + ", \"cy\": " + format_real(r.box.cy) +
           ", \"w\": " + format_real(r.box.w) + ", \"h\": " + format_real(r.box.h) +
           ", \"theta\": " + format_real(r.box.theta) + ", \"class\": " + std::to_string(r.label);
    if (r.score) out += ", \"score\": " + format_real(*r.score);
    out += i + 1 < records.size() ? "},\n" : "}\n";
  }
  out += "]\n";
  return out;
}

inline std::vector<BoxRecord> load_boxes(const std::string& path) { return parse_boxes(detail::read_file(path)); }

inline void save_boxes(const std::vector<BoxRecord>& records, const std::string& path) {
  detail::write_file(path, format_boxes(records));
}

inline std::vector<ScoredBox> to_scored(const std::vector<BoxRecord>& records) {
  std::vector<ScoredBox> out;
  for (const auto& r : records) out.push_back({canonicalize(r.box), r.score.value_or(1.0), r.label});
  return out;
}

// ---------------------------------------------------------------------------
// Heatmaps

inline std::string format_heatmap(const HeatmapGrid& grid) {
  if (grid.values.size() != grid.rows * grid.cols) throw InvalidArgument("heatmap value count does not match shape");
  std::string out = "# " + format_real(grid.origin.x) + "," + format_real(grid.origin.y) + "," +
                    format_real(grid.cell_size) + "," + std::to_string(grid.rows) + "," +
                    std::to_string(grid.cols) + "\n";
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      if (c) out += ',';
      out += format_real(grid.at(r, c));
    }
    out += '\n';
  }
  return out;
}

inline HeatmapGrid parse_heatmap(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw ParseError("heatmap line 1: expected '# ' header");
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, ',')) parts.push_back(cur);
    return parts;
  };
  auto to_real = [&](const std::string& s, const std::string& field) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) {
      throw ParseError("heatmap line " + std::to_string(line_no) + ": field '" + field + "' is not a number");
    }
    if (!std::isfinite(v)) {
      throw ValidationError("heatmap line " + std::to_string(line_no) + ": field '" + field + "' is not finite");
    }
    return v;
  };
  const auto header = split(line.substr(2));
  if (header.size() != 5) throw ParseError("heatmap line 1: expected 5 header fields");
  HeatmapGrid g;
  g.origin = {to_real(header[0], "origin_x"), to_real(header[1], "origin_y")};
  g.cell_size = to_real(header[2], "cell_size");
  const double rows = to_real(header[3], "rows");
  const double cols = to_real(header[4], "cols");
  if (rows < 0 || cols < 0 || rows != std::floor(rows) || cols != std::floor(cols)) {
    throw ParseError("heatmap line 1: rows/cols must be non-negative integers");
  }
  g.rows = static_cast<std::size_t>(rows);
  g.cols = static_cast<std::size_t>(cols);
  for (std::size_t r = 0; r < g.rows; ++r) {
    ++line_no;
    if (!std::getline(in, line)) throw ParseError("heatmap line " + std::to_string(line_no) + ": missing row");
    const auto parts = split(line);
    if (parts.size() != g.cols) {
      throw ParseError("heatmap line " + std::to_string(line_no) + ": expected " + std::to_string(g.cols) + " values");
    }
    for (std::size_t c = 0; c < g.cols; ++c) g.values.push_back(to_real(parts[c], "col " + std::to_string(c)));
  }
  return g;
}

inline void save_heatmap(const HeatmapGrid& grid, const std::string& path) {
  detail::write_file(path, format_heatmap(grid));
}

inline HeatmapGrid load_heatmap(const std::string& path) { return parse_heatmap(detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Scenarios

/// JSON object with "image" {width, height}, "gt" {box fields, class},
/// "fixed" {box fields, scores} and "moving" {w, h, theta, scores}. The cost
/// configuration is chosen separately.
inline Scenario parse_scenario(const std::string& text) {
  const auto doc = detail::parse_json(text, "scenario");
  if (!doc.is_object()) throw ParseError("scenario: top level must be an object");
  auto member = [&](const char* name) -> const nlohmann::json& {
    const auto it = doc.find(name);
    if (it == doc.end() || !it->is_object()) throw ParseError(std::string("scenario: missing object '") + name + "'");
    return *it;
  };
  Scenario s;
  const auto& image = member("image");
  s.image = {detail::real_field(image, "width", "scenario image"), detail::real_field(image, "height", "scenario image")};
  validate(s.image);
  const auto& gt = member("gt");
  s.gt = {detail::box_fields(gt, "scenario gt"), detail::class_field(gt, "scenario gt")};
  const auto& fixed = member("fixed");
  s.fixed = {detail::box_fields(fixed, "scenario fixed"), detail::scores_field(fixed, "scenario fixed")};
  const auto& moving = member("moving");
  s.moving = {detail::real_field(moving, "w", "scenario moving"), detail::real_field(moving, "h", "scenario moving"),
              detail::real_field(moving, "theta", "scenario moving"), detail::scores_field(moving, "scenario moving")};
  if (!(s.moving.w > 0.0) || !(s.moving.h > 0.0)) throw ValidationError("scenario moving: sides must be positive");
  if (s.fixed.scores.num_classes() <= static_cast<std::size_t>(s.gt.label) ||
      s.moving.scores.num_classes() <= static_cast<std::size_t>(s.gt.label)) {
    throw ValidationError("scenario: gt class has no score entry");
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario(detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Tables

inline std::string format_sweep(const SweepTable& t) {
  std::string out = t.parameter_name;
  for (Metric m : t.metrics) out += "," + std::string(to_string(m));
  out += '\n';
  for (std::size_t i = 0; i < t.parameters.size(); ++i) {
    out += format_real(t.parameters[i]);
    for (double v : t.rows[i]) out += "," + format_real(v);
    out += '\n';
  }
  return out;
}

inline std::string format_trajectory(const std::vector<TrajectoryPoint>& points) {
  std::string out = "step,accuracy,kept_fraction,mean_prediction_iou\n";
  for (const auto& p : points) {
    out += std::to_string(p.step) + "," + format_real(p.accuracy) + "," + format_real(p.kept_fraction) + "," +
           format_real(p.mean_prediction_iou) + "\n";
  }
  return out;
}

inline std::string format_assignment(const Assignment& a) {
  std::string out = "gt,pred\n";
  for (const auto& p : a.pairs) out += std::to_string(p.row) + "," + std::to_string(p.col) + "\n";
  return out;
}

inline std::string format_duplicates(const DuplicateReport& r) {
  std::string out = "class,predictions,duplicates\n";
  for (const auto& [label, count] : r.predictions_per_class) {
    const auto it = r.duplicates_per_class.find(label);
    out += std::to_string(label) + "," + std::to_string(count) + "," +
           std::to_string(it == r.duplicates_per_class.end() ? 0 : it->second) + "\n";
  }
  out += "all," + std::to_string(r.total) + "," + std::to_string(r.duplicates) + "\n";
  out += "# rate," + format_real(r.rate) + "\n";
  return out;
}

}  // namespace rotmatch
