#pragma once

// Rotated-box geometry: canonical (long edge) representation, boundary
// sampling, convex polygon clipping, rotated IoU / GRIoU and rotated NMS.
//
// Angles are in radians and rotate counter-clockwise in a right-handed
// (x right, y up) frame. In image coordinates (y down) the visual sense of
// rotation flips, but every quantity computed here is frame independent.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "rotmatch/errors.hpp"

namespace rotmatch {

using ClassId = std::int32_t;

/// Tolerance (pixels) for collinearity and sliver polygons.
inline constexpr double kGeomEps = 1e-9;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend constexpr bool operator==(Point2, Point2) = default;
};

inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Oriented box: center, side lengths and angle.
struct RotatedBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 1.0;
  double h = 1.0;
  double theta = 0.0;

  double area() const { return w * h; }
  Point2 center() const { return {cx, cy}; }

  friend constexpr bool operator==(const RotatedBox&, const RotatedBox&) = default;
};

struct ImageSize {
  double width = 1.0;
  double height = 1.0;
};

/// Box divided component-wise by (I_w, I_h, I_w, I_h, angle_divisor).
struct NormalizedBox5D {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  double theta = 0.0;
  double angle_divisor = std::numbers::pi;
};

/// Counter-clockwise convex polygon without repeated vertices. Empty means
/// zero area.
struct ConvexPolygon {
  std::vector<Point2> vertices;

  bool empty() const { return vertices.empty(); }
  std::size_t size() const { return vertices.size(); }
};

inline double polygon_area(std::span<const Point2> pts) {
  if (pts.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0, n = pts.size(); i < n; ++i) {
    twice += cross(pts[i], pts[(i + 1) % n]);
  }
  return 0.5 * twice;
}

inline double polygon_area(const ConvexPolygon& poly) { return polygon_area(poly.vertices); }

inline void validate(const RotatedBox& box) {
  if (!std::isfinite(box.cx) || !std::isfinite(box.cy) || !std::isfinite(box.w) ||
      !std::isfinite(box.h) || !std::isfinite(box.theta)) {
    throw InvalidBox("rotated box has a non-finite field");
  }
  if (!(box.w > 0.0) || !(box.h > 0.0)) {
    throw InvalidBox("rotated box side lengths must be positive (w=" + std::to_string(box.w) +
                     ", h=" + std::to_string(box.h) + ")");
  }
}

inline void validate(const ImageSize& size) {
  if (!std::isfinite(size.width) || !std::isfinite(size.height) || !(size.width > 0.0) ||
      !(size.height > 0.0)) {
    throw InvalidArgument("image size must be positive and finite");
  }
}

/// Wraps an angle into [0, pi).
inline double wrap_half_turn(double theta) {
  constexpr double pi = std::numbers::pi;
  double t = std::fmod(theta, pi);
  if (t < 0.0) t += pi;
  // t + pi can round up to exactly pi for tiny negative inputs.
  if (t >= pi) t = 0.0;
  return t;
}

/// Long edge definition: w >= h and theta in [0, pi). The returned box covers
/// the same point set.
inline RotatedBox canonicalize(const RotatedBox& box) {
  validate(box);
  RotatedBox out = box;
  if (out.w < out.h) {
    std::swap(out.w, out.h);
    out.theta += std::numbers::pi / 2.0;
  }
  out.theta = wrap_half_turn(out.theta);
  return out;
}

inline bool is_canonical(const RotatedBox& box) {
  return box.w >= box.h && box.theta >= 0.0 && box.theta < std::numbers::pi;
}

/// Corners in CCW order, starting from the local (-w/2, -h/2) corner.
inline std::array<Point2, 4> corners(const RotatedBox& box) {
  const double c = std::cos(box.theta);
  const double s = std::sin(box.theta);
  const double hw = 0.5 * box.w;
  const double hh = 0.5 * box.h;
  const std::array<Point2, 4> local{{{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}}};
  std::array<Point2, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {box.cx + local[i].x * c - local[i].y * s, box.cy + local[i].x * s + local[i].y * c};
  }
  return out;
}

/// Samples `count` points on the box boundary: count/4 points per edge at
/// parameters j/k (j = 0..k-1) from each corner toward the next, CCW.
/// count = 4 gives the corners, count = 8 adds the edge midpoints.
inline std::vector<Point2> boundary_points(const RotatedBox& box, int count) {
  validate(box);
  if (count <= 0 || count % 4 != 0) {
    throw InvalidArgument("boundary point count must be a positive multiple of 4, got " +
                          std::to_string(count));
  }
  const auto cs = corners(box);
  const int per_edge = count / 4;
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (std::size_t e = 0; e < 4; ++e) {
    const Point2 from = cs[e];
    const Point2 to = cs[(e + 1) % 4];
    for (int j = 0; j < per_edge; ++j) {
      const double t = static_cast<double>(j) / per_edge;
      pts.push_back({from.x + t * (to.x - from.x), from.y + t * (to.y - from.y)});
    }
  }
  return pts;
}

inline ConvexPolygon to_polygon(const RotatedBox& box) {
  validate(box);
  const auto cs = corners(box);
  return ConvexPolygon{{cs.begin(), cs.end()}};
}

namespace detail {

// Drops repeated and collinear vertices; returns empty for slivers.
inline ConvexPolygon clean_polygon(std::vector<Point2> pts) {
  std::vector<Point2> dedup;
  dedup.reserve(pts.size());
  for (const Point2& p : pts) {
    if (dedup.empty() || distance(dedup.back(), p) > kGeomEps) dedup.push_back(p);
  }
  while (dedup.size() > 1 && distance(dedup.front(), dedup.back()) <= kGeomEps) dedup.pop_back();

  bool changed = true;
  while (changed && dedup.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < dedup.size() && dedup.size() >= 3; ++i) {
      const std::size_t n = dedup.size();
      const Point2 prev = dedup[(i + n - 1) % n];
      const Point2 cur = dedup[i];
      const Point2 next = dedup[(i + 1) % n];
      const double base = distance(prev, next);
      // Distance from cur to the chord prev-next.
      const double height = base > 0.0 ? std::abs(cross(cur - prev, next - prev)) / base : 0.0;
      if (height <= kGeomEps) {
        dedup.erase(dedup.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  if (dedup.size() < 3 || polygon_area(dedup) < kGeomEps) return {};
  return ConvexPolygon{std::move(dedup)};
}

// Keeps the part of `subject` left of (or on) the directed line a->b.
inline std::vector<Point2> clip_half_plane(const std::vector<Point2>& subject, Point2 a, Point2 b) {
  std::vector<Point2> out;
  if (subject.empty()) return out;
  const Point2 dir = b - a;
  const double len = std::hypot(dir.x, dir.y);
  auto side = [&](Point2 p) { return cross(dir, p - a) / len; };
  for (std::size_t i = 0, n = subject.size(); i < n; ++i) {
    const Point2 cur = subject[i];
    const Point2 next = subject[(i + 1) % n];
    const double sc = side(cur);
    const double sn = side(next);
    const bool cur_in = sc >= -kGeomEps;
    const bool next_in = sn >= -kGeomEps;
    if (cur_in) out.push_back(cur);
    if (cur_in != next_in) {
      const double t = sc / (sc - sn);
      out.push_back({cur.x + t * (next.x - cur.x), cur.y + t * (next.y - cur.y)});
    }
  }
  return out;
}

}  // namespace detail

/// Intersection of two convex polygons by successive half-plane clipping.
inline ConvexPolygon polygon_intersection(const ConvexPolygon& a, const ConvexPolygon& b) {
  if (a.size() < 3 || b.size() < 3) return {};
  std::vector<Point2> result = a.vertices;
  for (std::size_t i = 0, n = b.size(); i < n && !result.empty(); ++i) {
    result = detail::clip_half_plane(result, b.vertices[i], b.vertices[(i + 1) % n]);
  }
  return detail::clean_polygon(std::move(result));
}

/// Convex hull (Andrew's monotone chain); collinear points are dropped.
inline ConvexPolygon convex_hull(std::span<const Point2> points) {
  if (points.size() < 3) throw DegenerateHull("convex hull needs at least 3 points");
  std::vector<Point2> pts(points.begin(), points.end());
  for (const Point2& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidArgument("non-finite hull point");
  }
  std::sort(pts.begin(), pts.end(), [](Point2 l, Point2 r) { return l.x < r.x || (l.x == r.x && l.y < r.y); });
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  auto turn = [](Point2 o, Point2 a, Point2 b) { return cross(a - o, b - o); };
  for (const Point2& p : pts) {
    while (k >= 2 && turn(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && turn(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 0 ? k - 1 : 0);
  ConvexPolygon cleaned = detail::clean_polygon(std::move(hull));
  if (cleaned.empty()) throw DegenerateHull("points are collinear; hull has no area");
  return cleaned;
}

namespace detail {

inline bool box_less(const RotatedBox& l, const RotatedBox& r) {
  return std::tie(l.cx, l.cy, l.w, l.h, l.theta) < std::tie(r.cx, r.cy, r.w, r.h, r.theta);
}

inline double intersection_area(const RotatedBox& a, const RotatedBox& b) {
  // Fixed argument order makes the result exactly symmetric.
  const bool swap = box_less(b, a);
  const RotatedBox& first = swap ? b : a;
  const RotatedBox& second = swap ? a : b;
  const double reach = 0.5 * (std::hypot(first.w, first.h) + std::hypot(second.w, second.h));
  if (distance(first.center(), second.center()) >= reach) return 0.0;
  return polygon_area(polygon_intersection(to_polygon(first), to_polygon(second)));
}

}  // namespace detail

/// Rotated IoU via exact polygon intersection.
inline double rotated_iou(const RotatedBox& a, const RotatedBox& b) {
  const RotatedBox ca = canonicalize(a);
  const RotatedBox cb = canonicalize(b);
  if (ca == cb) return 1.0;
  const double inter = detail::intersection_area(ca, cb);
  const double uni = ca.area() + cb.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Generalized rotated IoU; the enclosing region is the convex hull of both
/// corner sets.
inline double griou(const RotatedBox& a, const RotatedBox& b) {
  const RotatedBox ca = canonicalize(a);
  const RotatedBox cb = canonicalize(b);
  if (ca == cb) return 1.0;
  const double inter = detail::intersection_area(ca, cb);
  const double uni = ca.area() + cb.area() - inter;
  const auto corners_a = corners(detail::box_less(cb, ca) ? cb : ca);
  const auto corners_b = corners(detail::box_less(cb, ca) ? ca : cb);
  std::array<Point2, 8> all{};
  std::copy(corners_a.begin(), corners_a.end(), all.begin());
  std::copy(corners_b.begin(), corners_b.end(), all.begin() + 4);
  const double enclosing = polygon_area(convex_hull(all));
  const double iou = std::clamp(inter / uni, 0.0, 1.0);
  return iou - std::max(0.0, enclosing - uni) / enclosing;
}

struct ScoredBox {
  RotatedBox box;
  double score = 0.0;
  ClassId label = 0;
};

/// Greedy per-class NMS. Candidates are visited by (score desc, index asc);
/// a candidate is dropped if its IoU with a kept same-class box exceeds
/// `iou_threshold`. Returns kept indices in visiting order.
inline std::vector<std::size_t> rotated_nms(std::span<const ScoredBox> boxes, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw InvalidArgument("NMS IoU threshold must lie in (0, 1]");
  }
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return boxes[l].score > boxes[r].score; });
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    bool suppressed = false;
    for (std::size_t k : kept) {
      if (boxes[k].label == boxes[idx].label && rotated_iou(boxes[k].box, boxes[idx].box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(idx);
  }
  return kept;
}

inline NormalizedBox5D normalize_box(const RotatedBox& box, const ImageSize& size, double angle_divisor) {
  validate(box);
  validate(size);
  if (!(angle_divisor > 0.0) || !std::isfinite(angle_divisor)) {
    throw InvalidArgument("angle divisor must be positive");
  }
  return {box.cx / size.width, box.cy / size.height, box.w / size.width, box.h / size.height,
          box.theta / angle_divisor, angle_divisor};
}

/// Rigid motion of a box: rotate about `pivot` by `angle`, then translate.
inline RotatedBox transform_box(const RotatedBox& box, Point2 pivot, double angle, Point2 offset) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const Point2 d = box.center() - pivot;
  RotatedBox out = box;
  out.cx = pivot.x + d.x * c - d.y * s + offset.x;
  out.cy = pivot.y + d.x * s + d.y * c + offset.y;
  out.theta = box.theta + angle;
  return canonicalize(out);
}

}  // namespace rotmatch
