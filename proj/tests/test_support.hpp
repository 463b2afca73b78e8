#pragma once

// Random generators and independent oracles shared by the test suites. The
// oracles only use elementary geometry and never call the code under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "rotmatch/geometry.hpp"

namespace rotmatch::oracle {

inline constexpr double kPi = std::numbers::pi;

/// Random canonical box with center in [0, extent]^2 and sides in [min_side, max_side].
inline RotatedBox random_box(std::mt19937_64& rng, double extent = 100.0, double min_side = 2.0,
                             double max_side = 40.0) {
  std::uniform_real_distribution<double> pos(0.0, extent);
  std::uniform_real_distribution<double> side(min_side, max_side);
  std::uniform_real_distribution<double> ang(0.0, kPi);
  return canonicalize({pos(rng), pos(rng), side(rng), side(rng), ang(rng)});
}

inline RotatedBox random_square(std::mt19937_64& rng, double extent = 100.0) {
  std::uniform_real_distribution<double> pos(0.0, extent);
  std::uniform_real_distribution<double> side(2.0, 40.0);
  std::uniform_real_distribution<double> ang(0.0, kPi);
  const double s = side(rng);
  return canonicalize({pos(rng), pos(rng), s, s, ang(rng)});
}

/// Corner offsets with the rotation matrix applied directly.
inline std::vector<Point2> oracle_corners(const RotatedBox& b) {
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  std::vector<Point2> out;
  for (auto [lx, ly] : {std::pair{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}) {
    const double x = lx * b.w;
    const double y = ly * b.h;
    out.push_back({b.cx + c * x - s * y, b.cy + s * x + c * y});
  }
  return out;
}

inline bool inside(const RotatedBox& b, double x, double y) {
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const double dx = x - b.cx;
  const double dy = y - b.cy;
  return std::abs(c * dx + s * dy) <= 0.5 * b.w && std::abs(-s * dx + c * dy) <= 0.5 * b.h;
}

/// Distance from a point to the rectangle boundary.
inline double distance_to_boundary(const RotatedBox& b, Point2 p) {
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const double dx = p.x - b.cx;
  const double dy = p.y - b.cy;
  const double lx = std::abs(c * dx + s * dy);
  const double ly = std::abs(-s * dx + c * dy);
  const double ex = lx - 0.5 * b.w;
  const double ey = ly - 0.5 * b.h;
  if (ex > 0.0 || ey > 0.0) return std::hypot(std::max(ex, 0.0), std::max(ey, 0.0));
  return std::min(-ex, -ey);
}

struct MonteCarloIou {
  double iou = 0.0;
  double area_a = 0.0;
  double area_b = 0.0;
  double area_inter = 0.0;
};

/// Uniform sampling over the axis-aligned bounding region of both boxes.
inline MonteCarloIou monte_carlo_iou(const RotatedBox& a, const RotatedBox& b, std::size_t samples,
                                     std::uint64_t seed, unsigned threads = 0) {
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  for (const auto* box : {&a, &b}) {
    for (Point2 p : oracle_corners(*box)) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  struct Counts {
    std::size_t in_a = 0, in_b = 0, both = 0;
  };
  std::vector<Counts> counts(threads);
  std::vector<std::thread> pool;
  const std::size_t per = samples / threads;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      std::mt19937_64 rng(seed * 7919 + t);
      std::uniform_real_distribution<double> ux(xmin, xmax), uy(ymin, ymax);
      const std::size_t n = t + 1 == threads ? samples - per * (threads - 1) : per;
      Counts c;
      for (std::size_t i = 0; i < n; ++i) {
        const double x = ux(rng), y = uy(rng);
        const bool ia = inside(a, x, y);
        const bool ib = inside(b, x, y);
        c.in_a += ia;
        c.in_b += ib;
        c.both += ia && ib;
      }
      counts[t] = c;
    });
  }
  for (auto& th : pool) th.join();
  Counts total;
  for (const auto& c : counts) {
    total.in_a += c.in_a;
    total.in_b += c.in_b;
    total.both += c.both;
  }
  const double region = (xmax - xmin) * (ymax - ymin);
  const double scale = region / static_cast<double>(samples);
  MonteCarloIou out;
  out.area_a = scale * static_cast<double>(total.in_a);
  out.area_b = scale * static_cast<double>(total.in_b);
  out.area_inter = scale * static_cast<double>(total.both);
  const std::size_t uni = total.in_a + total.in_b - total.both;
  out.iou = uni == 0 ? 0.0 : static_cast<double>(total.both) / static_cast<double>(uni);
  return out;
}

/// IoU from uniform samples inside `a` (area known in closed form), each
/// tested for membership in `b`. Lower variance than bounding-region
/// sampling for the same count.
inline double monte_carlo_iou_in_a(const RotatedBox& a, const RotatedBox& b, std::size_t samples,
                                   std::uint64_t seed) {
  const double ca = std::cos(a.theta), sa = std::sin(a.theta);
  const double cb = std::cos(b.theta), sb = std::sin(b.theta);
  const double hbw = 0.5 * b.w, hbh = 0.5 * b.h;
  // splitmix64 stream; mt19937_64 dominates the runtime at 1e7 samples.
  std::uint64_t state = seed;
  auto rng = [&state] {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  constexpr double kUnit = 1.0 / 9007199254740992.0;  // 2^-53
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double u = (static_cast<double>(rng() >> 11) * kUnit - 0.5) * a.w;
    const double v = (static_cast<double>(rng() >> 11) * kUnit - 0.5) * a.h;
    const double dx = a.cx + ca * u - sa * v - b.cx;
    const double dy = a.cy + sa * u + ca * v - b.cy;
    hits += static_cast<std::size_t>((std::abs(cb * dx + sb * dy) <= hbw) & (std::abs(-sb * dx + cb * dy) <= hbh));
  }
  const double area_a = a.w * a.h, area_b = b.w * b.h;
  const double inter = area_a * static_cast<double>(hits) / static_cast<double>(samples);
  return inter / (area_a + area_b - inter);
}

/// max over both directions of min Euclidean distance, by a full pairwise table.
inline double brute_hausdorff(const std::vector<Point2>& xs, const std::vector<Point2>& ys) {
  std::vector<std::vector<double>> table(xs.size(), std::vector<double>(ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) table[i][j] = std::hypot(xs[i].x - ys[j].x, xs[i].y - ys[j].y);
  }
  double forward = 0.0, backward = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    forward = std::max(forward, *std::min_element(table[i].begin(), table[i].end()));
  }
  for (std::size_t j = 0; j < ys.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i) best = std::min(best, table[i][j]);
    backward = std::max(backward, best);
  }
  return std::max(forward, backward);
}

/// Directed set distance used to compare point sets regardless of order.
inline double set_distance(const std::vector<Point2>& xs, const std::vector<Point2>& ys) {
  return brute_hausdorff(xs, ys);
}

}  // namespace rotmatch::oracle
