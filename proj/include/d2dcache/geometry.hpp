#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace d2dcache {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct Point
{
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

/// Reduces a coordinate into [0, side).
inline double wrap_coordinate(double v, double side) noexcept
{
  double r = std::fmod(v, side);
  if (r < 0.0) r += side;
  if (r >= side) r -= side;
  return r;
}

/// Distance on the square [0, side)^2 with opposite edges identified: the
/// minimum Euclidean distance over shifts u, v in {-side, 0, side}. The
/// minimization separates per axis.
inline double wrap_distance(Point a, Point b, double side) noexcept
{
  auto axis = [side](double d) {
    d = std::abs(d);
    return std::min({d, std::abs(d - side), d + side});
  };
  return std::hypot(axis(a.x - b.x), axis(a.y - b.y));
}

/// Per-axis circular mean of points on the torus of the given side.
inline Point torus_mean(std::span<const Point> pts, double side) noexcept
{
  double cx = 0, sx = 0, cy = 0, sy = 0;
  const double k = 2.0 * std::numbers::pi / side;
  for (const auto& p : pts) {
    cx += std::cos(k * p.x);
    sx += std::sin(k * p.x);
    cy += std::cos(k * p.y);
    sy += std::sin(k * p.y);
  }
  auto back = [&](double s, double c, double fallback) {
    if (std::abs(s) < 1e-12 && std::abs(c) < 1e-12) return fallback;
    return wrap_coordinate(std::atan2(s, c) / k, side);
  };
  const Point first = pts.empty() ? Point{} : pts.front();
  return {back(sx, cx, first.x), back(sy, cy, first.y)};
}

/// UT positions per slot, row-major [slot][ut], on the torus of side `area_side`.
struct Trace
{
  int slots = 0;
  int uts = 0;
  double area_side = 0.0;
  /// Key for per-link shadowing draws (only used when shadowing is enabled).
  std::uint64_t shadow_seed = 0;
  std::vector<Point> positions;

  Trace() = default;
  Trace(int slot_count, int ut_count, double side, std::uint64_t shadow = 0)
    : slots(slot_count), uts(ut_count), area_side(side), shadow_seed(shadow),
      positions(static_cast<std::size_t>(slot_count) * static_cast<std::size_t>(ut_count))
  {}

  [[nodiscard]] Point& at(int slot, int ut)
  {
    return positions[static_cast<std::size_t>(slot) * uts + ut];
  }
  [[nodiscard]] const Point& at(int slot, int ut) const
  {
    return positions[static_cast<std::size_t>(slot) * uts + ut];
  }
  [[nodiscard]] double distance(int slot, int a, int b) const
  {
    return wrap_distance(at(slot, a), at(slot, b), area_side);
  }
  /// All positions of one UT across slots.
  [[nodiscard]] std::vector<Point> path(int ut) const
  {
    std::vector<Point> out;
    out.reserve(slots);
    for (int t = 0; t < slots; ++t) out.push_back(at(t, ut));
    return out;
  }
};

}  // namespace d2dcache
