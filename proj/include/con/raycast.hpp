#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "con/grid.hpp"

namespace con {

/// Arc field of view with a shorter ideal-detection range.
struct FovModel {
  double view_radius = 3.2;
  double view_angle = 40.0 * kPi / 180.0;
  double detection_radius = 1.6;

  void validate() const;
  /// Same arc, radius cut to the detection range.
  FovModel detection_view() const {
    FovModel f = *this;
    f.view_radius = detection_radius;
    return f;
  }
  friend bool operator==(const FovModel&, const FovModel&) = default;
};

namespace detail {

/// Ray fan for one view. Rays are evenly spaced; the angular step never
/// exceeds resolution / radius, so no cell whose center lies inside the arc
/// falls between two rays.
struct RayFan {
  double start = 0.0;
  double step = 0.0;
  int count = 0;
  bool full_circle = false;

  RayFan(const GridSpec& spec, const Pose2D& pose, const FovModel& fov);
  double angle(int k) const { return start + k * step; }
};

/// Whether a cell center lies within the view radius and arc. Built once per
/// view; the angular test compares cosines instead of calling atan2.
class ArcTest {
 public:
  ArcTest(const GridSpec& spec, const Pose2D& pose, const FovModel& fov);
  bool operator()(CellIndex c) const {
    const double dx = spec_.origin.x + (c.ix + 0.5) * spec_.resolution - px_;
    const double dy = spec_.origin.y + (c.iy + 0.5) * spec_.resolution - py_;
    const double d2 = dx * dx + dy * dy;
    if (d2 > r2_) return false;
    if (full_ || d2 < 1e-24) return true;
    return dx * ux_ + dy * uy_ >= cos_half_ * std::sqrt(d2);
  }

 private:
  GridSpec spec_;
  double px_, py_, ux_, uy_, r2_, cos_half_;
  bool full_;
};

bool center_in_arc(const GridSpec& spec, const Pose2D& pose, const FovModel& fov,
                   CellIndex c);

/// Grid traversal (Amanatides-Woo) from the pose along `angle` up to
/// `max_len` meters. `visit(cell)` returns false to stop the ray.
template <class Visit>
void traverse_ray(const GridSpec& spec, const Pose2D& pose, double angle,
                  double max_len, Visit&& visit) {
  const double gx = (pose.x - spec.origin.x) / spec.resolution;
  const double gy = (pose.y - spec.origin.y) / spec.resolution;
  int ix = static_cast<int>(std::floor(gx));
  int iy = static_cast<int>(std::floor(gy));
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int step_x = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
  const int step_y = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);
  double t_max_x = dx > 0.0 ? (ix + 1 - gx) / dx : (dx < 0.0 ? (gx - ix) / -dx : kInf);
  double t_max_y = dy > 0.0 ? (iy + 1 - gy) / dy : (dy < 0.0 ? (gy - iy) / -dy : kInf);
  const double t_delta_x = step_x != 0 ? 1.0 / std::abs(dx) : kInf;
  const double t_delta_y = step_y != 0 ? 1.0 / std::abs(dy) : kInf;
  const double t_limit = max_len / spec.resolution;
  while (true) {
    if (!visit(CellIndex{ix, iy})) return;
    if (t_max_x < t_max_y) {
      if (t_max_x > t_limit) return;
      ix += step_x;
      t_max_x += t_delta_x;
    } else {
      if (t_max_y > t_limit) return;
      iy += step_y;
      t_max_y += t_delta_y;
    }
  }
}

/// Per-thread visit stamps so each cell is classified once per view.
class StampBuffer {
 public:
  void begin(std::size_t cells) {
    if (stamps_.size() < cells) stamps_.assign(cells, 0);
    if (++generation_ == 0) {
      std::fill(stamps_.begin(), stamps_.end(), 0);
      generation_ = 1;
    }
  }
  /// True the first time a cell is seen in the current generation.
  bool mark(std::size_t i) {
    if (stamps_[i] == generation_) return false;
    stamps_[i] = generation_;
    return true;
  }

 private:
  std::vector<std::uint32_t> stamps_;
  std::uint32_t generation_ = 0;
};

StampBuffer& thread_stamps();

}  // namespace detail

/// Cells visible from `pose`: in bounds, center within the view radius and
/// the arc, and reached by a ray before it hits a blocking cell (the blocking
/// cell itself is visible). Sorted by (ix, iy).
template <class Blocked>
std::vector<CellIndex> cast_view(const GridSpec& spec, const Pose2D& pose,
                                 const FovModel& fov, Blocked&& blocked) {
  std::vector<CellIndex> out;
  const detail::RayFan fan(spec, pose, fov);
  const detail::ArcTest in_arc(spec, pose, fov);
  auto& stamps = detail::thread_stamps();
  stamps.begin(spec.cell_count());
  const double max_len = fov.view_radius + spec.resolution;
  for (int k = 0; k < fan.count; ++k) {
    detail::traverse_ray(spec, pose, fan.angle(k), max_len, [&](CellIndex c) {
      if (!in_bounds(spec, c)) return false;
      if (stamps.mark(flat_index(spec, c)) && in_arc(c)) {
        out.push_back(c);
      }
      return !blocked(c);
    });
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Membership test equivalent to checking `c` against cast_view(), but only
/// the rays that can pass through `c` are traced.
template <class Blocked>
bool cell_in_view(const GridSpec& spec, const Pose2D& pose, const FovModel& fov,
                  CellIndex c, Blocked&& blocked) {
  if (!in_bounds(spec, c) || !detail::center_in_arc(spec, pose, fov, c)) return false;
  const detail::RayFan fan(spec, pose, fov);
  const Vec2 center = cell_to_world(c, spec);
  const double ddx = center.x - pose.x;
  const double ddy = center.y - pose.y;
  const double dist = std::hypot(ddx, ddy);
  const double reach = 0.7072 * spec.resolution;
  const double half_width = dist <= reach ? kPi : std::asin(reach / dist) + 1e-9;
  const double bearing = std::atan2(ddy, ddx);
  const double max_len = fov.view_radius + spec.resolution;
  for (int k = 0; k < fan.count; ++k) {
    const double a = fan.angle(k);
    if (std::abs(normalize_angle(a - bearing)) > half_width) continue;
    bool hit = false;
    detail::traverse_ray(spec, pose, a, max_len, [&](CellIndex cur) {
      if (!in_bounds(spec, cur)) return false;
      if (cur == c) {
        hit = true;
        return false;
      }
      return !blocked(cur);
    });
    if (hit) return true;
  }
  return false;
}

}  // namespace con
