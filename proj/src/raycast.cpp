#include "con/raycast.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace con {

void FovModel::validate() const {
  if (!(view_radius > 0.0) || !(detection_radius > 0.0) ||
      detection_radius > view_radius) {
    throw std::invalid_argument("FovModel: require 0 < detection_radius <= view_radius");
  }
  if (!(view_angle > 0.0) || view_angle > 2.0 * kPi) {
    throw std::invalid_argument("FovModel: view_angle must be in (0, 2*pi]");
  }
}

namespace detail {

RayFan::RayFan(const GridSpec& spec, const Pose2D& pose, const FovModel& fov) {
  const double max_step = spec.resolution / fov.view_radius;
  full_circle = fov.view_angle >= 2.0 * kPi - 1e-12;
  if (full_circle) {
    count = std::max(4, static_cast<int>(std::ceil(2.0 * kPi / max_step)));
    step = 2.0 * kPi / count;
    start = pose.theta;
  } else {
    count = std::max(2, static_cast<int>(std::ceil(fov.view_angle / max_step)) + 1);
    step = fov.view_angle / (count - 1);
    start = pose.theta - 0.5 * fov.view_angle;
  }
}

ArcTest::ArcTest(const GridSpec& spec, const Pose2D& pose, const FovModel& fov)
    : spec_(spec),
      px_(pose.x),
      py_(pose.y),
      ux_(std::cos(pose.theta)),
      uy_(std::sin(pose.theta)),
      full_(fov.view_angle >= 2.0 * kPi - 1e-12) {
  const double r = fov.view_radius + 1e-12;
  r2_ = r * r;
  cos_half_ = std::cos(std::min(kPi, 0.5 * fov.view_angle + 1e-9));
}

bool center_in_arc(const GridSpec& spec, const Pose2D& pose, const FovModel& fov,
                   CellIndex c) {
  return ArcTest(spec, pose, fov)(c);
}

StampBuffer& thread_stamps() {
  thread_local StampBuffer buf;
  return buf;
}

}  // namespace detail
}  // namespace con
