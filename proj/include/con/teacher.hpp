#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "con/world.hpp"

namespace con {

enum class Scenario { kConstrainedStart, kConstrainedStartGoal };

std::string_view scenario_name(Scenario s);
/// Accepts "constrained_start" / "constrained_start_goal". Throws
/// std::invalid_argument otherwise.
Scenario parse_scenario(std::string_view s);

struct TrajectoryPoint {
  long step = 0;
  Pose2D pose{};
  /// Cells the walker saw from this pose under Trajectory::view_fov.
  std::vector<CellIndex> observed;
};

/// Consecutive points differ by one grid move or one pure rotation.
struct Trajectory {
  std::vector<TrajectoryPoint> points;
  /// Field of view the `observed` lists were cast with, if they are filled.
  std::optional<FovModel> view_fov;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
  const Pose2D& front() const { return points.front().pose; }
  const Pose2D& back() const { return points.back().pose; }
};

struct TeacherParams {
  long walk_steps = 2000;
  /// Frontier targets closer than this are skipped while farther ones exist.
  double min_frontier_distance = 1.0;
  /// Geodesic distance between the student start and the target.
  double start_distance = 3.2;
  FovModel fov{};
};

/// Student start: a free cell whose geodesic distance to the target is
/// closest to `start_distance`, uniformly chosen among ties, facing a random
/// axis direction. Deterministic in (world, target, seed).
Pose2D sample_student_start(const World& w, int target_id, std::uint64_t seed,
                            double start_distance);

/// Random free pose (continuous heading) from which the target is detected.
/// Throws WorldError if no such pose exists.
Pose2D sample_teacher_start(const World& w, int target_id, std::uint64_t seed,
                            const FovModel& fov);

/// Teacher history for one target. The teacher starts at a pose that
/// detects the target and runs a seeded frontier coverage walk of
/// `walk_steps` actions (moves, plus three 90-degree look-around turns at
/// each frontier reached). Under kConstrainedStartGoal it then drives to the
/// student start and ends exactly on the student start pose.
Trajectory generate_teacher_trajectory(const World& w, int target_id, Scenario scenario,
                                       std::uint64_t seed, const TeacherParams& params = {});

}  // namespace con
