#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "con/grid.hpp"
#include "con/raycast.hpp"

namespace con {

class WorldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ground-truth environment. Immutable once built.
class World {
 public:
  World() = default;
  /// `obstacles` is row-major with one byte per cell (nonzero = obstacle).
  /// Throws WorldError if a target is outside the grid or on an obstacle.
  World(GridSpec spec, std::vector<std::uint8_t> obstacles,
        std::map<int, Vec2> targets);

  const GridSpec& spec() const { return spec_; }
  const std::map<int, Vec2>& targets() const { return targets_; }
  /// Throws WorldError for unknown ids.
  Vec2 target(int id) const;
  CellIndex target_cell(int id) const { return world_to_cell(target(id), spec_); }
  /// Target id occupying the cell, or -1.
  int target_at(CellIndex c) const;

  /// Out-of-bounds cells count as obstacles.
  bool is_obstacle(CellIndex c) const {
    return !in_bounds(spec_, c) || obstacles_[flat_index(spec_, c)] != 0;
  }
  bool is_free(CellIndex c) const { return !is_obstacle(c); }
  std::size_t free_cell_count() const;
  const std::vector<std::uint8_t>& obstacle_mask() const { return obstacles_; }

  friend bool operator==(const World&, const World&) = default;

 private:
  GridSpec spec_{};
  std::vector<std::uint8_t> obstacles_;
  std::map<int, Vec2> targets_;
  std::vector<int> target_index_;
};

struct WorldParams {
  int width = 80;
  int height = 80;
  double resolution = kMapResolution;
  int rooms = 6;           // rooms after recursive division
  int min_room_cells = 14;  // minimum room side, in cells
  int door_cells = 6;
  int furniture_per_room = 1;
  int targets = 100;
  int max_retries = 32;

  void validate() const;
};

/// Seeded rooms-and-corridors layout: boundary walls, recursive division into
/// rooms joined by doors, optional furniture blocks, and target objects on
/// free cells. Throws WorldError if no connected layout is found within
/// `max_retries` attempts.
World generate_world(std::uint64_t seed, const WorldParams& params = {});

/// Text format:
///   CONWORLD v1 <width> <height> <resolution>
///   <height rows of '#' / '.', row iy = 0 first>
///   target <id> <x> <y>
void save_world(const World& w, std::ostream& out);
World load_world(std::istream& in);
std::string world_to_string(const World& w);
World world_from_string(const std::string& text);

std::vector<CellIndex> visible_cells(const World& w, const Pose2D& pose, const FovModel& fov);
/// Ideal detector: target within detection range and arc, and its cell is
/// reached by the detection-range ray fan.
bool detect_target(const World& w, const Pose2D& pose, int target_id, const FovModel& fov);

/// Axis headings, counter-clockwise from +x.
enum class Heading : int { kEast = 0, kNorth = 1, kWest = 2, kSouth = 3 };
double heading_angle(Heading h);
/// Nearest axis heading to `theta`.
Heading snap_heading(double theta);
inline CellIndex heading_offset(Heading h) {
  switch (h) {
    case Heading::kEast: return {1, 0};
    case Heading::kNorth: return {0, 1};
    case Heading::kWest: return {-1, 0};
    case Heading::kSouth: return {0, -1};
  }
  return {0, 0};
}

enum class Action { kForward, kBackward, kLeft, kRight };
const char* action_name(Action a);
/// Absolute direction of a relative action at heading `h`.
Heading action_direction(Heading h, Action a);
/// Relative action that moves from heading `h` towards absolute `dir`.
Action action_towards(Heading h, Heading dir);

struct AgentState {
  Pose2D pose{};
  long steps = 0;              // grid moves taken
  double resolution = kMapResolution;
  std::vector<Vec2> visited;   // positions occupied so far

  double distance_traveled() const { return static_cast<double>(steps) * resolution; }
  CellIndex cell(const GridSpec& spec) const { return world_to_cell(pose.position(), spec); }
};

AgentState make_agent(const World& w, const Pose2D& start);

/// One 0.1 m move relative to the snapped heading; the agent ends up facing
/// the motion direction (backward is a turn-around). Returns nullopt on collision (destination is
/// an obstacle or off the grid); the input state is left unchanged.
std::optional<AgentState> step_agent(const World& w, const AgentState& s, Action a);

/// 4-connected BFS distance (in cells) from `from` to every cell; -1 where
/// unreachable.
std::vector<int> geodesic_distances(const World& w, CellIndex from);

/// 4-connected shortest path length in meters between a pose and a point.
/// Throws WorldError if either end is blocked or unreachable.
double shortest_path_length(const World& w, const Pose2D& a, Vec2 b);

/// Fewest moves (times resolution) after which an agent starting at `start`
/// can be in a pose that detects the target, respecting the heading rules of
/// step_agent. nullopt if no reachable pose detects it.
std::optional<double> success_path_length(const World& w, const Pose2D& start,
                                          int target_id, const FovModel& fov);

}  // namespace con
