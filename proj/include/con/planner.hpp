#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "con/grid.hpp"
#include "con/raycast.hpp"
#include "con/rng.hpp"
#include "con/world.hpp"

namespace con {

enum class CellState : std::int8_t { kUnknown = 0, kFree = 1, kOccupied = 2 };

/// Ternary obstacle map built from the agent's own observations. Known cells
/// never revert to unknown.
class ObstacleMap {
 public:
  explicit ObstacleMap(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  /// Out-of-bounds cells read as occupied.
  CellState at(CellIndex c) const {
    return in_bounds(spec_, c) ? cells_[flat_index(spec_, c)] : CellState::kOccupied;
  }
  bool is_known(CellIndex c) const { return at(c) != CellState::kUnknown; }
  /// Throws std::invalid_argument when asked to set kUnknown on a known cell.
  void set(CellIndex c, CellState s);
  std::size_t known_count() const { return known_; }

 private:
  GridSpec spec_;
  std::vector<CellState> cells_;
  std::size_t known_ = 0;
};

/// Marks what the pose sees: visible free cells free, visible obstacle cells
/// (where rays end) occupied. Returns the visible cells.
std::vector<CellIndex> update_obstacle_map(ObstacleMap& map, const World& world,
                                           const Pose2D& pose, const FovModel& fov);
void observe_cells(ObstacleMap& map, const World& world, std::span<const CellIndex> visible);

bool is_frontier(const ObstacleMap& map, CellIndex c);
/// Known-free cells with at least one unknown 4-neighbor, sorted.
std::vector<CellIndex> frontier_cells(const ObstacleMap& map);

/// Single-source Dijkstra over the 4-connected grid with unit costs.
/// Neighbors are relaxed in the order +x, -x, +y, -y and the queue breaks
/// ties by (ix, iy), so paths are reproducible.
struct PathTree {
  GridSpec spec{};
  CellIndex root{};
  std::vector<int> dist;     // -1 where unreached
  std::vector<int> parent;   // flat index; root points to itself

  bool reached(CellIndex c) const {
    return in_bounds(spec, c) && dist[flat_index(spec, c)] >= 0;
  }
  std::vector<CellIndex> path_to(CellIndex c) const;
};

/// Traversable cells are free, plus unknown when `unknown_traversable`.
/// Stops as soon as `stop_at` is reached; the rest of the tree is then partial.
PathTree dijkstra_tree(const ObstacleMap& map, CellIndex from, bool unknown_traversable,
                       std::optional<CellIndex> stop_at = std::nullopt);

std::optional<std::vector<CellIndex>> dijkstra_path(const ObstacleMap& map, CellIndex from,
                                                    CellIndex to, bool unknown_traversable);

/// Cells within `radius` of any visited position are treated as holding no
/// target and are never chosen as subgoals. With `require_seen`, a cell must
/// also have been inside one of the agent's detection-range views.
class VisitedMask {
 public:
  explicit VisitedMask(const GridSpec& spec, double radius = 1.0, bool require_seen = false);

  void add(Vec2 p);
  /// Records cells covered by a detection-range view.
  void mark_seen(std::span<const CellIndex> cells);
  bool excluded(CellIndex c) const {
    if (!in_bounds(spec_, c)) return false;
    const std::size_t i = flat_index(spec_, c);
    return near_[i] != 0 && (!require_seen_ || seen_[i] != 0);
  }
  const std::vector<Vec2>& points() const { return points_; }
  double radius() const { return radius_; }
  bool require_seen() const { return require_seen_; }

 private:
  GridSpec spec_;
  double radius_;
  bool require_seen_;
  std::vector<Vec2> points_;
  std::vector<std::uint8_t> near_;
  std::vector<std::uint8_t> seen_;
};

struct Subgoal {
  CellIndex cell{};
  double primary_value = 0.0;
  double secondary_value = 0.0;
  int distance = 0;  // path length in cells
  friend bool operator==(const Subgoal&, const Subgoal&) = default;
};

/// Poses at which the observation along `path` is simulated: every
/// `spacing` meters after the start, plus the endpoint. Each waypoint faces
/// the direction of the move into it; a zero-length path yields the start
/// pose with `start_heading`.
std::vector<Pose2D> path_waypoints(std::span<const CellIndex> path, const GridSpec& spec,
                                   double start_heading, double spacing);

/// Value of heading to `candidate`: the primary and secondary maxima of the
/// object map over the union of cells simulated as visible (known obstacle
/// map, unknown cells transparent) from the path waypoints, ignoring cells
/// inside the visited mask. nullopt when the candidate is unreachable.
std::optional<Subgoal> evaluate_subgoal(CellIndex candidate, const Pose2D& pose,
                                        const ScoredGrid& object_map,
                                        const ObstacleMap& obstacle_map, const FovModel& fov,
                                        double waypoint_spacing, const VisitedMask& visited);

/// Batch form of evaluate_subgoal sharing one shortest-path tree; returns
/// values for the reachable candidates, in input order. `object_map` must be
/// on the obstacle map's grid.
std::vector<Subgoal> evaluate_candidates(std::span<const CellIndex> candidates,
                                         const Pose2D& pose, const DenseScores& object_map,
                                         const ObstacleMap& obstacle_map, const FovModel& fov,
                                         double waypoint_spacing, const VisitedMask& visited);

/// Index into `path` of the earliest waypoint by which the union value
/// reaches `goal`'s (primary, secondary) pair; path.size() - 1 when only the
/// endpoint does.
std::size_t vantage_index(std::span<const CellIndex> path, const DenseScores& object_map,
                          const ObstacleMap& obstacle_map, const FovModel& fov, double waypoint_spacing,
                          const VisitedMask& visited, const Subgoal& goal);

/// Highest primary value; ties by secondary value, then smallest (ix, iy).
/// nullopt (exploration complete) for an empty set.
std::optional<Subgoal> select_subgoal(std::span<const Subgoal> candidates);

/// Shortest path first, then smallest (ix, iy). Used when no candidate has
/// any object-map value. nullopt for an empty set.
std::optional<Subgoal> select_nearest(std::span<const Subgoal> candidates);

/// Uniform random pick from the given frontier cells.
std::optional<Subgoal> frontier_baseline_select(std::span<const CellIndex> frontier, Rng& rng);
std::optional<Subgoal> frontier_baseline_select(const ObstacleMap& map, Rng& rng);

enum class Terminal { kReached, kBlocked, kFrontier, kNoPath };
const char* terminal_name(Terminal t);

struct LocalPlan {
  Subgoal goal{};
  std::vector<CellIndex> path;
  std::size_t cursor = 0;  // index of the agent's cell in path
  long steps = 0;          // actions emitted for this subgoal
  long frontier_min_steps = 1;  // moves before the frontier stop may fire
};

/// Plans over free and unknown cells. nullopt if the subgoal is unreachable.
std::optional<LocalPlan> make_local_plan(const ObstacleMap& map, CellIndex from,
                                         const Subgoal& goal);

using LocalStep = std::variant<Action, Terminal>;

/// Next action along the plan, or why control returns to the global
/// planner: subgoal reached, next path cell found occupied, or the agent
/// (after `frontier_min_steps` moves) stands on a frontier cell with
/// unexplored space next on its path. Adds the current position to `visited`.
LocalStep local_plan_step(const ObstacleMap& map, const AgentState& state, LocalPlan& plan,
                          VisitedMask& visited);

}  // namespace con
