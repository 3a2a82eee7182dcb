#include "con/teacher.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>

#include "con/rng.hpp"

namespace con {

std::string_view scenario_name(Scenario s) {
  return s == Scenario::kConstrainedStart ? "constrained_start" : "constrained_start_goal";
}

Scenario parse_scenario(std::string_view s) {
  if (s == "constrained_start") return Scenario::kConstrainedStart;
  if (s == "constrained_start_goal") return Scenario::kConstrainedStartGoal;
  throw std::invalid_argument("unknown scenario '" + std::string(s) + "'");
}

Pose2D sample_student_start(const World& w, int target_id, std::uint64_t seed,
                            double start_distance) {
  const GridSpec& spec = w.spec();
  const std::vector<int> dist = geodesic_distances(w, w.target_cell(target_id));
  double best = std::numeric_limits<double>::infinity();
  std::vector<CellIndex> ties;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0) continue;
    const double err = std::abs(dist[i] * spec.resolution - start_distance);
    if (err < best - 1e-9) {
      best = err;
      ties.clear();
    }
    if (err <= best + 1e-9) ties.push_back(unflatten(spec, i));
  }
  if (ties.empty()) throw WorldError("sample_student_start: target cell is isolated");
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(target_id), 0x5354415254ULL}));
  const CellIndex c = ties[uniform_index(rng, ties.size())];
  const Heading h = static_cast<Heading>(uniform_index(rng, 4));
  const Vec2 p = cell_to_world(c, spec);
  return {p.x, p.y, heading_angle(h)};
}

Pose2D sample_teacher_start(const World& w, int target_id, std::uint64_t seed,
                            const FovModel& fov) {
  const GridSpec& spec = w.spec();
  const Vec2 t = w.target(target_id);
  std::vector<CellIndex> candidates;
  const int r = static_cast<int>(std::ceil(fov.detection_radius / spec.resolution)) + 1;
  const CellIndex tc = w.target_cell(target_id);
  for (int iy = tc.iy - r; iy <= tc.iy + r; ++iy) {
    for (int ix = tc.ix - r; ix <= tc.ix + r; ++ix) {
      const CellIndex c{ix, iy};
      if (w.is_obstacle(c)) continue;
      const Vec2 p = cell_to_world(c, spec);
      if (std::hypot(p.x - t.x, p.y - t.y) <= fov.detection_radius) candidates.push_back(c);
    }
  }
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(target_id), 0x5445414348ULL}));
  for (int attempt = 0; attempt < 512 && !candidates.empty(); ++attempt) {
    const Vec2 p = cell_to_world(candidates[uniform_index(rng, candidates.size())], spec);
    const double theta = normalize_angle(-kPi + 2.0 * kPi * uniform01(rng));
    const Pose2D pose{p.x, p.y, theta};
    if (detect_target(w, pose, target_id, fov)) return pose;
  }
  for (const CellIndex& c : candidates) {
    const Vec2 p = cell_to_world(c, spec);
    for (int k = 0; k < 16; ++k) {
      const Pose2D pose{p.x, p.y, normalize_angle(-kPi + k * kPi / 8.0)};
      if (detect_target(w, pose, target_id, fov)) return pose;
    }
  }
  throw WorldError("sample_teacher_start: no pose detects target " + std::to_string(target_id));
}

namespace {

constexpr std::array<Heading, 4> kMoveOrder = {Heading::kEast, Heading::kWest,
                                               Heading::kNorth, Heading::kSouth};

class CoverageWalker {
 public:
  CoverageWalker(const World& w, const FovModel& fov, Trajectory& out)
      : w_(w), fov_(fov), out_(out), known_(w.spec().cell_count(), kUnknown) {}

  void start(const Pose2D& pose) {
    pose_ = pose;
    out_.points.push_back({0, pose_, {}});
    observe();
  }

  long steps() const { return steps_; }
  const Pose2D& pose() const { return pose_; }

  /// Walks frontier to frontier until the budget runs out or nothing is left.
  void explore(long budget, int min_cells, Rng& rng) {
    // Face an axis first so the cell ahead is in view and the known region
    // connects to the current cell.
    const double axis = heading_angle(snap_heading(pose_.theta));
    if (steps_ < budget && pose_.theta != axis) rotate_to(axis);
    while (steps_ < budget) {
      auto path = path_to_frontier(min_cells, rng);
      if (!path) return;
      for (const CellIndex& c : *path) {
        if (steps_ >= budget) return;
        move_to(c);
      }
      for (int turn = 0; turn < 3 && steps_ < budget; ++turn) {
        rotate_to(normalize_angle(pose_.theta + 0.5 * kPi));
      }
    }
  }

  /// Drives along ground-truth free space to `goal`, ending on its heading.
  void drive_to(const Pose2D& goal) {
    const GridSpec& spec = w_.spec();
    const CellIndex target = world_to_cell(goal.position(), spec);
    const auto parents = bfs(world_to_cell(pose_.position(), spec),
                             [this](CellIndex c) { return w_.is_free(c); });
    if (parents[flat_index(spec, target)] < 0) {
      throw WorldError("teacher: student start unreachable");
    }
    for (const CellIndex& c : trace(parents, target)) move_to(c);
    if (pose_.theta != goal.theta) rotate_to(goal.theta);
    if (pose_ != goal) {
      pose_ = goal;
      out_.points.back().pose = goal;
      observe();
    }
  }

 private:
  static constexpr std::int8_t kUnknown = -1;
  static constexpr std::int8_t kFree = 0;
  static constexpr std::int8_t kOccupied = 1;

  void observe() {
    known_[flat_index(w_.spec(), world_to_cell(pose_.position(), w_.spec()))] = kFree;
    auto& seen = out_.points.back().observed;
    seen = visible_cells(w_, pose_, fov_);
    for (const CellIndex& c : seen) {
      known_[flat_index(w_.spec(), c)] = w_.is_obstacle(c) ? kOccupied : kFree;
    }
  }

  void move_to(CellIndex c) {
    const CellIndex cur = world_to_cell(pose_.position(), w_.spec());
    const int dx = c.ix - cur.ix;
    const int dy = c.iy - cur.iy;
    Heading h = Heading::kEast;
    if (dx == -1) h = Heading::kWest;
    if (dy == 1) h = Heading::kNorth;
    if (dy == -1) h = Heading::kSouth;
    const Vec2 p = cell_to_world(c, w_.spec());
    pose_ = {p.x, p.y, heading_angle(h)};
    out_.points.push_back({++steps_, pose_, {}});
    observe();
  }

  void rotate_to(double theta) {
    pose_.theta = theta;
    out_.points.push_back({++steps_, pose_, {}});
    observe();
  }

  /// Parent links of a BFS tree from `from`; -1 marks unreached cells.
  /// `depth`, when given, receives hop counts (-1 unreached).
  template <class Passable>
  std::vector<long> bfs(CellIndex from, Passable&& passable,
                        std::vector<int>* depth = nullptr) const {
    const GridSpec& spec = w_.spec();
    std::vector<long> parent(spec.cell_count(), -1);
    if (depth) depth->assign(spec.cell_count(), -1);
    const std::size_t root = flat_index(spec, from);
    parent[root] = static_cast<long>(root);
    if (depth) (*depth)[root] = 0;
    std::vector<CellIndex> queue{from};
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const CellIndex c = queue[head];
      const std::size_t ci = flat_index(spec, c);
      for (Heading h : kMoveOrder) {
        const CellIndex off = heading_offset(h);
        const CellIndex n{c.ix + off.ix, c.iy + off.iy};
        if (!in_bounds(spec, n) || !passable(n)) continue;
        const std::size_t ni = flat_index(spec, n);
        if (parent[ni] >= 0) continue;
        parent[ni] = static_cast<long>(ci);
        if (depth) (*depth)[ni] = (*depth)[ci] + 1;
        queue.push_back(n);
      }
    }
    return parent;
  }

  std::vector<CellIndex> trace(const std::vector<long>& parent, CellIndex goal) const {
    const GridSpec& spec = w_.spec();
    std::vector<CellIndex> path;
    std::size_t i = flat_index(spec, goal);
    while (parent[i] != static_cast<long>(i)) {
      path.push_back(unflatten(spec, i));
      i = static_cast<std::size_t>(parent[i]);
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  bool is_frontier(CellIndex c) const {
    const GridSpec& spec = w_.spec();
    for (Heading h : kMoveOrder) {
      const CellIndex off = heading_offset(h);
      const CellIndex n{c.ix + off.ix, c.iy + off.iy};
      if (in_bounds(spec, n) && known_[flat_index(spec, n)] == kUnknown) return true;
    }
    return false;
  }

  std::optional<std::vector<CellIndex>> path_to_frontier(int min_cells, Rng& rng) const {
    const GridSpec& spec = w_.spec();
    const CellIndex from = world_to_cell(pose_.position(), spec);
    std::vector<int> depth;
    const auto parent = bfs(
        from, [this](CellIndex c) { return known_[flat_index(w_.spec(), c)] == kFree; },
        &depth);
    std::vector<std::pair<int, CellIndex>> far, near;
    for (std::size_t i = 0; i < depth.size(); ++i) {
      const int d = depth[i];
      if (d <= 0) continue;
      const CellIndex c = unflatten(spec, i);
      if (is_frontier(c)) (d >= min_cells ? far : near).emplace_back(d, c);
    }
    auto& pool = far.empty() ? near : far;
    if (pool.empty()) return std::nullopt;
    const int best = std::min_element(pool.begin(), pool.end(),
                                      [](const auto& a, const auto& b) { return a.first < b.first; })
                         ->first;
    std::vector<CellIndex> ties;
    for (const auto& [d, c] : pool) {
      if (d == best) ties.push_back(c);
    }
    std::sort(ties.begin(), ties.end());
    return trace(parent, ties[uniform_index(rng, ties.size())]);
  }

  const World& w_;
  FovModel fov_;
  Trajectory& out_;
  std::vector<std::int8_t> known_;
  Pose2D pose_{};
  long steps_ = 0;
};

}  // namespace

Trajectory generate_teacher_trajectory(const World& w, int target_id, Scenario scenario,
                                       std::uint64_t seed, const TeacherParams& params) {
  Trajectory traj;
  traj.view_fov = params.fov;
  const Pose2D start = sample_teacher_start(w, target_id, seed, params.fov);
  CoverageWalker walker(w, params.fov, traj);
  walker.start(start);
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(target_id), 0x57414C4BULL}));
  const int min_cells =
      static_cast<int>(std::lround(params.min_frontier_distance / w.spec().resolution));
  walker.explore(params.walk_steps, min_cells, rng);
  if (scenario == Scenario::kConstrainedStartGoal) {
    walker.drive_to(sample_student_start(w, target_id, seed, params.start_distance));
  }
  return traj;
}

}  // namespace con
