#include "con/planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace con {

ObstacleMap::ObstacleMap(const GridSpec& spec) : spec_(spec) {
  spec_.validate();
  cells_.assign(spec_.cell_count(), CellState::kUnknown);
}

void ObstacleMap::set(CellIndex c, CellState s) {
  if (!in_bounds(spec_, c)) throw std::out_of_range("ObstacleMap::set: cell out of bounds");
  CellState& cur = cells_[flat_index(spec_, c)];
  if (s == CellState::kUnknown) {
    if (cur != CellState::kUnknown) {
      throw std::invalid_argument("ObstacleMap::set: known cell cannot become unknown");
    }
    return;
  }
  if (cur == CellState::kUnknown) ++known_;
  cur = s;
}

void observe_cells(ObstacleMap& map, const World& world, std::span<const CellIndex> visible) {
  for (CellIndex c : visible) {
    map.set(c, world.is_obstacle(c) ? CellState::kOccupied : CellState::kFree);
  }
}

std::vector<CellIndex> update_obstacle_map(ObstacleMap& map, const World& world,
                                           const Pose2D& pose, const FovModel& fov) {
  auto visible = visible_cells(world, pose, fov);
  observe_cells(map, world, visible);
  const CellIndex here = world_to_cell(pose.position(), map.spec());
  if (in_bounds(map.spec(), here) && world.is_free(here)) map.set(here, CellState::kFree);
  return visible;
}

namespace {

constexpr CellIndex kNeighbors[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

CellIndex offset(CellIndex c, CellIndex d) { return {c.ix + d.ix, c.iy + d.iy}; }

}  // namespace

bool is_frontier(const ObstacleMap& map, CellIndex c) {
  if (map.at(c) != CellState::kFree) return false;
  for (CellIndex d : kNeighbors) {
    const CellIndex n = offset(c, d);
    if (in_bounds(map.spec(), n) && map.at(n) == CellState::kUnknown) return true;
  }
  return false;
}

std::vector<CellIndex> frontier_cells(const ObstacleMap& map) {
  std::vector<CellIndex> out;
  const GridSpec& spec = map.spec();
  for (int ix = 0; ix < spec.width; ++ix) {
    for (int iy = 0; iy < spec.height; ++iy) {
      if (is_frontier(map, {ix, iy})) out.push_back({ix, iy});
    }
  }
  return out;
}

std::vector<CellIndex> PathTree::path_to(CellIndex c) const {
  if (!reached(c)) return {};
  std::vector<CellIndex> out;
  int i = static_cast<int>(flat_index(spec, c));
  while (true) {
    out.push_back(unflatten(spec, static_cast<std::size_t>(i)));
    if (parent[i] == i) break;
    i = parent[i];
  }
  std::reverse(out.begin(), out.end());
  return out;
}

PathTree dijkstra_tree(const ObstacleMap& map, CellIndex from, bool unknown_traversable,
                       std::optional<CellIndex> stop_at) {
  const GridSpec& spec = map.spec();
  PathTree tree;
  tree.spec = spec;
  tree.root = from;
  tree.dist.assign(spec.cell_count(), -1);
  tree.parent.assign(spec.cell_count(), -1);
  if (!in_bounds(spec, from)) return tree;

  auto passable = [&](CellIndex c) {
    const CellState s = map.at(c);
    return s == CellState::kFree || (unknown_traversable && s == CellState::kUnknown);
  };

  // Unit edge costs: settling in (dist, ix, iy) order is a breadth-first
  // sweep whose levels are expanded in sorted (ix, iy) order. A cell's
  // parent is the first cell of the previous level to reach it, exactly as
  // with a priority queue keyed on (dist, ix, iy).
  const auto root = static_cast<int>(flat_index(spec, from));
  tree.dist[root] = 0;
  tree.parent[root] = root;
  if (stop_at && *stop_at == from) return tree;
  std::vector<CellIndex> level{from};
  std::vector<CellIndex> next;
  int d = 0;
  while (!level.empty()) {
    next.clear();
    for (CellIndex c : level) {
      const auto ci = static_cast<int>(flat_index(spec, c));
      for (CellIndex off : kNeighbors) {
        const CellIndex n = offset(c, off);
        if (!in_bounds(spec, n)) continue;
        const auto ni = static_cast<int>(flat_index(spec, n));
        if (tree.dist[ni] >= 0 || !passable(n)) continue;
        tree.dist[ni] = d + 1;
        tree.parent[ni] = ci;
        if (stop_at && n == *stop_at) return tree;
        next.push_back(n);
      }
    }
    std::sort(next.begin(), next.end());
    level.swap(next);
    ++d;
  }
  return tree;
}

std::optional<std::vector<CellIndex>> dijkstra_path(const ObstacleMap& map, CellIndex from,
                                                    CellIndex to, bool unknown_traversable) {
  const PathTree tree = dijkstra_tree(map, from, unknown_traversable, to);
  if (!tree.reached(to)) return std::nullopt;
  return tree.path_to(to);
}

VisitedMask::VisitedMask(const GridSpec& spec, double radius, bool require_seen)
    : spec_(spec),
      radius_(radius),
      require_seen_(require_seen),
      near_(spec.cell_count(), 0),
      seen_(require_seen ? spec.cell_count() : 0, 0) {
  if (!(radius >= 0.0)) throw std::invalid_argument("VisitedMask: radius must be >= 0");
}

void VisitedMask::add(Vec2 p) {
  if (!points_.empty() && points_.back() == p) return;
  points_.push_back(p);
  const double r2 = radius_ * radius_;
  const CellIndex lo = world_to_cell({p.x - radius_, p.y - radius_}, spec_);
  const CellIndex hi = world_to_cell({p.x + radius_, p.y + radius_}, spec_);
  for (int ix = std::max(lo.ix, 0); ix <= std::min(hi.ix, spec_.width - 1); ++ix) {
    for (int iy = std::max(lo.iy, 0); iy <= std::min(hi.iy, spec_.height - 1); ++iy) {
      const Vec2 c = cell_to_world({ix, iy}, spec_);
      const double dx = c.x - p.x;
      const double dy = c.y - p.y;
      if (dx * dx + dy * dy <= r2) near_[flat_index(spec_, {ix, iy})] = 1;
    }
  }
}

void VisitedMask::mark_seen(std::span<const CellIndex> cells) {
  if (!require_seen_) return;
  for (CellIndex c : cells) {
    if (in_bounds(spec_, c)) seen_[flat_index(spec_, c)] = 1;
  }
}

namespace {

int stride_cells(double spacing, double resolution) {
  if (!(spacing > 0.0)) throw std::invalid_argument("waypoint spacing must be > 0");
  return std::max(1, static_cast<int>(std::lround(spacing / resolution)));
}

double move_heading(CellIndex from, CellIndex to) {
  return std::atan2(static_cast<double>(to.iy - from.iy), static_cast<double>(to.ix - from.ix));
}

Pose2D waypoint_pose(const GridSpec& spec, CellIndex c, double heading) {
  const Vec2 p = cell_to_world(c, spec);
  return make_pose(p.x, p.y, heading);
}

template <class Lookup>
std::pair<double, double> view_value(const ObstacleMap& map, const Pose2D& pose,
                                     const FovModel& fov, const VisitedMask& visited,
                                     Lookup&& lookup) {
  const auto cells = cast_view(map.spec(), pose, fov, [&](CellIndex c) {
    return map.at(c) == CellState::kOccupied;
  });
  double p = 0.0;
  double s = 0.0;
  for (CellIndex c : cells) {
    if (visited.excluded(c)) continue;
    const CellScore v = lookup(c);
    p = std::max(p, v.primary);
    s = std::max(s, v.secondary);
  }
  return {p, s};
}

/// Cells within a (2r+1)-cell square of some scored, non-excluded cell.
std::vector<std::uint8_t> scored_neighborhood(const DenseScores& m, const VisitedMask& visited,
                                              int r) {
  const GridSpec& spec = m.spec;
  const int w = spec.width;
  const int h = spec.height;
  std::vector<int> rows(spec.cell_count(), 0);
  // Horizontal pass: count scored cells within r along x, via prefix sums.
  std::vector<int> prefix(static_cast<std::size_t>(w) + 1);
  for (int iy = 0; iy < h; ++iy) {
    prefix[0] = 0;
    for (int ix = 0; ix < w; ++ix) {
      const std::size_t i = flat_index(spec, {ix, iy});
      const bool scored = (m.primary[i] > 0.0 || m.secondary[i] > 0.0) &&
                          !visited.excluded({ix, iy});
      prefix[ix + 1] = prefix[ix] + (scored ? 1 : 0);
    }
    for (int ix = 0; ix < w; ++ix) {
      rows[flat_index(spec, {ix, iy})] =
          prefix[std::min(w, ix + r + 1)] - prefix[std::max(0, ix - r)];
    }
  }
  std::vector<std::uint8_t> out(spec.cell_count(), 0);
  std::vector<int> col(static_cast<std::size_t>(h) + 1);
  for (int ix = 0; ix < w; ++ix) {
    col[0] = 0;
    for (int iy = 0; iy < h; ++iy) col[iy + 1] = col[iy] + rows[flat_index(spec, {ix, iy})];
    for (int iy = 0; iy < h; ++iy) {
      out[flat_index(spec, {ix, iy})] =
          col[std::min(h, iy + r + 1)] - col[std::max(0, iy - r)] > 0 ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

std::vector<Pose2D> path_waypoints(std::span<const CellIndex> path, const GridSpec& spec,
                                   double start_heading, double spacing) {
  if (path.empty()) return {};
  const int stride = stride_cells(spacing, spec.resolution);
  std::vector<Pose2D> out;
  const std::size_t last = path.size() - 1;
  if (last == 0) {
    out.push_back(waypoint_pose(spec, path[0], start_heading));
    return out;
  }
  for (std::size_t i = stride; i < last; i += stride) {
    out.push_back(waypoint_pose(spec, path[i], move_heading(path[i - 1], path[i])));
  }
  out.push_back(waypoint_pose(spec, path[last], move_heading(path[last - 1], path[last])));
  return out;
}

std::optional<Subgoal> evaluate_subgoal(CellIndex candidate, const Pose2D& pose,
                                        const ScoredGrid& object_map,
                                        const ObstacleMap& obstacle_map, const FovModel& fov,
                                        double waypoint_spacing, const VisitedMask& visited) {
  const CellIndex from = world_to_cell(pose.position(), obstacle_map.spec());
  const auto path = dijkstra_path(obstacle_map, from, candidate, true);
  if (!path) return std::nullopt;
  const auto waypoints =
      path_waypoints(*path, obstacle_map.spec(), pose.theta, waypoint_spacing);
  Subgoal out{candidate, 0.0, 0.0, static_cast<int>(path->size()) - 1};
  for (const Pose2D& wp : waypoints) {
    const auto [p, s] = view_value(obstacle_map, wp, fov, visited,
                                   [&](CellIndex c) { return object_map.get(c); });
    out.primary_value = std::max(out.primary_value, p);
    out.secondary_value = std::max(out.secondary_value, s);
  }
  return out;
}

std::vector<Subgoal> evaluate_candidates(std::span<const CellIndex> candidates,
                                         const Pose2D& pose, const DenseScores& object_map,
                                         const ObstacleMap& obstacle_map, const FovModel& fov,
                                         double waypoint_spacing, const VisitedMask& visited) {
  const GridSpec& spec = obstacle_map.spec();
  if (object_map.spec != spec) {
    throw std::invalid_argument("evaluate_candidates: object map grid mismatch");
  }
  const int stride = stride_cells(waypoint_spacing, spec.resolution);
  const CellIndex from = world_to_cell(pose.position(), spec);
  const PathTree tree = dijkstra_tree(obstacle_map, from, true);

  auto lookup = [&](CellIndex c) {
    const std::size_t i = flat_index(spec, c);
    return CellScore{object_map.primary[i], object_map.secondary[i]};
  };
  // Views that cannot reach a scored cell are worth zero without casting.
  const std::vector<std::uint8_t> hot = scored_neighborhood(
      object_map, visited, static_cast<int>(std::ceil(fov.view_radius / spec.resolution)) + 1);

  // Value of the view from a tree node, facing along its incoming edge.
  auto node_view = [&](int node) -> std::pair<double, double> {
    if (!hot[static_cast<std::size_t>(node)]) return {0.0, 0.0};
    const int par = tree.parent[node];
    const CellIndex c = unflatten(spec, static_cast<std::size_t>(node));
    const double heading =
        par == node ? pose.theta : move_heading(unflatten(spec, static_cast<std::size_t>(par)), c);
    return view_value(obstacle_map, waypoint_pose(spec, c, heading), fov, visited, lookup);
  };
  auto ancestor = [&](int node, int up) {
    for (int k = 0; k < up; ++k) node = tree.parent[node];
    return node;
  };

  // prefix[n], for nodes at depth multiple of stride: max over the views at
  // depths stride, 2*stride, ..., depth(n) along the tree path.
  std::vector<std::pair<double, double>> prefix(spec.cell_count());
  std::vector<std::uint8_t> have(spec.cell_count(), 0);
  std::vector<int> chain;
  auto prefix_of = [&](int node) {
    chain.clear();
    int n = node;
    while (tree.dist[n] > 0 && !have[n]) {
      chain.push_back(n);
      n = ancestor(n, stride);
    }
    std::pair<double, double> acc =
        tree.dist[n] > 0 ? prefix[n] : std::pair<double, double>{0.0, 0.0};
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      const auto v = node_view(*it);
      acc = {std::max(acc.first, v.first), std::max(acc.second, v.second)};
      prefix[*it] = acc;
      have[*it] = 1;
    }
    return acc;
  };

  std::vector<Subgoal> out;
  out.reserve(candidates.size());
  for (CellIndex cand : candidates) {
    if (!tree.reached(cand)) continue;
    const int node = static_cast<int>(flat_index(spec, cand));
    const int depth = tree.dist[node];
    auto value = node_view(node);
    if (depth > stride) {
      // Last stride multiple strictly before the endpoint.
      const int back = (depth - 1) % stride + 1;
      const auto pre = prefix_of(ancestor(node, back));
      value = {std::max(value.first, pre.first), std::max(value.second, pre.second)};
    }
    out.push_back({cand, value.first, value.second, depth});
  }
  return out;
}

std::size_t vantage_index(std::span<const CellIndex> path, const DenseScores& object_map,
                          const ObstacleMap& obstacle_map, const FovModel& fov, double waypoint_spacing,
                          const VisitedMask& visited, const Subgoal& goal) {
  if (path.size() <= 1) return 0;
  const GridSpec& spec = obstacle_map.spec();
  const int stride = stride_cells(waypoint_spacing, spec.resolution);
  auto lookup = [&](CellIndex c) {
    const std::size_t i = flat_index(spec, c);
    return CellScore{object_map.primary[i], object_map.secondary[i]};
  };
  const std::size_t last = path.size() - 1;
  double p = 0.0;
  double s = 0.0;
  for (std::size_t i = stride; i < last; i += stride) {
    const auto v = view_value(obstacle_map,
                              waypoint_pose(spec, path[i], move_heading(path[i - 1], path[i])),
                              fov, visited, lookup);
    p = std::max(p, v.first);
    s = std::max(s, v.second);
    if (p >= goal.primary_value && s >= goal.secondary_value) return i;
  }
  return last;
}

std::optional<Subgoal> select_subgoal(std::span<const Subgoal> candidates) {
  if (candidates.empty()) return std::nullopt;
  const Subgoal* best = &candidates.front();
  for (const Subgoal& c : candidates) {
    if (c.primary_value != best->primary_value) {
      if (c.primary_value > best->primary_value) best = &c;
      continue;
    }
    if (c.secondary_value != best->secondary_value) {
      if (c.secondary_value > best->secondary_value) best = &c;
      continue;
    }
    if (c.cell < best->cell) best = &c;
  }
  return *best;
}

std::optional<Subgoal> select_nearest(std::span<const Subgoal> candidates) {
  if (candidates.empty()) return std::nullopt;
  return *std::min_element(candidates.begin(), candidates.end(),
                           [](const Subgoal& a, const Subgoal& b) {
                             if (a.distance != b.distance) return a.distance < b.distance;
                             return a.cell < b.cell;
                           });
}

std::optional<Subgoal> frontier_baseline_select(std::span<const CellIndex> frontier, Rng& rng) {
  if (frontier.empty()) return std::nullopt;
  return Subgoal{frontier[uniform_index(rng, frontier.size())], 0.0, 0.0, 0};
}

std::optional<Subgoal> frontier_baseline_select(const ObstacleMap& map, Rng& rng) {
  const auto f = frontier_cells(map);
  return frontier_baseline_select(f, rng);
}

const char* terminal_name(Terminal t) {
  switch (t) {
    case Terminal::kReached: return "reached";
    case Terminal::kBlocked: return "blocked";
    case Terminal::kFrontier: return "frontier";
    case Terminal::kNoPath: return "no_path";
  }
  return "?";
}

std::optional<LocalPlan> make_local_plan(const ObstacleMap& map, CellIndex from,
                                         const Subgoal& goal) {
  auto path = dijkstra_path(map, from, goal.cell, true);
  if (!path) return std::nullopt;
  LocalPlan plan;
  plan.goal = goal;
  plan.path = std::move(*path);
  return plan;
}

namespace {

Heading direction_of(CellIndex from, CellIndex to) {
  const int dx = to.ix - from.ix;
  const int dy = to.iy - from.iy;
  if (dx == 1 && dy == 0) return Heading::kEast;
  if (dx == -1 && dy == 0) return Heading::kWest;
  if (dx == 0 && dy == 1) return Heading::kNorth;
  if (dx == 0 && dy == -1) return Heading::kSouth;
  throw std::logic_error("local plan: path cells are not adjacent");
}

}  // namespace

LocalStep local_plan_step(const ObstacleMap& map, const AgentState& state, LocalPlan& plan,
                          VisitedMask& visited) {
  visited.add(state.pose.position());
  if (plan.path.empty()) return Terminal::kNoPath;
  const CellIndex cur = world_to_cell(state.pose.position(), map.spec());
  if (plan.path[plan.cursor] != cur) {
    if (plan.cursor + 1 < plan.path.size() && plan.path[plan.cursor + 1] == cur) {
      ++plan.cursor;
    } else {
      auto it = std::find(plan.path.begin(), plan.path.end(), cur);
      if (it == plan.path.end()) return Terminal::kNoPath;
      plan.cursor = static_cast<std::size_t>(it - plan.path.begin());
    }
  }
  if (cur == plan.goal.cell || plan.cursor + 1 >= plan.path.size()) return Terminal::kReached;
  const CellIndex next = plan.path[plan.cursor + 1];
  const CellState next_state = map.at(next);
  if (next_state == CellState::kOccupied) return Terminal::kBlocked;
  if (plan.steps >= plan.frontier_min_steps && next_state == CellState::kUnknown && is_frontier(map, cur)) {
    return Terminal::kFrontier;
  }
  ++plan.steps;
  return action_towards(snap_heading(state.pose.theta), direction_of(cur, next));
}

}  // namespace con
