#include "con/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>

#include "con/rng.hpp"

namespace con {

World::World(GridSpec spec, std::vector<std::uint8_t> obstacles, std::map<int, Vec2> targets)
    : spec_(spec), obstacles_(std::move(obstacles)), targets_(std::move(targets)) {
  spec_.validate();
  if (obstacles_.size() != spec_.cell_count()) {
    throw WorldError("World: obstacle mask size does not match grid");
  }
  target_index_.assign(spec_.cell_count(), -1);
  for (const auto& [id, p] : targets_) {
    const CellIndex c = world_to_cell(p, spec_);
    if (!in_bounds(spec_, c) || is_obstacle(c)) {
      throw WorldError("World: target " + std::to_string(id) + " is not on a free cell");
    }
    if (target_index_[flat_index(spec_, c)] != -1) {
      throw WorldError("World: two targets share a cell");
    }
    target_index_[flat_index(spec_, c)] = id;
  }
}

Vec2 World::target(int id) const {
  auto it = targets_.find(id);
  if (it == targets_.end()) throw WorldError("unknown target id " + std::to_string(id));
  return it->second;
}

int World::target_at(CellIndex c) const {
  return in_bounds(spec_, c) ? target_index_[flat_index(spec_, c)] : -1;
}

std::size_t World::free_cell_count() const {
  return static_cast<std::size_t>(std::count(obstacles_.begin(), obstacles_.end(), 0));
}

void WorldParams::validate() const {
  if (width < 3 || height < 3) throw WorldError("WorldParams: grid must be at least 3x3");
  if (!(resolution > 0.0)) throw WorldError("WorldParams: resolution must be positive");
  if (rooms < 1) throw WorldError("WorldParams: rooms must be >= 1");
  if (min_room_cells < 1 || door_cells < 1) {
    throw WorldError("WorldParams: room and door sizes must be >= 1");
  }
  if (targets < 0 || furniture_per_room < 0 || max_retries < 1) {
    throw WorldError("WorldParams: negative counts");
  }
}

namespace {

constexpr std::array<CellIndex, 4> kNeighbors = {
    CellIndex{1, 0}, CellIndex{-1, 0}, CellIndex{0, 1}, CellIndex{0, -1}};

struct Rect {
  int x0, y0, x1, y1;  // inclusive
  int w() const { return x1 - x0 + 1; }
  int h() const { return y1 - y0 + 1; }
};

int uniform_int(Rng& rng, int lo, int hi) {  // inclusive
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool free_space_connected(const GridSpec& spec, const std::vector<std::uint8_t>& occ) {
  std::size_t start = occ.size();
  std::size_t free_count = 0;
  for (std::size_t i = 0; i < occ.size(); ++i) {
    if (occ[i] == 0) {
      ++free_count;
      if (start == occ.size()) start = i;
    }
  }
  if (free_count == 0) return false;
  std::vector<std::uint8_t> seen(occ.size(), 0);
  std::deque<std::size_t> queue{start};
  seen[start] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const CellIndex c = unflatten(spec, queue.front());
    queue.pop_front();
    for (CellIndex d : kNeighbors) {
      const CellIndex n{c.ix + d.ix, c.iy + d.iy};
      if (!in_bounds(spec, n)) continue;
      const std::size_t j = flat_index(spec, n);
      if (occ[j] != 0 || seen[j]) continue;
      seen[j] = 1;
      ++reached;
      queue.push_back(j);
    }
  }
  return reached == free_count;
}

std::optional<World> try_generate(Rng& rng, const WorldParams& p) {
  GridSpec spec{p.resolution, p.width, p.height, {0.0, 0.0}};
  std::vector<std::uint8_t> occ(spec.cell_count(), 0);
  auto at = [&](int x, int y) -> std::uint8_t& {
    return occ[flat_index(spec, {x, y})];
  };
  for (int x = 0; x < p.width; ++x) at(x, 0) = at(x, p.height - 1) = 1;
  for (int y = 0; y < p.height; ++y) at(0, y) = at(p.width - 1, y) = 1;

  std::vector<Rect> rooms{{1, 1, p.width - 2, p.height - 2}};
  const int m = p.min_room_cells;
  for (int r = 1; r < p.rooms; ++r) {
    std::size_t best = rooms.size();
    for (std::size_t i = 0; i < rooms.size(); ++i) {
      const Rect& q = rooms[i];
      if (q.w() < 2 * m + 1 && q.h() < 2 * m + 1) continue;
      if (best == rooms.size() ||
          q.w() * q.h() > rooms[best].w() * rooms[best].h()) {
        best = i;
      }
    }
    if (best == rooms.size()) break;
    const Rect q = rooms[best];
    bool vertical;
    const bool can_v = q.w() >= 2 * m + 1;
    const bool can_h = q.h() >= 2 * m + 1;
    if (can_v && can_h) {
      vertical = q.w() == q.h() ? uniform_int(rng, 0, 1) == 0 : q.w() > q.h();
    } else {
      vertical = can_v;
    }
    if (vertical) {
      const int x = uniform_int(rng, q.x0 + m, q.x1 - m);
      for (int y = q.y0; y <= q.y1; ++y) at(x, y) = 1;
      const int door = std::min(p.door_cells, q.h());
      const int d0 = uniform_int(rng, q.y0, q.y1 - door + 1);
      for (int y = d0; y < d0 + door; ++y) at(x, y) = 0;
      rooms[best] = {q.x0, q.y0, x - 1, q.y1};
      rooms.push_back({x + 1, q.y0, q.x1, q.y1});
    } else {
      const int y = uniform_int(rng, q.y0 + m, q.y1 - m);
      for (int x = q.x0; x <= q.x1; ++x) at(x, y) = 1;
      const int door = std::min(p.door_cells, q.w());
      const int d0 = uniform_int(rng, q.x0, q.x1 - door + 1);
      for (int x = d0; x < d0 + door; ++x) at(x, y) = 0;
      rooms[best] = {q.x0, q.y0, q.x1, y - 1};
      rooms.push_back({q.x0, y + 1, q.x1, q.y1});
    }
  }
  if (!free_space_connected(spec, occ)) return std::nullopt;

  constexpr int kMargin = 3;
  for (const Rect& q : rooms) {
    for (int f = 0; f < p.furniture_per_room; ++f) {
      const int bw = uniform_int(rng, 3, 8);
      const int bh = uniform_int(rng, 3, 8);
      if (q.w() < bw + 2 * kMargin || q.h() < bh + 2 * kMargin) continue;
      const int bx = uniform_int(rng, q.x0 + kMargin, q.x1 - kMargin - bw + 1);
      const int by = uniform_int(rng, q.y0 + kMargin, q.y1 - kMargin - bh + 1);
      std::vector<std::uint8_t> trial = occ;
      for (int y = by; y < by + bh; ++y) {
        for (int x = bx; x < bx + bw; ++x) trial[flat_index(spec, {x, y})] = 1;
      }
      if (free_space_connected(spec, trial)) occ = std::move(trial);
    }
  }

  std::vector<CellIndex> free_cells;
  for (std::size_t i = 0; i < occ.size(); ++i) {
    if (occ[i] == 0) free_cells.push_back(unflatten(spec, i));
  }
  if (free_cells.size() < static_cast<std::size_t>(std::max(p.targets, 100))) {
    return std::nullopt;
  }
  std::map<int, Vec2> targets;
  for (int t = 0; t < p.targets; ++t) {
    const std::size_t j = t + uniform_index(rng, free_cells.size() - t);
    std::swap(free_cells[t], free_cells[j]);
    targets[t] = cell_to_world(free_cells[t], spec);
  }
  return World(spec, std::move(occ), std::move(targets));
}

}  // namespace

World generate_world(std::uint64_t seed, const WorldParams& params) {
  params.validate();
  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(attempt), 0x574F524CULL}));
    if (auto w = try_generate(rng, params)) return std::move(*w);
  }
  throw WorldError("generate_world: no connected layout with enough free cells after " +
                   std::to_string(params.max_retries) + " attempts");
}

std::vector<CellIndex> visible_cells(const World& w, const Pose2D& pose, const FovModel& fov) {
  return cast_view(w.spec(), pose, fov, [&w](CellIndex c) { return w.is_obstacle(c); });
}

bool detect_target(const World& w, const Pose2D& pose, int target_id, const FovModel& fov) {
  const Vec2 t = w.target(target_id);
  const double dx = t.x - pose.x;
  const double dy = t.y - pose.y;
  if (std::hypot(dx, dy) > fov.detection_radius + 1e-12) return false;
  const FovModel det = fov.detection_view();
  return cell_in_view(w.spec(), pose, det, w.target_cell(target_id),
                      [&w](CellIndex c) { return w.is_obstacle(c); });
}

double heading_angle(Heading h) {
  switch (h) {
    case Heading::kEast: return 0.0;
    case Heading::kNorth: return 0.5 * kPi;
    case Heading::kWest: return -kPi;
    case Heading::kSouth: return -0.5 * kPi;
  }
  return 0.0;
}

Heading snap_heading(double theta) {
  const double q = std::round(normalize_angle(theta) / (0.5 * kPi));
  const int k = ((static_cast<int>(q) % 4) + 4) % 4;
  return static_cast<Heading>(k);
}

const char* action_name(Action a) {
  switch (a) {
    case Action::kForward: return "forward";
    case Action::kBackward: return "backward";
    case Action::kLeft: return "left";
    case Action::kRight: return "right";
  }
  return "?";
}

Heading action_direction(Heading h, Action a) {
  const int base = static_cast<int>(h);
  int turn = 0;
  switch (a) {
    case Action::kForward: turn = 0; break;
    case Action::kLeft: turn = 1; break;
    case Action::kBackward: turn = 2; break;
    case Action::kRight: turn = 3; break;
  }
  return static_cast<Heading>((base + turn) % 4);
}

Action action_towards(Heading h, Heading dir) {
  switch ((static_cast<int>(dir) - static_cast<int>(h) + 4) % 4) {
    case 0: return Action::kForward;
    case 1: return Action::kLeft;
    case 2: return Action::kBackward;
    default: return Action::kRight;
  }
}

AgentState make_agent(const World& w, const Pose2D& start) {
  AgentState s;
  s.pose = start;
  s.resolution = w.spec().resolution;
  s.visited.push_back(start.position());
  return s;
}

std::optional<AgentState> step_agent(const World& w, const AgentState& s, Action a) {
  const Heading h = snap_heading(s.pose.theta);
  const Heading dir = action_direction(h, a);
  const CellIndex off = heading_offset(dir);
  const CellIndex from = s.cell(w.spec());
  const CellIndex to{from.ix + off.ix, from.iy + off.iy};
  if (w.is_obstacle(to)) return std::nullopt;
  AgentState next = s;
  const Vec2 p = cell_to_world(to, w.spec());
  next.pose.x = p.x;
  next.pose.y = p.y;
  next.pose.theta = heading_angle(dir);
  ++next.steps;
  next.visited.push_back(p);
  return next;
}

std::vector<int> geodesic_distances(const World& w, CellIndex from) {
  const GridSpec& spec = w.spec();
  std::vector<int> dist(spec.cell_count(), -1);
  if (w.is_obstacle(from)) return dist;
  std::deque<CellIndex> queue{from};
  dist[flat_index(spec, from)] = 0;
  while (!queue.empty()) {
    const CellIndex c = queue.front();
    queue.pop_front();
    const int dc = dist[flat_index(spec, c)];
    for (CellIndex d : kNeighbors) {
      const CellIndex n{c.ix + d.ix, c.iy + d.iy};
      if (w.is_obstacle(n)) continue;
      int& dn = dist[flat_index(spec, n)];
      if (dn != -1) continue;
      dn = dc + 1;
      queue.push_back(n);
    }
  }
  return dist;
}

double shortest_path_length(const World& w, const Pose2D& a, Vec2 b) {
  const CellIndex ca = world_to_cell(a.position(), w.spec());
  const CellIndex cb = world_to_cell(b, w.spec());
  if (w.is_obstacle(ca) || w.is_obstacle(cb)) {
    throw WorldError("shortest_path_length: endpoint not in free space");
  }
  const std::vector<int> dist = geodesic_distances(w, ca);
  const int d = dist[flat_index(w.spec(), cb)];
  if (d < 0) throw WorldError("shortest_path_length: target unreachable");
  return d * w.spec().resolution;
}

std::optional<double> success_path_length(const World& w, const Pose2D& start,
                                          int target_id, const FovModel& fov) {
  // BFS over (cell, heading). Heading slot 4 is the unsnapped start heading,
  // which only the start cell can have.
  const GridSpec& spec = w.spec();
  const CellIndex c0 = world_to_cell(start.position(), spec);
  if (w.is_obstacle(c0)) throw WorldError("success_path_length: start not free");
  const Vec2 target = w.target(target_id);
  auto pose_of = [&](CellIndex c, int slot) {
    const Vec2 p = cell_to_world(c, spec);
    const double theta = slot == 4 ? start.theta : heading_angle(static_cast<Heading>(slot));
    return Pose2D{p.x, p.y, theta};
  };
  auto within_range = [&](CellIndex c) {
    const Vec2 p = cell_to_world(c, spec);
    return std::hypot(target.x - p.x, target.y - p.y) <= fov.detection_radius + 1e-12;
  };
  std::vector<std::uint8_t> seen(spec.cell_count() * 5, 0);
  struct Node {
    CellIndex c;
    int slot;
    long depth;
  };
  std::deque<Node> queue{{c0, 4, 0}};
  seen[flat_index(spec, c0) * 5 + 4] = 1;
  // Start pose may sit off the cell center; test it as given.
  if (detect_target(w, start, target_id, fov)) return 0.0;
  while (!queue.empty()) {
    const Node n = queue.front();
    queue.pop_front();
    if (n.depth > 0 && within_range(n.c) && detect_target(w, pose_of(n.c, n.slot), target_id, fov)) {
      return n.depth * spec.resolution;
    }
    const Heading h = n.slot == 4 ? snap_heading(start.theta) : static_cast<Heading>(n.slot);
    for (Action a : {Action::kForward, Action::kBackward, Action::kLeft, Action::kRight}) {
      const Heading dir = action_direction(h, a);
      const CellIndex off = heading_offset(dir);
      const CellIndex next{n.c.ix + off.ix, n.c.iy + off.iy};
      if (w.is_obstacle(next)) continue;
      const int slot = static_cast<int>(dir);
      std::uint8_t& mark = seen[flat_index(spec, next) * 5 + slot];
      if (mark) continue;
      mark = 1;
      queue.push_back({next, slot, n.depth + 1});
    }
  }
  return std::nullopt;
}

}  // namespace con
