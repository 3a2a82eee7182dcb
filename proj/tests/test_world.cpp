#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "con/rng.hpp"
#include "con/teacher.hpp"
#include "con/world.hpp"

namespace {

using con::Action;
using con::CellIndex;
using con::FovModel;
using con::GridSpec;
using con::kPi;
using con::Pose2D;
using con::World;

/// Rows are given with iy = 0 first; '#' is an obstacle, 'T' a target (id in
/// order of appearance), anything else free.
World ascii_world(const std::vector<std::string>& rows) {
  GridSpec s;
  s.width = static_cast<int>(rows[0].size());
  s.height = static_cast<int>(rows.size());
  std::vector<std::uint8_t> occ(s.cell_count(), 0);
  std::map<int, con::Vec2> targets;
  for (int iy = 0; iy < s.height; ++iy) {
    for (int ix = 0; ix < s.width; ++ix) {
      const char ch = rows[static_cast<std::size_t>(iy)][static_cast<std::size_t>(ix)];
      if (ch == '#') occ[con::flat_index(s, {ix, iy})] = 1;
      if (ch == 'T') targets[static_cast<int>(targets.size())] = con::cell_to_world({ix, iy}, s);
    }
  }
  return World(s, std::move(occ), std::move(targets));
}

/// Open room of w x h cells with a one-cell boundary wall.
World open_room(int w, int h, std::map<int, con::Vec2> targets = {}) {
  GridSpec s;
  s.width = w;
  s.height = h;
  std::vector<std::uint8_t> occ(s.cell_count(), 0);
  for (int iy = 0; iy < h; ++iy) {
    for (int ix = 0; ix < w; ++ix) {
      if (ix == 0 || iy == 0 || ix == w - 1 || iy == h - 1) occ[con::flat_index(s, {ix, iy})] = 1;
    }
  }
  return World(s, std::move(occ), std::move(targets));
}

Pose2D at_cell(const World& w, CellIndex c, double theta) {
  const con::Vec2 p = con::cell_to_world(c, w.spec());
  return {p.x, p.y, theta};
}

/// Reference 4-connected BFS over ground-truth free cells.
std::vector<int> bfs_oracle(const World& w, CellIndex from) {
  const GridSpec& s = w.spec();
  std::vector<int> d(s.cell_count(), -1);
  if (w.is_obstacle(from)) return d;
  std::deque<CellIndex> q{from};
  d[con::flat_index(s, from)] = 0;
  const int dx[] = {1, -1, 0, 0};
  const int dy[] = {0, 0, 1, -1};
  while (!q.empty()) {
    const CellIndex c = q.front();
    q.pop_front();
    for (int k = 0; k < 4; ++k) {
      const CellIndex n{c.ix + dx[k], c.iy + dy[k]};
      if (w.is_obstacle(n) || d[con::flat_index(s, n)] >= 0) continue;
      d[con::flat_index(s, n)] = d[con::flat_index(s, c)] + 1;
      q.push_back(n);
    }
  }
  return d;
}

World random_world(std::uint64_t seed, int n, double density) {
  con::Rng rng(seed);
  GridSpec s;
  s.width = n;
  s.height = n;
  std::vector<std::uint8_t> occ(s.cell_count(), 0);
  for (auto& o : occ) o = con::uniform01(rng) < density ? 1 : 0;
  return World(s, std::move(occ), {});
}

TEST(GenerateWorld, Deterministic) {
  const World a = con::generate_world(5);
  const World b = con::generate_world(5);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == con::generate_world(6));
}

TEST(GenerateWorld, SingleRoomHasOnlyBoundaryWalls) {
  con::WorldParams p;
  p.rooms = 1;
  p.furniture_per_room = 0;
  const World w = con::generate_world(1, p);
  const GridSpec& s = w.spec();
  for (int iy = 0; iy < s.height; ++iy) {
    for (int ix = 0; ix < s.width; ++ix) {
      const bool boundary = ix == 0 || iy == 0 || ix == s.width - 1 || iy == s.height - 1;
      EXPECT_EQ(w.is_obstacle({ix, iy}), boundary) << ix << "," << iy;
    }
  }
}

TEST(GenerateWorld, FreeSpaceConnectedAndTargetsFree) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const World w = con::generate_world(seed);
    EXPECT_EQ(static_cast<int>(w.targets().size()), con::WorldParams{}.targets);
    const CellIndex t0 = w.target_cell(0);
    const auto d = bfs_oracle(w, t0);
    std::size_t reached = 0;
    for (int v : d) reached += v >= 0 ? 1 : 0;
    EXPECT_EQ(reached, w.free_cell_count()) << "seed " << seed;
    for (const auto& [id, p] : w.targets()) {
      EXPECT_TRUE(w.is_free(w.target_cell(id)));
      EXPECT_EQ(w.target_at(w.target_cell(id)), id);
    }
  }
}

TEST(WorldIo, RoundTrip) {
  const World w = con::generate_world(3);
  std::stringstream ss;
  con::save_world(w, ss);
  const std::string text = ss.str();
  EXPECT_EQ(text.rfind("CONWORLD v1 ", 0), 0u);
  const World back = con::load_world(ss);
  EXPECT_TRUE(back == w);
  std::stringstream again;
  con::save_world(back, again);
  EXPECT_EQ(again.str(), text);
}

TEST(WorldIo, RejectsMalformedInput) {
  std::stringstream bad("CONWORLD v2 3 3 0.1\n...\n...\n...\n");
  EXPECT_THROW(con::load_world(bad), con::WorldError);
  std::stringstream short_rows("CONWORLD v1 3 3 0.1\n...\n..\n...\n");
  EXPECT_THROW(con::load_world(short_rows), con::WorldError);
}

TEST(VisibleCells, ClosetBlocksEverythingOutside) {
  const World w = ascii_world({
      "..........",
      "...####...",
      "...#..#...",
      "...#..#...",
      "...####...",
      "..........",
  });
  FovModel fov;
  fov.view_angle = 2 * kPi;
  const auto vis = con::visible_cells(w, at_cell(w, {4, 2}, 0.3), fov);
  ASSERT_FALSE(vis.empty());
  for (const CellIndex& c : vis) {
    EXPECT_TRUE(c.ix >= 3 && c.ix <= 6 && c.iy >= 1 && c.iy <= 4) << c.ix << "," << c.iy;
  }
  for (CellIndex c : {CellIndex{4, 2}, CellIndex{5, 2}, CellIndex{4, 3}, CellIndex{5, 3}}) {
    EXPECT_TRUE(std::binary_search(vis.begin(), vis.end(), c));
  }
}

TEST(VisibleCells, SubCellRadiusSeesOwnCell) {
  const World w = open_room(10, 10);
  FovModel fov;
  fov.view_angle = 2 * kPi;
  fov.view_radius = 0.05;
  fov.detection_radius = 0.05;
  const auto vis = con::visible_cells(w, at_cell(w, {4, 4}, 1.0), fov);
  EXPECT_EQ(vis, (std::vector<CellIndex>{{4, 4}}));
}

TEST(VisibleCells, InsideDiskAndArc) {
  const World w = con::generate_world(2);
  const FovModel fov;
  con::Rng rng(4);
  int checked = 0;
  while (checked < 200) {
    const CellIndex c{static_cast<int>(con::uniform_index(rng, w.spec().width)),
                      static_cast<int>(con::uniform_index(rng, w.spec().height))};
    if (w.is_obstacle(c)) continue;
    const Pose2D pose = at_cell(w, c, -kPi + 2 * kPi * con::uniform01(rng));
    const auto vis = con::visible_cells(w, pose, fov);
    EXPECT_TRUE(std::is_sorted(vis.begin(), vis.end()));
    for (const CellIndex& v : vis) {
      const con::Vec2 p = con::cell_to_world(v, w.spec());
      const double dx = p.x - pose.x;
      const double dy = p.y - pose.y;
      EXPECT_LE(std::hypot(dx, dy), fov.view_radius + 1e-9);
      if (dx != 0.0 || dy != 0.0) {
        EXPECT_LE(std::abs(con::normalize_angle(std::atan2(dy, dx) - pose.theta)),
                  fov.view_angle / 2 + 1e-6);
      }
    }
    ++checked;
  }
}

TEST(VisibleCells, OpenSpaceSeesWholeArc) {
  // With nothing in the way, every cell center inside the arc is visible.
  const World w = open_room(100, 100);
  const FovModel fov;
  const Pose2D pose = at_cell(w, {50, 50}, 0.4);
  const auto vis = con::visible_cells(w, pose, fov);
  std::vector<CellIndex> expect;
  for (int iy = 10; iy < 90; ++iy) {
    for (int ix = 10; ix < 90; ++ix) {
      const con::Vec2 p = con::cell_to_world({ix, iy}, w.spec());
      const double dx = p.x - pose.x;
      const double dy = p.y - pose.y;
      if (std::hypot(dx, dy) > fov.view_radius) continue;
      if ((dx != 0.0 || dy != 0.0) &&
          std::abs(con::normalize_angle(std::atan2(dy, dx) - pose.theta)) > fov.view_angle / 2) {
        continue;
      }
      expect.push_back({ix, iy});
    }
  }
  std::sort(expect.begin(), expect.end());
  EXPECT_EQ(vis, expect);
}

TEST(DetectTarget, RangeAndArc) {
  const World w = open_room(60, 60, {{0, {3.05, 3.05}}, {1, {3.75, 3.05}}, {2, {1.05, 3.05}}});
  const Pose2D pose{2.05, 3.05, 0.0};
  EXPECT_TRUE(con::detect_target(w, pose, 0, FovModel{}));
  EXPECT_FALSE(con::detect_target(w, pose, 1, FovModel{}));
  EXPECT_FALSE(con::detect_target(w, pose, 2, FovModel{}));
}

TEST(DetectTarget, ImpliesTargetCellInDetectionView) {
  const World w = con::generate_world(8);
  const FovModel fov;
  con::Rng rng(9);
  int detections = 0;
  for (int i = 0; i < 3000; ++i) {
    const CellIndex c{static_cast<int>(con::uniform_index(rng, w.spec().width)),
                      static_cast<int>(con::uniform_index(rng, w.spec().height))};
    if (w.is_obstacle(c)) continue;
    const Pose2D pose = at_cell(w, c, con::heading_angle(static_cast<con::Heading>(i % 4)));
    const auto det = con::visible_cells(w, pose, fov.detection_view());
    for (const auto& [id, p] : w.targets()) {
      const bool in_view = std::binary_search(det.begin(), det.end(), w.target_cell(id));
      EXPECT_EQ(con::detect_target(w, pose, id, fov), in_view);
      detections += in_view ? 1 : 0;
    }
  }
  EXPECT_GT(detections, 0);
}

TEST(StepAgent, MovesAndCollides) {
  const World w = open_room(20, 5);
  con::AgentState s = con::make_agent(w, at_cell(w, {1, 2}, 0.0));
  auto next = con::step_agent(w, s, Action::kForward);
  ASSERT_TRUE(next);
  EXPECT_NEAR(next->pose.x - s.pose.x, 0.1, 1e-12);
  EXPECT_NEAR(next->distance_traveled(), 0.1, 1e-12);

  con::AgentState wall = con::make_agent(w, at_cell(w, {18, 2}, 0.0));
  EXPECT_FALSE(con::step_agent(w, wall, Action::kForward));

  for (int i = 0; i < 10; ++i) {
    auto n = con::step_agent(w, s, Action::kForward);
    ASSERT_TRUE(n);
    s = *n;
  }
  EXPECT_NEAR(s.distance_traveled(), 1.0, 1e-12);
  EXPECT_EQ(s.cell(w.spec()), (CellIndex{11, 2}));
}

TEST(StepAgent, FacesMotionDirection) {
  const World w = open_room(10, 10);
  const con::AgentState s = con::make_agent(w, at_cell(w, {4, 4}, 0.0));
  const auto left = con::step_agent(w, s, Action::kLeft);
  ASSERT_TRUE(left);
  EXPECT_EQ(left->cell(w.spec()), (CellIndex{4, 5}));
  EXPECT_NEAR(left->pose.theta, kPi / 2, 1e-12);
  const auto back = con::step_agent(w, s, Action::kBackward);
  ASSERT_TRUE(back);
  EXPECT_EQ(back->cell(w.spec()), (CellIndex{3, 4}));
  EXPECT_NEAR(back->pose.theta, -kPi, 1e-12);
}

TEST(StepAgent, NeverLeavesFreeSpace) {
  const World w = con::generate_world(4);
  con::Rng rng(5);
  const CellIndex start = w.target_cell(0);
  con::AgentState s = con::make_agent(w, at_cell(w, start, 0.0));
  for (int i = 0; i < 5000; ++i) {
    const auto a = static_cast<Action>(con::uniform_index(rng, 4));
    if (auto n = con::step_agent(w, s, a)) s = *n;
    ASSERT_TRUE(w.is_free(s.cell(w.spec())));
  }
}

TEST(ActionMapping, TowardsIsInverseOfDirection) {
  for (int h = 0; h < 4; ++h) {
    for (int d = 0; d < 4; ++d) {
      const auto head = static_cast<con::Heading>(h);
      const auto dir = static_cast<con::Heading>(d);
      EXPECT_EQ(con::action_direction(head, con::action_towards(head, dir)), dir);
    }
  }
}

TEST(ShortestPath, Examples) {
  const World w = open_room(40, 3);
  const Pose2D a = at_cell(w, {2, 1}, 0.0);
  EXPECT_DOUBLE_EQ(con::shortest_path_length(w, a, con::cell_to_world({2, 1}, w.spec())), 0.0);
  EXPECT_NEAR(con::shortest_path_length(w, a, con::cell_to_world({32, 1}, w.spec())), 3.0,
              1e-12);
  EXPECT_THROW(con::shortest_path_length(w, a, con::cell_to_world({0, 1}, w.spec())),
               con::WorldError);
}

TEST(ShortestPath, MatchesBfsOracleOnRandomWorlds) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const World w = random_world(seed, 20, 0.3);
    con::Rng rng(seed * 7);
    for (int k = 0; k < 5; ++k) {
      const CellIndex from{static_cast<int>(con::uniform_index(rng, 20)),
                           static_cast<int>(con::uniform_index(rng, 20))};
      if (w.is_obstacle(from)) continue;
      EXPECT_EQ(con::geodesic_distances(w, from), bfs_oracle(w, from));
    }
  }
}

TEST(ShortestPath, SymmetricAndTriangle) {
  const World w = con::generate_world(6);
  std::vector<CellIndex> free;
  for (int iy = 0; iy < w.spec().height; ++iy) {
    for (int ix = 0; ix < w.spec().width; ++ix) {
      if (w.is_free({ix, iy})) free.push_back({ix, iy});
    }
  }
  con::Rng rng(3);
  auto pick = [&] { return free[con::uniform_index(rng, free.size())]; };
  auto len = [&](CellIndex a, CellIndex b) {
    return con::shortest_path_length(w, at_cell(w, a, 0.0), con::cell_to_world(b, w.spec()));
  };
  for (int i = 0; i < 100; ++i) {
    const CellIndex a = pick();
    const CellIndex b = pick();
    const CellIndex c = pick();
    EXPECT_NEAR(len(a, b), len(b, a), 1e-9);
    EXPECT_LE(len(a, c), len(a, b) + len(b, c) + 1e-9);
  }
}

TEST(SuccessPathLength, ZeroWhenAlreadyDetecting) {
  const World w = open_room(30, 30, {{0, {1.55, 1.05}}});
  EXPECT_DOUBLE_EQ(*con::success_path_length(w, {1.05, 1.05, 0.0}, 0, FovModel{}), 0.0);
  // Facing away: every action is a move, so turning around costs one step.
  EXPECT_NEAR(*con::success_path_length(w, {1.05, 1.05, -kPi}, 0, FovModel{}), 0.1, 1e-12);
}

TEST(Teacher, DeterministicAndWellFormed) {
  const World w = con::generate_world(2);
  con::TeacherParams tp;
  tp.walk_steps = 300;
  const auto a = con::generate_teacher_trajectory(w, 3, con::Scenario::kConstrainedStart, 9, tp);
  const auto b = con::generate_teacher_trajectory(w, 3, con::Scenario::kConstrainedStart, 9, tp);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.points[i].pose, b.points[i].pose);
  EXPECT_TRUE(con::detect_target(w, a.front(), 3, tp.fov));
  EXPECT_GT(a.size(), 100u);
  for (std::size_t i = 1; i < a.size(); ++i) {
    const Pose2D& p = a.points[i - 1].pose;
    const Pose2D& q = a.points[i].pose;
    const double moved = std::hypot(q.x - p.x, q.y - p.y);
    const bool rotated = p.theta != q.theta;
    EXPECT_TRUE((moved < 1e-9 && rotated) || std::abs(moved - 0.1) < 1e-9) << i;
    EXPECT_TRUE(w.is_free(con::world_to_cell(q.position(), w.spec())));
  }
}

TEST(Teacher, ConstrainedStartGoalEndsOnStudentStart) {
  const World w = con::generate_world(2);
  con::TeacherParams tp;
  tp.walk_steps = 200;
  const auto t =
      con::generate_teacher_trajectory(w, 5, con::Scenario::kConstrainedStartGoal, 4, tp);
  EXPECT_EQ(t.back(), con::sample_student_start(w, 5, 4, tp.start_distance));
}

TEST(StudentStart, GeodesicDistanceNearTarget) {
  const World w = con::generate_world(2);
  for (int id = 0; id < 10; ++id) {
    const Pose2D s = con::sample_student_start(w, id, 1, 3.2);
    const auto d = bfs_oracle(w, w.target_cell(id));
    const int got = d[con::flat_index(w.spec(), con::world_to_cell(s.position(), w.spec()))];
    int best = -1;
    for (int v : d) {
      if (v >= 0 && (best < 0 || std::abs(v - 32) < std::abs(best - 32))) best = v;
    }
    EXPECT_EQ(std::abs(got - 32), std::abs(best - 32));
  }
}

}  // namespace
