#include <algorithm>
#include <ostream>
#include <optional>
#include <stdexcept>

#include "con/harness.hpp"
#include "con/planner.hpp"
#include "con/protocol.hpp"
#include "con/proxy.hpp"

namespace con {

TeacherDataset build_teacher_dataset(const EpisodeContext& ctx, const ScenarioConfig& config,
                                     int target_id, std::uint64_t seed) {
  TeacherParams tp = config.teacher;
  tp.fov = config.fov;
  const Trajectory traj =
      generate_teacher_trajectory(*ctx.world, target_id, config.scenario, seed, tp);
  return make_teacher_dataset(*ctx.world, traj, *ctx.embedder);
}

namespace {

constexpr std::uint64_t kLocalizationTag = 0x4C4F43ULL;
constexpr std::uint64_t kFrontierTag = 0x46524F4EULL;
constexpr int kMaxStalls = 4;

/// Student map with cells below the sparsity threshold cleared, as the
/// planner sees it.
DenseScores thresholded(const DenseScores& m, double theta) {
  DenseScores out = m;
  for (std::size_t i = 0; i < out.primary.size(); ++i) {
    if (out.primary[i] < theta) {
      out.primary[i] = 0.0;
      out.secondary[i] = 0.0;
    }
  }
  return out;
}

std::vector<CellIndex> candidate_pool(const ObstacleMap& map, const VisitedMask& visited,
                                      CellIndex here) {
  const auto frontier = frontier_cells(map);
  std::vector<CellIndex> pool;
  for (CellIndex c : frontier) {
    if (!visited.excluded(c)) pool.push_back(c);
  }
  if (pool.empty()) {
    for (CellIndex c : frontier) {
      if (c != here) pool.push_back(c);
    }
  }
  if (pool.empty()) {
    // Only the agent's own cell borders unknown space (e.g. facing a wall at
    // the start): step into the unknown neighbors instead.
    for (CellIndex c : frontier) {
      for (CellIndex d : {CellIndex{1, 0}, CellIndex{-1, 0}, CellIndex{0, 1}, CellIndex{0, -1}}) {
        const CellIndex n{c.ix + d.ix, c.iy + d.iy};
        if (in_bounds(map.spec(), n) && map.at(n) == CellState::kUnknown) pool.push_back(n);
      }
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  }
  return pool;
}

}  // namespace

EpisodeResult run_episode(const EpisodeContext& ctx, const ScenarioConfig& config,
                          int target_id, std::uint64_t seed, const TeacherDataset* dataset) {
  config.validate();
  if (ctx.world == nullptr || ctx.embedder == nullptr) {
    throw std::invalid_argument("run_episode: incomplete context");
  }
  const World& w = *ctx.world;
  const ViewEmbedder& embedder = *ctx.embedder;
  const FovModel& fov = config.fov;
  const GridSpec& spec = w.spec();
  w.target(target_id);

  EpisodeResult r;
  r.target_id = target_id;
  r.seed = seed;

  const Pose2D start = sample_student_start(w, target_id, seed, config.teacher.start_distance);
  const auto shortest = success_path_length(w, start, target_id, fov);
  if (!shortest) {
    throw WorldError("run_episode: target " + std::to_string(target_id) +
                     " is not detectable from any reachable pose");
  }
  r.l = *shortest;

  const bool scored = config.method != Method::kFrontier;
  const FovModel sim_fov = config.subgoal_detection_view ? fov.detection_view() : fov;
  const bool exchange = config.method == Method::kProposed;

  AgentState state = make_agent(w, start);
  ObstacleMap omap(spec);
  VisitedMask visited(spec, config.visited_radius, config.visited_requires_seen);
  visited.add(start.position());
  DenseScores smap(spec);
  const ViewDescriptor target_query = embedder.embed(target_image_pose(w, target_id, fov));

  // Own observation: obstacle map, own object-map record, detection.
  auto observe = [&] {
    const auto vis = update_obstacle_map(omap, w, state.pose, fov);
    if (visited.require_seen()) {
      const detail::ArcTest in_detection(spec, state.pose, fov.detection_view());
      std::vector<CellIndex> near;
      for (CellIndex c : vis) {
        if (in_detection(c)) near.push_back(c);
      }
      visited.mark_seen(near);
    }
    if (scored) {
      const double s = similarity(embedder.embed_visible(vis), target_query);
      // Own views below the sparsity threshold carry no target evidence.
      if (s >= config.sparsity_threshold) {
        for (CellIndex c : vis) {
          const std::size_t i = flat_index(spec, c);
          smap.primary[i] = std::max(smap.primary[i], s);
          smap.secondary[i] += s;
        }
      }
    }
    return detect_target(w, state.pose, target_id, fov);
  };

  std::optional<TeacherDataset> owned;
  std::optional<StudentProxy> proxy;
  if (exchange) {
    if (dataset == nullptr) {
      owned = build_teacher_dataset(ctx, config, target_id, seed);
      dataset = &*owned;
    }
    ProxyConfig pc;
    pc.hypotheses = config.hypotheses;
    pc.tau = config.tau;
    pc.sparsity_threshold = config.sparsity_threshold;
    proxy.emplace(*dataset,
                  LocalizationModel(config.pe, derive_seed({seed, static_cast<std::uint64_t>(
                                                                      target_id),
                                                            kLocalizationTag})),
                  pc);
  }

  auto query_teacher = [&] {
    LocalizationQuery q{embedder.embed(state.pose), target_query, state.pose};
    const auto qframe = encode_query(q);
    r.query_bytes += qframe.size();
    ++r.queries;
    const auto true_place = proxy->oracle_place(wire_quantized(q).pose_hint);
    const auto rframe = proxy->handle_frame(qframe, true_place);
    r.response_bytes += rframe.size();
    const MapResponse resp = decode_response(rframe);
    if (!resp.rejected()) {
      merge_into(smap, resp, config.merge);
      ++r.merges;
    }
  };

  Rng frontier_rng(derive_seed({seed, static_cast<std::uint64_t>(target_id), kFrontierTag}));

  auto finish = [&](bool success, const char* why) {
    r.success = success;
    r.end = why;
    r.p = state.distance_traveled();
    return r;
  };

  if (observe()) return finish(true, "detected");

  bool need_query = exchange;
  int stalls = 0;
  while (true) {
    if (r.steps >= config.step_budget) return finish(false, "budget");
    if (need_query) {
      query_teacher();
      need_query = false;
    }
    const CellIndex here = state.cell(spec);
    std::vector<CellIndex> pool = candidate_pool(omap, visited, here);
    std::optional<LocalPlan> plan;
    if (config.method == Method::kFrontier) {
      while (!plan && !pool.empty()) {
        const auto pick = frontier_baseline_select(pool, frontier_rng);
        plan = make_local_plan(omap, here, *pick);
        if (!plan) pool.erase(std::find(pool.begin(), pool.end(), pick->cell));
      }
    } else {
      const DenseScores view_map = thresholded(smap, config.sparsity_threshold);
      const auto values = evaluate_candidates(pool, state.pose, view_map, omap, sim_fov,
                                              config.waypoint_spacing, visited);
      auto best = select_subgoal(values);
      if (best && config.nearest_when_uninformed && best->primary_value == 0.0 &&
          best->secondary_value == 0.0) {
        best = select_nearest(values);
      }
      if (best) {
        plan = make_local_plan(omap, here, *best);
        if (plan && config.stop_at_vantage) {
          const std::size_t k = vantage_index(plan->path, view_map, omap, sim_fov,
                                              config.waypoint_spacing, visited, *best);
          plan->path.resize(k + 1);
          plan->goal.cell = plan->path.back();
        }
      }
    }
    if (ctx.trace != nullptr) {
      *ctx.trace << "cycle step=" << r.steps << " at=(" << here.ix << ',' << here.iy
                 << ") pool=" << pool.size();
      if (plan) {
        *ctx.trace << " goal=(" << plan->goal.cell.ix << ',' << plan->goal.cell.iy
                   << ") value=" << plan->goal.primary_value << '/'
                   << plan->goal.secondary_value << " path=" << plan->path.size() - 1;
      }
      *ctx.trace << " merges=" << r.merges << '\n';
    }
    if (!plan) return finish(false, "exploration_complete");
    plan->frontier_min_steps = config.frontier_min_steps;

    bool moved = false;
    Terminal term = Terminal::kNoPath;
    while (true) {
      if (r.steps >= config.step_budget) return finish(false, "budget");
      const LocalStep st = local_plan_step(omap, state, *plan, visited);
      if (const auto* t = std::get_if<Terminal>(&st)) {
        term = *t;
        break;
      }
      const Action a = std::get<Action>(st);
      ++r.steps;
      const auto next = step_agent(w, state, a);
      if (!next) {
        const CellIndex off = heading_offset(action_direction(snap_heading(state.pose.theta), a));
        const CellIndex cur = state.cell(spec);
        const CellIndex hit{cur.ix + off.ix, cur.iy + off.iy};
        if (in_bounds(spec, hit)) omap.set(hit, CellState::kOccupied);
        continue;
      }
      state = *next;
      moved = true;
      if (observe()) return finish(true, "detected");
    }
    visited.add(state.pose.position());
    if (term == Terminal::kReached || term == Terminal::kFrontier) need_query = exchange;
    stalls = moved ? 0 : stalls + 1;
    if (stalls > kMaxStalls) return finish(false, "stalled");
  }
}

EpisodeResult run_episode(const World& world, const ScenarioConfig& config, int target_id,
                          std::uint64_t seed) {
  const ViewEmbedder embedder(world, config.fov, config.embedding);
  const EpisodeContext ctx{&world, &embedder};
  return run_episode(ctx, config, target_id, seed, nullptr);
}

}  // namespace con
