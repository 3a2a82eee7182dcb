#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <stdexcept>
#include <string>

#include "con/harness.hpp"

namespace con {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void ScenarioConfig::validate() const {
  require(pe >= 0.0 && pe <= 1.0, "pe must be in [0, 1]");
  require(step_budget >= 0, "step_budget must be >= 0");
  fov.validate();
  require(waypoint_spacing > 0.0, "waypoint_spacing must be > 0");
  require(frontier_min_steps >= 1, "frontier_min_steps must be >= 1");
  require(visited_radius >= 0.0, "visited_radius must be >= 0");
  require(sparsity_threshold >= 0.0 && sparsity_threshold <= 1.0,
          "sparsity_threshold must be in [0, 1]");
  require(tau >= 0.0 && tau <= 1.0, "tau must be in [0, 1]");
  require(hypotheses >= 1 && static_cast<std::size_t>(hypotheses) <= kMaxWireHypotheses, "hypotheses must be in [1, 5]");
  require(embedding.dim >= 1 && embedding.dim <= 4096, "descriptor_dim must be in [1, 4096]");
  require(embedding.block_cells >= 1, "block_cells must be >= 1");
  require(embedding.target_weight > 0.0, "target_weight must be > 0");
  require(teacher.walk_steps >= 0, "teacher_walk_steps must be >= 0");
  require(teacher.min_frontier_distance >= 0.0, "min_frontier_distance must be >= 0");
  require(teacher.start_distance > 0.0, "start_distance must be > 0");
}

std::vector<CurveSpec> ExperimentConfig::effective_curves() const {
  if (!curves.empty()) return curves;
  return {CurveSpec{base.scenario, base.method, base.pe}};
}

void ExperimentConfig::validate() const {
  base.validate();
  world.validate();
  require(!world_seeds.empty(), "world_seeds must not be empty");
  require(!episode_seeds.empty(), "episode_seeds must not be empty");
  require(targets >= 1, "targets must be >= 1");
  require(threads >= 1 && threads <= 256, "threads must be in [1, 256]");
  for (const CurveSpec& c : curves) {
    require(c.pe >= 0.0 && c.pe <= 1.0, "curve pe must be in [0, 1]");
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(std::string_view(s).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T to_number(const std::string& s) {
  T v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("bad number '" + s + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite number '" + s + "'");
  }
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("bad boolean '" + s + "'");
}

/// Comma list of integers and inclusive ranges "a-b".
template <class T>
std::vector<T> to_int_list(const std::string& s) {
  std::vector<T> out;
  for (const std::string& item : split(s, ',')) {
    const auto dash = item.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(to_number<T>(item));
      continue;
    }
    const T lo = to_number<T>(trim(std::string_view(item).substr(0, dash)));
    const T hi = to_number<T>(trim(std::string_view(item).substr(dash + 1)));
    if (hi < lo || hi - lo > 100000) throw std::invalid_argument("bad range '" + item + "'");
    for (T v = lo;; ++v) {
      out.push_back(v);
      if (v == hi) break;
    }
  }
  return out;
}

CurveSpec to_curve(const std::string& s) {
  const auto first = s.find('/');
  const auto last = s.rfind('/');
  if (first == std::string::npos || first == last) {
    throw std::invalid_argument("curve must be scenario/method/pe, got '" + s + "'");
  }
  CurveSpec c;
  c.scenario = parse_scenario(trim(std::string_view(s).substr(0, first)));
  c.method = parse_method(trim(std::string_view(s).substr(first + 1, last - first - 1)));
  c.pe = to_number<double>(trim(std::string_view(s).substr(last + 1)));
  return c;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"scenario", [](auto& c, const auto& v) { c.base.scenario = parse_scenario(v); }},
      {"method", [](auto& c, const auto& v) { c.base.method = parse_method(v); }},
      {"pe", [](auto& c, const auto& v) { c.base.pe = to_number<double>(v); }},
      {"curves",
       [](auto& c, const auto& v) {
         c.curves.clear();
         for (const auto& item : split(v, ',')) c.curves.push_back(to_curve(item));
       }},
      {"world_seeds", [](auto& c, const auto& v) { c.world_seeds = to_int_list<std::uint64_t>(v); }},
      {"episode_seeds",
       [](auto& c, const auto& v) { c.episode_seeds = to_int_list<std::uint64_t>(v); }},
      {"targets", [](auto& c, const auto& v) { c.targets = to_number<int>(v); }},
      {"target_ids", [](auto& c, const auto& v) { c.target_ids = to_int_list<int>(v); }},
      {"threads", [](auto& c, const auto& v) { c.threads = to_number<int>(v); }},
      {"step_budget", [](auto& c, const auto& v) { c.base.step_budget = to_number<long>(v); }},
      {"view_radius", [](auto& c, const auto& v) { c.base.fov.view_radius = to_number<double>(v); }},
      {"view_angle_deg",
       [](auto& c, const auto& v) { c.base.fov.view_angle = to_number<double>(v) * kPi / 180.0; }},
      {"detection_radius",
       [](auto& c, const auto& v) { c.base.fov.detection_radius = to_number<double>(v); }},
      {"waypoint_spacing",
       [](auto& c, const auto& v) { c.base.waypoint_spacing = to_number<double>(v); }},
      {"subgoal_view",
       [](auto& c, const auto& v) {
         if (v != "detection" && v != "full") {
           throw std::invalid_argument("expected detection or full, got '" + v + "'");
         }
         c.base.subgoal_detection_view = v == "detection";
       }},
      {"nearest_when_uninformed",
       [](auto& c, const auto& v) { c.base.nearest_when_uninformed = to_bool(v); }},
      {"frontier_min_steps",
       [](auto& c, const auto& v) { c.base.frontier_min_steps = to_number<long>(v); }},
      {"stop_at_vantage", [](auto& c, const auto& v) { c.base.stop_at_vantage = to_bool(v); }},
      {"visited_rule",
       [](auto& c, const auto& v) {
         if (v != "radius" && v != "radius_seen") {
           throw std::invalid_argument("expected radius or radius_seen, got '" + v + "'");
         }
         c.base.visited_requires_seen = v == "radius_seen";
       }},
      {"visited_radius", [](auto& c, const auto& v) { c.base.visited_radius = to_number<double>(v); }},
      {"theta",
       [](auto& c, const auto& v) { c.base.sparsity_threshold = to_number<double>(v); }},
      {"tau", [](auto& c, const auto& v) { c.base.tau = to_number<double>(v); }},
      {"hypotheses", [](auto& c, const auto& v) { c.base.hypotheses = to_number<int>(v); }},
      {"descriptor_dim", [](auto& c, const auto& v) { c.base.embedding.dim = to_number<int>(v); }},
      {"embedding_seed",
       [](auto& c, const auto& v) { c.base.embedding.seed = to_number<std::uint64_t>(v); }},
      {"block_cells",
       [](auto& c, const auto& v) { c.base.embedding.block_cells = to_number<int>(v); }},
      {"target_weight",
       [](auto& c, const auto& v) { c.base.embedding.target_weight = to_number<double>(v); }},
      {"teacher_walk_steps",
       [](auto& c, const auto& v) { c.base.teacher.walk_steps = to_number<long>(v); }},
      {"min_frontier_distance",
       [](auto& c, const auto& v) { c.base.teacher.min_frontier_distance = to_number<double>(v); }},
      {"start_distance",
       [](auto& c, const auto& v) { c.base.teacher.start_distance = to_number<double>(v); }},
      {"likelihood_weighted",
       [](auto& c, const auto& v) { c.base.merge.likelihood_weighted = to_bool(v); }},
      {"world_width", [](auto& c, const auto& v) { c.world.width = to_number<int>(v); }},
      {"world_height", [](auto& c, const auto& v) { c.world.height = to_number<int>(v); }},
      {"world_rooms", [](auto& c, const auto& v) { c.world.rooms = to_number<int>(v); }},
      {"world_min_room_cells",
       [](auto& c, const auto& v) { c.world.min_room_cells = to_number<int>(v); }},
      {"world_door_cells", [](auto& c, const auto& v) { c.world.door_cells = to_number<int>(v); }},
      {"world_furniture",
       [](auto& c, const auto& v) { c.world.furniture_per_room = to_number<int>(v); }},
      {"world_targets", [](auto& c, const auto& v) { c.world.targets = to_number<int>(v); }},
  };
  return table;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw std::invalid_argument(where + "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw std::invalid_argument(where + "unknown key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + key + ": " + e.what());
    }
  }
  cfg.base.teacher.fov = cfg.base.fov;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config '" + path + "'");
  return parse_experiment_config(in);
}

}  // namespace con
