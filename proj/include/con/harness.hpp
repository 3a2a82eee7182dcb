#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "con/perception.hpp"
#include "con/proxy.hpp"
#include "con/teacher.hpp"
#include "con/world.hpp"

namespace con {

enum class Method { kProposed, kWithoutMerge, kFrontier };

/// "proposed", "w/o_merge", "frontier".
std::string_view method_name(Method m);
/// Also accepts "wo_merge". Throws std::invalid_argument.
Method parse_method(std::string_view s);

struct ScenarioConfig {
  Scenario scenario = Scenario::kConstrainedStart;
  Method method = Method::kProposed;
  double pe = 0.0;
  long step_budget = 4000;
  FovModel fov{};
  double waypoint_spacing = 0.5;
  /// Simulate subgoal observations at detection range instead of the full
  /// view radius.
  bool subgoal_detection_view = true;
  /// End the local plan at the first waypoint that realizes the subgoal value.
  bool stop_at_vantage = true;
  /// When every candidate scores zero, take the nearest one instead of the
  /// lexicographic tie-break.
  bool nearest_when_uninformed = true;
  /// Moves along a local plan before the frontier stop may end it.
  long frontier_min_steps = 1;
  double visited_radius = 1.0;
  /// Visited exclusion also requires the cell to have been in a
  /// detection-range view.
  bool visited_requires_seen = true;
  double sparsity_threshold = kDefaultSparsityThreshold;
  double tau = 0.0;
  int hypotheses = kDefaultHypotheses;
  EmbeddingParams embedding{};
  TeacherParams teacher{};
  MergeOptions merge{};

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
};

struct EpisodeResult {
  int target_id = 0;
  std::uint64_t seed = 0;
  bool success = false;
  double p = 0.0;           // meters traveled
  double l = 0.0;           // shortest success path, meters
  long steps = 0;           // actions issued, collisions included
  std::uint64_t query_bytes = 0;
  std::uint64_t response_bytes = 0;
  int queries = 0;
  int merges = 0;
  std::string end;          // detected / exploration_complete / budget / stalled

  /// s * l / max(p, l); 0 when l == 0.
  double spl_term() const;
};

/// Mean of s * l / max(p, l). Results with l <= 0 are skipped and counted in
/// `excluded` when given. Throws std::invalid_argument for an empty list or
/// when nothing is left to score.
double compute_spl(std::span<const EpisodeResult> results, std::size_t* excluded = nullptr);

/// Shared per-world state for episodes.
struct EpisodeContext {
  const World* world = nullptr;
  const ViewEmbedder* embedder = nullptr;
  std::ostream* trace = nullptr;  // one line per planning cycle when set
};

/// Teacher history for one (target, seed, scenario).
TeacherDataset build_teacher_dataset(const EpisodeContext& ctx, const ScenarioConfig& config,
                                     int target_id, std::uint64_t seed);

/// One student episode. `dataset` is required for the proposed method and
/// ignored otherwise; when null it is built on demand. Throws WorldError if
/// the target cannot be detected from any reachable pose.
EpisodeResult run_episode(const EpisodeContext& ctx, const ScenarioConfig& config,
                          int target_id, std::uint64_t seed,
                          const TeacherDataset* dataset = nullptr);
EpisodeResult run_episode(const World& world, const ScenarioConfig& config, int target_id,
                          std::uint64_t seed);

struct CurveSpec {
  Scenario scenario = Scenario::kConstrainedStart;
  Method method = Method::kProposed;
  double pe = 0.0;
  friend auto operator<=>(const CurveSpec&, const CurveSpec&) = default;
};
/// "<scenario>/<method>/<pe>".
std::string curve_label(const CurveSpec& c);

struct ExperimentConfig {
  ScenarioConfig base{};
  WorldParams world{};
  std::vector<std::uint64_t> world_seeds{1};
  /// Explicit target ids; when empty the first `targets` ids of each world.
  std::vector<int> target_ids;
  int targets = 100;
  std::vector<std::uint64_t> episode_seeds{1};
  std::vector<CurveSpec> curves;  // empty: one curve from `base`
  int threads = 1;

  std::vector<CurveSpec> effective_curves() const;
  void validate() const;
};

/// Reads `key = value` lines; '#' starts a comment. Unknown keys, malformed
/// values and out-of-range settings throw std::invalid_argument with the
/// line number.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

struct EpisodeRow {
  CurveSpec curve{};
  std::uint64_t world_seed = 0;
  EpisodeResult result{};
};

struct CurveSummary {
  CurveSpec curve{};
  std::size_t episodes = 0;
  std::size_t excluded = 0;
  double mean_spl = 0.0;
  double success_rate = 0.0;
  /// Keyed by (world seed, target id); mean over episode seeds.
  std::map<std::pair<std::uint64_t, int>, double> per_target;
  /// per_target values sorted descending.
  std::vector<double> sorted_spl;
  double mean_query_bytes = 0.0;
  double mean_response_bytes = 0.0;
};

struct RunSummary {
  std::vector<EpisodeRow> rows;  // deterministic order
  std::vector<CurveSummary> curves;
  std::vector<std::string> errors;

  const CurveSummary* find(const CurveSpec& c) const;
};

RunSummary summarize(std::vector<EpisodeRow> rows, std::span<const CurveSpec> curves);

/// Runs every world x target x seed x curve cell. A failing cell is logged in
/// `errors` and skipped.
RunSummary run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

void write_csv(std::ostream& out, std::span<const EpisodeRow> rows);
std::vector<EpisodeRow> read_csv(std::istream& in);
/// Fixed-width text table, one line per curve.
void write_summary(std::ostream& out, const RunSummary& summary);

}  // namespace con
