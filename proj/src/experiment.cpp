#include <atomic>
#include <memory>
#include <mutex>
#include <ostream>
#include <thread>

#include "con/harness.hpp"

namespace con {

namespace {

struct Job {
  std::size_t world = 0;
  int target = 0;
  std::uint64_t seed = 0;
};

struct JobOutput {
  std::vector<EpisodeRow> rows;
  std::vector<std::string> errors;
};

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  const std::vector<CurveSpec> curves = config.effective_curves();

  std::vector<World> worlds;
  std::vector<std::unique_ptr<ViewEmbedder>> embedders;
  worlds.reserve(config.world_seeds.size());
  for (std::uint64_t s : config.world_seeds) {
    worlds.push_back(generate_world(s, config.world));
    embedders.push_back(
        std::make_unique<ViewEmbedder>(worlds.back(), config.base.fov, config.base.embedding));
  }

  std::vector<Job> jobs;
  for (std::size_t wi = 0; wi < worlds.size(); ++wi) {
    std::vector<int> ids = config.target_ids;
    if (ids.empty()) {
      for (const auto& [id, pos] : worlds[wi].targets()) {
        if (static_cast<int>(ids.size()) >= config.targets) break;
        ids.push_back(id);
      }
    }
    for (int id : ids) {
      for (std::uint64_t seed : config.episode_seeds) jobs.push_back({wi, id, seed});
    }
  }

  std::vector<JobOutput> outputs(jobs.size());
  auto run_job = [&](std::size_t j) {
    const Job& job = jobs[j];
    const EpisodeContext ctx{&worlds[job.world], embedders[job.world].get()};
    const std::uint64_t world_seed = config.world_seeds[job.world];
    JobOutput& out = outputs[j];
    // One teacher dataset per scenario, shared by all curves of the job.
    std::map<Scenario, std::optional<TeacherDataset>> datasets;
    for (const CurveSpec& curve : curves) {
      ScenarioConfig sc = config.base;
      sc.scenario = curve.scenario;
      sc.method = curve.method;
      sc.pe = curve.pe;
      sc.teacher.fov = sc.fov;
      try {
        const TeacherDataset* ds = nullptr;
        if (curve.method == Method::kProposed) {
          auto& slot = datasets[curve.scenario];
          if (!slot) slot = build_teacher_dataset(ctx, sc, job.target, job.seed);
          ds = &*slot;
        }
        EpisodeRow row;
        row.curve = curve;
        row.world_seed = world_seed;
        row.result = run_episode(ctx, sc, job.target, job.seed, ds);
        out.rows.push_back(std::move(row));
      } catch (const std::exception& e) {
        out.errors.push_back("world " + std::to_string(world_seed) + " target " +
                             std::to_string(job.target) + " seed " + std::to_string(job.seed) +
                             " " + curve_label(curve) + ": " + e.what());
      }
    }
  };

  std::mutex log_mu;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  auto worker = [&] {
    while (true) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      run_job(j);
      const std::size_t d = done.fetch_add(1) + 1;
      if (log != nullptr && (d % 100 == 0 || d == jobs.size())) {
        std::lock_guard<std::mutex> lock(log_mu);
        *log << "progress " << d << "/" << jobs.size() << '\n';
      }
    }
  };
  const int threads = std::min<int>(config.threads, static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<EpisodeRow> rows;
  std::vector<std::string> errors;
  for (JobOutput& o : outputs) {
    for (EpisodeRow& r : o.rows) rows.push_back(std::move(r));
    for (std::string& e : o.errors) errors.push_back(std::move(e));
  }
  RunSummary summary = summarize(std::move(rows), curves);
  summary.errors = std::move(errors);
  if (log != nullptr) {
    for (const std::string& e : summary.errors) *log << "error: " << e << '\n';
  }
  return summary;
}

}  // namespace con
