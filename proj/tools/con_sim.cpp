// con-sim: world generation, experiment runs and SPL summaries.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "con/harness.hpp"
#include "con/world.hpp"

namespace {

int gen_world(std::uint64_t seed, const std::string& out_path) {
  const con::World w = con::generate_world(seed, con::WorldParams{});
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
  con::save_world(w, out);
  std::cout << "world " << seed << ": " << w.spec().width << "x" << w.spec().height << ", "
            << w.targets().size() << " targets -> " << out_path << '\n';
  return 0;
}

int run(const std::string& config_path, const std::optional<std::string>& method,
        const std::optional<double>& pe, const std::optional<std::string>& scenario,
        const std::string& out_path) {
  con::ExperimentConfig cfg = con::load_experiment_config(config_path);
  auto curves = cfg.effective_curves();
  for (auto& c : curves) {
    if (method) c.method = con::parse_method(*method);
    if (pe) c.pe = *pe;
    if (scenario) c.scenario = con::parse_scenario(*scenario);
  }
  std::vector<con::CurveSpec> unique;
  for (const auto& c : curves) {
    if (std::find(unique.begin(), unique.end(), c) == unique.end()) unique.push_back(c);
  }
  cfg.curves = unique;
  cfg.validate();

  const con::RunSummary summary = con::run_experiment(cfg, &std::cerr);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
  con::write_csv(out, summary.rows);
  con::write_summary(std::cout, summary);
  return 0;
}

int spl(const std::string& in_path) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + in_path + "'");
  const con::RunSummary summary = con::summarize(con::read_csv(in), {});
  con::write_summary(std::cout, summary);
  for (const auto& c : summary.curves) {
    std::cout << con::curve_label(c.curve) << " sorted:";
    for (double v : c.sorted_spl) std::cout << ' ' << v;
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grid-world object navigation with teacher map transfer"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string world_out;
  auto* gen = app.add_subcommand("gen-world", "generate a world and save it");
  gen->add_option("--seed", seed, "world seed")->required();
  gen->add_option("--out", world_out, "output file")->required();

  std::string config_path;
  std::string csv_out;
  std::optional<std::string> method;
  std::optional<double> pe;
  std::optional<std::string> scenario;
  auto* runc = app.add_subcommand("run", "run an experiment config");
  runc->add_option("--config", config_path, "config file")->required();
  runc->add_option("--method", method, "override method on every curve");
  runc->add_option("--pe", pe, "override localization failure probability");
  runc->add_option("--scenario", scenario, "override scenario on every curve");
  runc->add_option("--out", csv_out, "results CSV")->required();

  std::string csv_in;
  auto* splc = app.add_subcommand("spl", "summarize a results CSV");
  splc->add_option("--in", csv_in, "results CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return gen_world(seed, world_out);
    if (*runc) return run(config_path, method, pe, scenario, csv_out);
    if (*splc) return spl(csv_in);
  } catch (const std::exception& e) {
    std::cerr << "con-sim: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
