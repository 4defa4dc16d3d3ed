// Command-line front end: run experiments, generate OOD corpora, serve a stub
// judging endpoint, and recompute metrics from logs.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include <nlohmann/json.hpp>

#include "deform/experiment.hpp"
#include "deform/oracle.hpp"
#include "deform/record.hpp"
#include "deform/stub_vlm.hpp"

namespace fs = std::filesystem;
using namespace deform;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitHarness = 2;

int cmd_run(const std::string& config_path, const std::string& out_override, int episodes_override) {
  experiment::ExperimentConfig config;
  try {
    config = experiment::load_config(config_path);
    if (episodes_override > 0) config.n_episodes = episodes_override;
    if (!out_override.empty()) config.output_dir = out_override;
    config.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  experiment::RunSummary summary;
  try {
    summary = experiment::run(config, config.output_dir);
  } catch (const experiment::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  std::cout << summary.episodes.size() << " episodes -> " << config.output_dir << " (" << summary.wall_seconds
            << " s)\n";
  if (summary.series) {
    const auto& s = *summary.series;
    std::cout << "RR(0)=" << s.rr.front() << " RR(" << s.k_max << ")=" << s.rr.back() << "\n";
  }
  if (summary.harness_errors > 0) {
    std::cerr << summary.harness_errors << " episode(s) ended in a harness error\n";
    for (const auto& e : summary.episodes) {
      if (e.terminal == Terminal::HarnessError) std::cerr << "  " << e.episode_id << ": " << e.error << "\n";
    }
    return kExitHarness;
  }
  return kExitOk;
}

int cmd_oodgen(const std::string& kind_text, int n, std::uint64_t seed, const std::string& out) {
  if (n <= 0) {
    std::cerr << "--n must be positive\n";
    return kExitConfig;
  }
  sim::ObjectKind kind;
  try {
    kind = sim::object_kind_from_string(kind_text);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }
  fs::create_directories(out);
  const sim::SimConfig config;
  const auto orm = recognizer::default_orm(kind);
  const auto calib = scene::Calibration::standard();
  int recognizable = 0;
  nlohmann::json states = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    ood::OodSpec spec;
    spec.object_kind = kind;
    spec.seed = seed + static_cast<std::uint64_t>(i);
    const sim::ObjectState state = ood::generate(spec, config);
    const bool ok = oracle::is_recognizable(state, *orm, calib);
    recognizable += ok;
    const std::string name = sim::to_string(kind) + "_" + std::to_string(spec.seed) + ".json";
    std::ofstream f(fs::path(out) / name);
    if (!f) {
      std::cerr << "cannot write " << (fs::path(out) / name) << "\n";
      return kExitConfig;
    }
    f << state_to_json(state).dump() << "\n";
    states.push_back({{"file", name}, {"seed", spec.seed}, {"recognizable", ok}});
  }
  const nlohmann::json census = {{"object_kind", sim::to_string(kind)},
                                 {"n", n},
                                 {"base_seed", seed},
                                 {"recognizable", recognizable},
                                 {"census", static_cast<double>(recognizable) / n},
                                 {"states", states}};
  std::ofstream(fs::path(out) / "census.json") << census.dump(2) << "\n";
  std::cout << "census " << recognizable << "/" << n << " recognizable\n";
  return kExitOk;
}

stub::StubServer* g_server = nullptr;

int cmd_stub(const std::string& host, int port, const std::string& behavior, const std::string& script,
             const std::string& answers) {
  stub::StubConfig config;
  try {
    config.behavior = stub::behavior_from_string(behavior);
    if (config.behavior == stub::Behavior::Scripted) config.script = stub::load_script(script);
    if (config.behavior == stub::Behavior::OracleFile) config.answers = stub::load_answers(answers);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }
  stub::StubServer server(config);
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::cout << "stub judge (" << behavior << ") on " << host << ":" << port << config.path << std::endl;
  try {
    server.listen(host, port);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

int cmd_metrics(const std::string& log, int k_max, const std::string& out) {
  try {
    const auto s = experiment::recompute(log, k_max, out.empty() ? fs::path(log).parent_path() : fs::path(out));
    std::cout << s.episodes.size() << " episodes, " << s.harness_errors << " harness errors\n";
    return s.harness_errors > 0 ? kExitHarness : kExitOk;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deformable-object recognizability experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int episodes = 0;
  auto* run = app.add_subcommand("run", "Run a batch of episodes from a config file (or a previous manifest)");
  run->add_option("config", config_path, "YAML config or manifest.json")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run->add_option("--episodes", episodes, "Number of episodes (overrides n_episodes)");

  std::string kind = "rope", gen_out = "corpus";
  int n = 10;
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("oodgen", "Generate out-of-distribution states and a recognizability census");
  gen->add_option("--kind", kind, "rope or cloth");
  gen->add_option("--n", n, "Number of states");
  gen->add_option("--seed", seed, "First seed");
  gen->add_option("--out", gen_out, "Output directory");

  std::string host = "127.0.0.1", behavior = "always_no", script, answers;
  int port = 8765;
  auto* stub_cmd = app.add_subcommand("stub-vlm", "Serve a stand-in judging endpoint");
  stub_cmd->add_option("--host", host);
  stub_cmd->add_option("--port", port);
  stub_cmd->add_option("--behavior", behavior, "always_yes|always_no|scripted|oracle_file");
  stub_cmd->add_option("--script", script, "Responses for 'scripted', one per line");
  stub_cmd->add_option("--answers", answers, "JSON lines of {overlay_sha256, recognizable} for 'oracle_file'");

  std::string log;
  int k_max = metrics::kDefaultKMax;
  std::string metrics_out;
  auto* met = app.add_subcommand("metrics", "Recompute metrics.csv and rates.json from an episode log");
  met->add_option("episodes", log, "episodes.jsonl")->required()->check(CLI::ExistingFile);
  met->add_option("--k-max", k_max);
  met->add_option("--out", metrics_out, "Output directory (default: next to the log)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  if (*run) return cmd_run(config_path, out_dir, episodes);
  if (*gen) return cmd_oodgen(kind, n, seed, gen_out);
  if (*stub_cmd) return cmd_stub(host, port, behavior, script, answers);
  if (*met) return cmd_metrics(log, k_max, metrics_out);
  return kExitConfig;
}
