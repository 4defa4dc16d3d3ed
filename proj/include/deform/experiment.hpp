#pragma once

// Experiment configuration and the batch harness behind the command line.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "deform/adp.hpp"
#include "deform/adp_remote.hpp"
#include "deform/metrics.hpp"
#include "deform/ood.hpp"
#include "deform/pipeline.hpp"

namespace deform::experiment {

inline constexpr const char* kArtifactName = "deform";
inline constexpr const char* kArtifactVersion = "1.0.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PolicyKind { Oracle, Heuristic, Remote, AlwaysYes, AlwaysNo };
std::string to_string(PolicyKind kind);

struct RemoteSettings {
  adp::RemoteConfig client;
  std::string template_path = "templates/rope_judge.yaml";
};

struct ExperimentConfig {
  sim::ObjectKind object_kind = sim::ObjectKind::Rope;
  int n_episodes = 30;
  std::uint64_t base_seed = 0;
  PolicyKind policy = PolicyKind::Oracle;
  adp::HeuristicParams heuristic;
  RemoteSettings remote;
  std::string orm;  // empty: the default recognizer for the object kind
  double epsilon_px = 30.0;
  int k_max = metrics::kDefaultKMax;
  int parallelism = 1;
  std::string output_dir = "runs/out";
  ood::OodSpec ood;  // object_kind and seed are filled per episode
  pipeline::PipelineConfig pipeline;

  void validate() const;
  /// One spec per episode, seeds base_seed .. base_seed + n - 1.
  std::vector<ood::OodSpec> episode_specs() const;
};

/// Parses YAML text; errors name the file, line and dotted field. A manifest
/// written by a previous run is accepted too: its "config" block is used.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<string>");
ExperimentConfig load_config(const std::string& path);

nlohmann::json to_json(const ExperimentConfig& c);

/// Ground-truth labeller for logs (evaluation only).
pipeline::GroundTruthFn oracle_labeller(const scene::Calibration& calib, double epsilon_px);

adp::PolicyFactory make_policy_factory(const ExperimentConfig& c);
pipeline::OrmFactory make_orm_factory(const ExperimentConfig& c);

struct RunSummary {
  std::vector<EpisodeRecord> episodes;
  std::optional<metrics::MetricSeries> series;
  metrics::RateSummary rates;
  int harness_errors = 0;
  double wall_seconds = 0.0;
};

/// Runs every episode and writes episodes.jsonl, metrics.csv, rates.json and manifest.json.
RunSummary run(const ExperimentConfig& c, const std::filesystem::path& out_dir);

/// Recomputes metrics.csv and rates.json from an episode log.
RunSummary recompute(const std::string& episodes_path, int k_max, const std::filesystem::path& out_dir);

}  // namespace deform::experiment
