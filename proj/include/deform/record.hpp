#pragma once

// Episode logs: everything needed to recompute every metric offline.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "deform/recognizer.hpp"
#include "deform/sim.hpp"

namespace deform::recognizer {
void to_json(nlohmann::json& j, const Representation& r);
void from_json(const nlohmann::json& j, Representation& r);
}  // namespace deform::recognizer

namespace deform {

inline constexpr int kRecordSchema = 1;

enum class Classification { TP, FP, TN, FN };
enum class ActionTaken { None, Explore, Prepare };
enum class Terminal { Transitioned, ExplorationBudgetExhausted, GraspFailedTerminal, HarnessError };

/// TP: recognizable and judged so; FN: recognizable, judged not; TN: neither; FP: judged recognizable but is not.
constexpr Classification classify_step(bool gt_recognizable, bool judged_recognizable) {
  if (gt_recognizable) return judged_recognizable ? Classification::TP : Classification::FN;
  return judged_recognizable ? Classification::FP : Classification::TN;
}

std::string to_string(Classification c);
std::string to_string(ActionTaken a);
std::string to_string(Terminal t);
Classification classification_from_string(const std::string& s);
ActionTaken action_from_string(const std::string& s);
Terminal terminal_from_string(const std::string& s);

struct VerdictRecord {
  bool recognizable = false;
  std::string source;  // oracle | heuristic | remote | scripted
  std::string reasoning;
  bool malformed = false;
  std::string prompt;        // remote policies only
  std::string raw_response;  // remote policies only
};

struct StepRecord {
  int index = 0;  // explorations executed before this judgment
  bool gt_recognizable = false;
  bool judged_recognizable = false;
  Classification classification = Classification::TN;
  ActionTaken action = ActionTaken::None;
  recognizer::Representation representation;
  VerdictRecord verdict;
  /// Preparation outcome when action == Prepare.
  std::optional<bool> prepare_succeeded;
  std::vector<std::string> grasp_errors;
};

struct EpisodeRecord {
  std::string episode_id;
  std::uint64_t seed = 0;
  sim::ObjectKind object_kind = sim::ObjectKind::Rope;
  std::string policy;
  std::vector<StepRecord> steps;
  Terminal terminal = Terminal::HarnessError;
  bool bottleneck_verified = false;
  bool final_task_success = false;
  int explorations = 0;
  int prepares = 0;
  /// Exploration counts at which the mask had been stable (IoU > 0.98) for 3 explorations running.
  std::vector<int> stable_state_at;
  std::string error;
  double wall_seconds = 0.0;
};

void to_json(nlohmann::json& j, const StepRecord& s);
void from_json(const nlohmann::json& j, StepRecord& s);
void to_json(nlohmann::json& j, const EpisodeRecord& e);
void from_json(const nlohmann::json& j, EpisodeRecord& e);

std::string to_jsonl_line(const EpisodeRecord& e);
EpisodeRecord episode_from_jsonl_line(const std::string& line);
/// Reads every non-empty line of a JSONL episode log.
std::vector<EpisodeRecord> read_episode_log(const std::string& path);

/// Particle state snapshot for corpora.
nlohmann::json state_to_json(const sim::ObjectState& state);
sim::ObjectState state_from_json(const nlohmann::json& j);

}  // namespace deform
