#pragma once

// Action decision policies: judge whether the current state is recognizable
// and route to preparation (YES) or exploration (NO).

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "deform/recognizer.hpp"
#include "deform/record.hpp"
#include "deform/scene.hpp"
#include "deform/sim.hpp"

namespace deform::adp {

using Verdict = VerdictRecord;

enum class ActionChoice { Prepare, Explore };
ActionChoice decide(const Verdict& verdict);
std::string to_string(ActionChoice choice);

/// What a policy may look at. `privileged_state` is filled in only for policies
/// that declare they need it (the evaluation-only oracle policy).
struct JudgeContext {
  const scene::Observation& observation;
  const recognizer::Representation& representation;
  const scene::GrayImage& overlay;
  const sim::ObjectState* privileged_state = nullptr;
  std::string episode_id;
  int step = 0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual bool needs_privileged_state() const { return false; }
  virtual Verdict judge(const JudgeContext& ctx) = 0;
};

/// One policy instance per worker.
using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

/// Fixed answer regardless of input; a test double.
class ConstantPolicy final : public Policy {
 public:
  explicit ConstantPolicy(bool answer) : answer_(answer) {}
  std::string name() const override { return answer_ ? "always_yes" : "always_no"; }
  Verdict judge(const JudgeContext& ctx) override;

 private:
  bool answer_;
};

struct HeuristicParams {
  std::string profile = "default";
  double rope_nominal_length_px = 750.0;
  double rope_min_separation_fraction = 0.4;
  int rope_max_branches = 0;
  double cloth_min_area_ratio = 0.85;
  double cloth_min_corner_deg = 60.0;
  double cloth_max_corner_deg = 120.0;
};

/// Threshold checks on the recognizer's own diagnostics. Conservative by
/// design, and blind to geometric mistakes the diagnostics cannot see.
class HeuristicPolicy final : public Policy {
 public:
  explicit HeuristicPolicy(HeuristicParams params = {}) : params_(std::move(params)) {}
  std::string name() const override { return "heuristic"; }
  Verdict judge(const JudgeContext& ctx) override;
  const HeuristicParams& params() const { return params_; }

 private:
  HeuristicParams params_;
};

Verdict judge_heuristic(const recognizer::Representation& rep, const HeuristicParams& params);

class MalformedAnswer : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The last "ANSWER: YES" or "ANSWER: NO" in the text wins. Throws MalformedAnswer when neither appears.
bool parse_answer(const std::string& text);

}  // namespace deform::adp
