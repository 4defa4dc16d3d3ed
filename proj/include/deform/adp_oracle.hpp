#pragma once

// Perfect-knowledge decision policy: an upper bound for the harness. It reads
// the simulator state and therefore lives apart from the deployable policies.

#include "deform/adp.hpp"
#include "deform/oracle.hpp"

namespace deform::adp {

class OraclePolicy final : public Policy {
 public:
  explicit OraclePolicy(double epsilon_px = oracle::kDefaultEpsilonPx) : epsilon_px_(epsilon_px) {}
  std::string name() const override { return "oracle"; }
  bool needs_privileged_state() const override { return true; }
  Verdict judge(const JudgeContext& ctx) override;

 private:
  double epsilon_px_;
};

Verdict judge_oracle(const sim::ObjectState& state, const recognizer::Representation& rep,
                     const oracle::GroundTruth& gt);

}  // namespace deform::adp
