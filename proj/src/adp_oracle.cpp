#include "deform/adp_oracle.hpp"

#include <stdexcept>

namespace deform::adp {

Verdict judge_oracle(const sim::ObjectState&, const recognizer::Representation& rep, const oracle::GroundTruth& gt) {
  Verdict v;
  v.source = "oracle";
  v.recognizable = oracle::is_valid(rep, gt);
  v.reasoning = v.recognizable ? "keypoints within tolerance of ground truth"
                               : (rep.extracted() ? "keypoints off ground truth" : "extraction failed");
  return v;
}

Verdict OraclePolicy::judge(const JudgeContext& ctx) {
  if (ctx.privileged_state == nullptr) throw std::logic_error("oracle policy needs the simulator state");
  const auto gt = oracle::ground_truth_of(*ctx.privileged_state, ctx.observation.calib, epsilon_px_);
  return judge_oracle(*ctx.privileged_state, ctx.representation, gt);
}

}  // namespace deform::adp
