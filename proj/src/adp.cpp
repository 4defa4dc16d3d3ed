#include "deform/adp.hpp"

#include <regex>
#include <sstream>

namespace deform::adp {

ActionChoice decide(const Verdict& verdict) {
  return verdict.recognizable ? ActionChoice::Prepare : ActionChoice::Explore;
}

std::string to_string(ActionChoice choice) { return choice == ActionChoice::Prepare ? "prepare" : "explore"; }

Verdict ConstantPolicy::judge(const JudgeContext&) {
  Verdict v;
  v.recognizable = answer_;
  v.source = "scripted";
  return v;
}

Verdict judge_heuristic(const recognizer::Representation& rep, const HeuristicParams& p) {
  Verdict v;
  v.source = "heuristic";
  if (!rep.extracted()) {
    v.reasoning = "extraction failed: " + rep.violated_assumption;
    return v;
  }
  const auto& d = rep.diagnostics;
  std::ostringstream why;
  bool ok = true;
  if (rep.kind == sim::ObjectKind::Rope) {
    const double min_sep = p.rope_min_separation_fraction * p.rope_nominal_length_px;
    if (d.keypoint_separation_px < min_sep) {
      ok = false;
      why << "endpoint separation " << d.keypoint_separation_px << " px below " << min_sep << " px; ";
    }
    if (d.branch_count > p.rope_max_branches) {
      ok = false;
      why << d.branch_count << " skeleton branches; ";
    }
  } else {
    if (d.area_ratio < p.cloth_min_area_ratio) {
      ok = false;
      why << "area ratio " << d.area_ratio << " below " << p.cloth_min_area_ratio << "; ";
    }
    for (double a : d.keypoint_angles_deg) {
      if (a < p.cloth_min_corner_deg || a > p.cloth_max_corner_deg) {
        ok = false;
        why << "corner angle " << a << " deg outside [" << p.cloth_min_corner_deg << ", " << p.cloth_max_corner_deg
            << "]; ";
      }
    }
    if (d.keypoint_angles_deg.size() != 2) ok = false;
  }
  v.recognizable = ok;
  v.reasoning = ok ? "all diagnostic thresholds pass" : why.str();
  return v;
}

Verdict HeuristicPolicy::judge(const JudgeContext& ctx) { return judge_heuristic(ctx.representation, params_); }

bool parse_answer(const std::string& text) {
  static const std::regex token(R"(ANSWER:\s*(YES|NO))");
  std::optional<bool> last;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), token); it != std::sregex_iterator(); ++it) {
    last = (*it)[1].str() == "YES";
  }
  if (!last) throw MalformedAnswer("response contains neither \"ANSWER: YES\" nor \"ANSWER: NO\"");
  return *last;
}

}  // namespace deform::adp
