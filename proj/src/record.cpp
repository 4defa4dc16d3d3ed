#include "deform/record.hpp"

#include <array>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace deform {
namespace {

template <typename E, std::size_t N>
E parse_enum(const std::string& s, const std::array<std::pair<E, const char*>, N>& table, const char* what) {
  for (const auto& [value, name] : table) {
    if (s == name) return value;
  }
  throw std::invalid_argument(std::string("unknown ") + what + " '" + s + "'");
}

template <typename E, std::size_t N>
std::string enum_name(E e, const std::array<std::pair<E, const char*>, N>& table) {
  for (const auto& [value, name] : table) {
    if (e == value) return name;
  }
  return "unknown";
}

constexpr std::array<std::pair<Classification, const char*>, 4> kClassNames{{
    {Classification::TP, "TP"}, {Classification::FP, "FP"}, {Classification::TN, "TN"}, {Classification::FN, "FN"}}};
constexpr std::array<std::pair<ActionTaken, const char*>, 3> kActionNames{{
    {ActionTaken::None, "none"}, {ActionTaken::Explore, "explore"}, {ActionTaken::Prepare, "prepare"}}};
constexpr std::array<std::pair<Terminal, const char*>, 4> kTerminalNames{{
    {Terminal::Transitioned, "transitioned"},
    {Terminal::ExplorationBudgetExhausted, "exploration_budget_exhausted"},
    {Terminal::GraspFailedTerminal, "grasp_failed_terminal"},
    {Terminal::HarnessError, "harness_error"}}};

nlohmann::json pixels_to_json(const std::vector<PixelIndex>& pts) {
  auto arr = nlohmann::json::array();
  for (const auto& p : pts) arr.push_back({p.col, p.row});
  return arr;
}

std::vector<PixelIndex> pixels_from_json(const nlohmann::json& j) {
  std::vector<PixelIndex> out;
  for (const auto& p : j) out.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
  return out;
}

}  // namespace

std::string to_string(Classification c) { return enum_name(c, kClassNames); }
std::string to_string(ActionTaken a) { return enum_name(a, kActionNames); }
std::string to_string(Terminal t) { return enum_name(t, kTerminalNames); }
Classification classification_from_string(const std::string& s) { return parse_enum(s, kClassNames, "classification"); }
ActionTaken action_from_string(const std::string& s) { return parse_enum(s, kActionNames, "action"); }
Terminal terminal_from_string(const std::string& s) { return parse_enum(s, kTerminalNames, "terminal outcome"); }

}  // namespace deform

namespace deform::recognizer {

void to_json(nlohmann::json& j, const Representation& r) {
  const auto& d = r.diagnostics;
  j = {
      {"kind", sim::to_string(r.kind)},
      {"status", recognizer::to_string(r.status)},
      {"violated_assumption", r.violated_assumption},
      {"keypoints", pixels_to_json(r.keypoints)},
      {"guideline", pixels_to_json(r.guideline)},
      {"diagnostics",
       {{"skeleton_components", d.skeleton_components},
        {"endpoint_count", d.endpoint_count},
        {"branch_count", d.branch_count},
        {"loop", d.loop},
        {"path_length_px", d.path_length_px},
        {"corner_count", d.corner_count},
        {"area_ratio", d.area_ratio},
        {"contour_length_px", d.contour_length_px},
        {"mask_area_px", d.mask_area_px},
        {"keypoint_separation_px", d.keypoint_separation_px},
        {"keypoint_angles_deg", d.keypoint_angles_deg}}},
  };
}

void from_json(const nlohmann::json& j, Representation& r) {
  r.kind = sim::object_kind_from_string(j.at("kind").get<std::string>());
  r.status = j.at("status").get<std::string>() == "extracted" ? recognizer::Status::Extracted
                                                              : recognizer::Status::ExtractionFailed;
  r.violated_assumption = j.at("violated_assumption").get<std::string>();
  r.keypoints = pixels_from_json(j.at("keypoints"));
  r.guideline = pixels_from_json(j.at("guideline"));
  const auto& d = j.at("diagnostics");
  auto& o = r.diagnostics;
  o.skeleton_components = d.at("skeleton_components").get<int>();
  o.endpoint_count = d.at("endpoint_count").get<int>();
  o.branch_count = d.at("branch_count").get<int>();
  o.loop = d.at("loop").get<bool>();
  o.path_length_px = d.at("path_length_px").get<double>();
  o.corner_count = d.at("corner_count").get<int>();
  o.area_ratio = d.at("area_ratio").get<double>();
  o.contour_length_px = d.at("contour_length_px").get<double>();
  o.mask_area_px = d.at("mask_area_px").get<double>();
  o.keypoint_separation_px = d.at("keypoint_separation_px").get<double>();
  o.keypoint_angles_deg = d.at("keypoint_angles_deg").get<std::vector<double>>();
}

}  // namespace deform::recognizer

namespace deform {

void to_json(nlohmann::json& j, const StepRecord& s) {
  j = {
      {"k", s.index},
      {"gt_recognizable", s.gt_recognizable},
      {"judged_recognizable", s.judged_recognizable},
      {"classification", to_string(s.classification)},
      {"action", to_string(s.action)},
      {"representation", s.representation},
      {"verdict",
       {{"recognizable", s.verdict.recognizable},
        {"source", s.verdict.source},
        {"reasoning", s.verdict.reasoning},
        {"malformed", s.verdict.malformed},
        {"prompt", s.verdict.prompt},
        {"raw_response", s.verdict.raw_response}}},
      {"grasp_errors", s.grasp_errors},
  };
  j["prepare_succeeded"] = s.prepare_succeeded ? nlohmann::json(*s.prepare_succeeded) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, StepRecord& s) {
  s.index = j.at("k").get<int>();
  s.gt_recognizable = j.at("gt_recognizable").get<bool>();
  s.judged_recognizable = j.at("judged_recognizable").get<bool>();
  s.classification = classification_from_string(j.at("classification").get<std::string>());
  s.action = action_from_string(j.at("action").get<std::string>());
  s.representation = j.at("representation").get<recognizer::Representation>();
  const auto& v = j.at("verdict");
  s.verdict.recognizable = v.at("recognizable").get<bool>();
  s.verdict.source = v.at("source").get<std::string>();
  s.verdict.reasoning = v.at("reasoning").get<std::string>();
  s.verdict.malformed = v.at("malformed").get<bool>();
  s.verdict.prompt = v.at("prompt").get<std::string>();
  s.verdict.raw_response = v.at("raw_response").get<std::string>();
  s.grasp_errors = j.at("grasp_errors").get<std::vector<std::string>>();
  const auto& p = j.at("prepare_succeeded");
  s.prepare_succeeded = p.is_null() ? std::nullopt : std::optional<bool>(p.get<bool>());
}

void to_json(nlohmann::json& j, const EpisodeRecord& e) {
  j = {
      {"schema", kRecordSchema},
      {"episode_id", e.episode_id},
      {"seed", e.seed},
      {"object_kind", sim::to_string(e.object_kind)},
      {"policy", e.policy},
      {"steps", e.steps},
      {"terminal", to_string(e.terminal)},
      {"bottleneck_verified", e.bottleneck_verified},
      {"final_task_success", e.final_task_success},
      {"explorations", e.explorations},
      {"prepares", e.prepares},
      {"stable_state_at", e.stable_state_at},
      {"error", e.error},
      {"wall_seconds", e.wall_seconds},
  };
}

void from_json(const nlohmann::json& j, EpisodeRecord& e) {
  const int schema = j.at("schema").get<int>();
  if (schema != kRecordSchema) throw std::runtime_error("unsupported episode schema " + std::to_string(schema));
  e.episode_id = j.at("episode_id").get<std::string>();
  e.seed = j.at("seed").get<std::uint64_t>();
  e.object_kind = sim::object_kind_from_string(j.at("object_kind").get<std::string>());
  e.policy = j.at("policy").get<std::string>();
  e.steps = j.at("steps").get<std::vector<StepRecord>>();
  e.terminal = terminal_from_string(j.at("terminal").get<std::string>());
  e.bottleneck_verified = j.at("bottleneck_verified").get<bool>();
  e.final_task_success = j.at("final_task_success").get<bool>();
  e.explorations = j.at("explorations").get<int>();
  e.prepares = j.at("prepares").get<int>();
  e.stable_state_at = j.at("stable_state_at").get<std::vector<int>>();
  e.error = j.at("error").get<std::string>();
  e.wall_seconds = j.at("wall_seconds").get<double>();
}

std::string to_jsonl_line(const EpisodeRecord& e) { return nlohmann::json(e).dump(); }

EpisodeRecord episode_from_jsonl_line(const std::string& line) { return nlohmann::json::parse(line).get<EpisodeRecord>(); }

std::vector<EpisodeRecord> read_episode_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open episode log " + path);
  std::vector<EpisodeRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(episode_from_jsonl_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

nlohmann::json state_to_json(const sim::ObjectState& state) {
  auto pos = nlohmann::json::array();
  for (const Vec3& p : state.positions) pos.push_back({p.x, p.y, p.z});
  auto vel = nlohmann::json::array();
  for (const Vec3& v : state.velocities) vel.push_back({v.x, v.y, v.z});
  auto grasps = nlohmann::json::array();
  for (const sim::Grasp& g : state.grasps) {
    grasps.push_back({{"gripper_id", g.gripper_id}, {"particle", g.particle}, {"target", {g.target.x, g.target.y, g.target.z}}});
  }
  return {{"object_kind", sim::to_string(state.kind())}, {"positions", pos}, {"velocities", vel}, {"grasps", grasps}};
}

sim::ObjectState state_from_json(const nlohmann::json& j) {
  const auto kind = sim::object_kind_from_string(j.at("object_kind").get<std::string>());
  auto topo = kind == sim::ObjectKind::Rope ? sim::make_rope_topology() : sim::make_cloth_topology();
  auto vec = [](const nlohmann::json& a) { return Vec3{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()}; };
  std::vector<Vec3> pos;
  for (const auto& p : j.at("positions")) pos.push_back(vec(p));
  if (static_cast<int>(pos.size()) != topo->particle_count) throw std::runtime_error("state has wrong particle count");
  auto state = sim::make_state(std::move(topo), std::move(pos));
  const auto& vel = j.at("velocities");
  if (vel.size() != state.size()) throw std::runtime_error("state has wrong velocity count");
  for (std::size_t i = 0; i < vel.size(); ++i) state.velocities[i] = vec(vel[i]);
  for (const auto& g : j.at("grasps")) {
    state.grasps.push_back({g.at("gripper_id").get<int>(), g.at("particle").get<int>(), vec(g.at("target"))});
  }
  return state;
}

}  // namespace deform
