#include "deform/experiment.hpp"

#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include <nlohmann/json.hpp>

#include "deform/adp_oracle.hpp"
#include "deform/oracle.hpp"

namespace deform::experiment {

namespace {

/// Reads one YAML mapping, remembering which keys were consumed so typos surface as errors.
class Section {
 public:
  Section(YAML::Node node, std::string path, const std::string& origin)
      : node_(std::move(node)), path_(std::move(path)), origin_(origin) {
    if (node_.IsDefined() && !node_.IsMap()) fail(node_, "expected a mapping");
  }

  template <typename T>
  void get(const char* key, T& out) {
    const YAML::Node n = lookup(key);
    if (!n.IsDefined()) return;
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, field(key), "has the wrong type");
    }
  }

  void get_range(const char* key, ood::Range& out) {
    const YAML::Node n = lookup(key);
    if (!n.IsDefined()) return;
    if (!n.IsSequence() || n.size() != 2) fail(n, field(key), "must be a two-element list [lo, hi]");
    try {
      out = {n[0].as<double>(), n[1].as<double>()};
    } catch (const YAML::Exception&) {
      fail(n, field(key), "must hold numbers");
    }
  }

  Section child(const char* key) { return Section(lookup(key), field(key), origin_); }

  void finish() const {
    if (!node_.IsDefined()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.count(key)) fail(kv.first, field(key.c_str()), "is not a recognised setting");
    }
  }

  [[noreturn]] void fail(const YAML::Node& n, const std::string& what) const { fail(n, path_.empty() ? "<root>" : path_, what); }
  [[noreturn]] void fail(const YAML::Node& n, const std::string& f, const std::string& what) const {
    throw ConfigError(origin_ + ":" + std::to_string(n.Mark().line + 1) + ": field '" + f + "' " + what);
  }
  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  YAML::Node node(const char* key) { return lookup(key); }

 private:
  YAML::Node lookup(const char* key) {
    seen_.insert(key);
    if (!node_.IsDefined()) return YAML::Node(YAML::NodeType::Undefined);
    const YAML::Node& view = node_;  // const access does not insert missing keys
    YAML::Node n = view[key];
    if (!n.IsDefined() || n.IsNull()) return YAML::Node(YAML::NodeType::Undefined);
    return n;
  }

  YAML::Node node_;
  std::string path_;
  const std::string& origin_;
  std::set<std::string> seen_;
};

PolicyKind policy_from_string(const std::string& s) {
  if (s == "oracle") return PolicyKind::Oracle;
  if (s == "heuristic") return PolicyKind::Heuristic;
  if (s == "remote") return PolicyKind::Remote;
  if (s == "always_yes") return PolicyKind::AlwaysYes;
  if (s == "always_no") return PolicyKind::AlwaysNo;
  throw std::invalid_argument("unknown policy '" + s + "' (oracle|heuristic|remote|always_yes|always_no)");
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

void write_metrics(const RunSummary& s, int k_max, const std::filesystem::path& dir) {
  std::ofstream csv(dir / "metrics.csv");
  if (!csv) throw std::runtime_error("cannot write " + (dir / "metrics.csv").string());
  if (s.series) {
    metrics::write_csv(csv, *s.series);
  } else {
    csv << metrics::kCsvHeader << "\n";
  }
  nlohmann::json rates = metrics::to_json(s.rates);
  rates["k_max"] = k_max;
  write_text(dir / "rates.json", rates.dump(2) + "\n");
}

RunSummary summarize(std::vector<EpisodeRecord> episodes, int k_max) {
  RunSummary s;
  s.episodes = std::move(episodes);
  for (const auto& e : s.episodes) s.harness_errors += e.terminal == Terminal::HarnessError;
  if (s.harness_errors < static_cast<int>(s.episodes.size())) s.series = metrics::series(s.episodes, k_max);
  s.rates = metrics::rates(s.episodes);
  return s;
}

}  // namespace

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Oracle: return "oracle";
    case PolicyKind::Heuristic: return "heuristic";
    case PolicyKind::Remote: return "remote";
    case PolicyKind::AlwaysYes: return "always_yes";
    case PolicyKind::AlwaysNo: return "always_no";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  if (n_episodes < 1) throw ConfigError("field 'n_episodes' must be >= 1");
  if (!(epsilon_px > 0.0)) throw ConfigError("field 'epsilon_px' must be > 0");
  if (pipeline.max_explorations < 0) throw ConfigError("field 'max_explorations' must be >= 0");
  if (k_max < pipeline.max_explorations) throw ConfigError("field 'k_max' must be >= max_explorations");
  if (parallelism < 1) throw ConfigError("field 'parallelism' must be >= 1");
  try {
    pipeline.validate();
    ood::OodSpec probe = ood;
    probe.object_kind = object_kind;
    probe.validate();
    if (!orm.empty()) {
      const auto o = recognizer::make_orm(orm);
      if (!o) throw ConfigError("field 'orm': unknown recognizer '" + orm + "'");
      if (o->kind() != object_kind) {
        throw ConfigError("field 'orm': recognizer '" + orm + "' does not handle " + sim::to_string(object_kind));
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

std::vector<ood::OodSpec> ExperimentConfig::episode_specs() const {
  std::vector<ood::OodSpec> specs;
  for (int i = 0; i < n_episodes; ++i) {
    ood::OodSpec s = ood;
    s.object_kind = object_kind;
    s.seed = base_seed + static_cast<std::uint64_t>(i);
    specs.push_back(s);
  }
  return specs;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root || !root.IsMap()) throw ConfigError(origin + ": expected a mapping of settings");
  if (root["config"] && root["artifact"]) root = root["config"];

  ExperimentConfig c;
  Section top(root, "", origin);
  try {
    std::string kind = sim::to_string(c.object_kind);
    top.get("object_kind", kind);
    try {
      c.object_kind = sim::object_kind_from_string(kind);
    } catch (const std::exception& e) {
      top.fail(top.node("object_kind"), "object_kind", std::string("is invalid: ") + e.what());
    }
    top.get("n_episodes", c.n_episodes);
    top.get("base_seed", c.base_seed);
    top.get("orm", c.orm);
    top.get("epsilon_px", c.epsilon_px);
    top.get("k_max", c.k_max);
    top.get("parallelism", c.parallelism);
    top.get("output_dir", c.output_dir);
    top.get("max_explorations", c.pipeline.max_explorations);
    top.get("max_prepares", c.pipeline.max_prepares);
    top.get("p_slip", c.pipeline.prepare.p_slip);
    top.get("p_task_drop", c.pipeline.task.p_task_drop);

    Section pol = top.child("policy");
    std::string type = to_string(c.policy);
    pol.get("type", type);
    try {
      c.policy = policy_from_string(type);
    } catch (const std::exception& e) {
      pol.fail(pol.node("type"), "policy.type", e.what());
    }
    Section heu = pol.child("heuristic");
    heu.get("profile", c.heuristic.profile);
    heu.get("rope_nominal_length_px", c.heuristic.rope_nominal_length_px);
    heu.get("rope_min_separation_fraction", c.heuristic.rope_min_separation_fraction);
    heu.get("rope_max_branches", c.heuristic.rope_max_branches);
    heu.get("cloth_min_area_ratio", c.heuristic.cloth_min_area_ratio);
    heu.get("cloth_min_corner_deg", c.heuristic.cloth_min_corner_deg);
    heu.get("cloth_max_corner_deg", c.heuristic.cloth_max_corner_deg);
    heu.finish();
    Section rem = pol.child("remote");
    rem.get("endpoint", c.remote.client.endpoint);
    rem.get("path", c.remote.client.path);
    rem.get("model", c.remote.client.model);
    rem.get("api_key_env", c.remote.client.api_key_env);
    rem.get("connect_timeout_s", c.remote.client.connect_timeout_s);
    rem.get("read_timeout_s", c.remote.client.read_timeout_s);
    rem.get("retries", c.remote.client.retries);
    rem.get("backoff_base_s", c.remote.client.backoff_base_s);
    rem.get("template", c.remote.template_path);
    rem.finish();
    pol.finish();

    Section o = top.child("ood");
    o.get_range("throw_speed", c.ood.throw_speed);
    o.get_range("throw_height", c.ood.throw_height);
    o.get("landing_target_jitter", c.ood.landing_target_jitter);
    o.get_range("spin", c.ood.spin);
    o.finish();

    auto& sc = c.pipeline.sim;
    Section s = top.child("sim");
    s.get("timestep", sc.timestep);
    s.get("substeps", sc.substeps);
    s.get("solver_iterations", sc.solver_iterations);
    s.get("gravity", sc.gravity);
    s.get("damping", sc.damping);
    s.get("table_friction", sc.table_friction);
    s.get("air_drag", sc.air_drag);
    s.get("cloth_normal_drag", sc.cloth_normal_drag);
    s.get("rope_bending_stiffness", sc.rope_bending_stiffness);
    s.get("cloth_bending_stiffness", sc.cloth_bending_stiffness);
    s.get("rope_self_collision", sc.rope_self_collision);
    s.get("grasp_slip_strain", sc.grasp_slip_strain);
    s.finish();

    auto& ex = c.pipeline.explore;
    Section e = top.child("explore");
    e.get("rope_grasp_tolerance", ex.rope_grasp_tolerance);
    e.get("rope_lift_height", ex.rope_lift_height);
    e.get("rope_lift_duration", ex.rope_lift_duration);
    e.get("rope_translate", ex.rope_translate);
    e.get("rope_translate_duration", ex.rope_translate_duration);
    e.get("rope_release_height", ex.rope_release_height);
    e.get("rope_lower_duration", ex.rope_lower_duration);
    e.get("cloth_grasp_tolerance", ex.cloth_grasp_tolerance);
    e.get("cloth_lift_height", ex.cloth_lift_height);
    e.get("cloth_lift_duration", ex.cloth_lift_duration);
    e.get("cloth_stretch_fraction", ex.cloth_stretch_fraction);
    e.get("cloth_reposition_duration", ex.cloth_reposition_duration);
    e.get("cloth_lay_distance", ex.cloth_lay_distance);
    e.get("cloth_lay_overshoot", ex.cloth_lay_overshoot);
    e.get("cloth_lay_height", ex.cloth_lay_height);
    e.get("cloth_lay_duration", ex.cloth_lay_duration);
    e.finish();

    Section pr = top.child("prepare");
    pr.get("grasp_tolerance", c.pipeline.prepare.grasp_tolerance);
    pr.get("move_duration", c.pipeline.prepare.move_duration);
    pr.finish();

    Section st = top.child("stable_state");
    st.get("iou", c.pipeline.stable_iou);
    st.get("window", c.pipeline.stable_window);
    st.finish();

    top.finish();
  } catch (const YAML::Exception& e) {
    throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  const auto& sc = c.pipeline.sim;
  const auto& ex = c.pipeline.explore;
  const auto& r = c.remote.client;
  const auto& h = c.heuristic;
  return {
      {"object_kind", sim::to_string(c.object_kind)},
      {"n_episodes", c.n_episodes},
      {"base_seed", c.base_seed},
      {"orm", c.orm},
      {"epsilon_px", c.epsilon_px},
      {"k_max", c.k_max},
      {"parallelism", c.parallelism},
      {"output_dir", c.output_dir},
      {"max_explorations", c.pipeline.max_explorations},
      {"max_prepares", c.pipeline.max_prepares},
      {"p_slip", c.pipeline.prepare.p_slip},
      {"p_task_drop", c.pipeline.task.p_task_drop},
      {"policy",
       {{"type", to_string(c.policy)},
        {"heuristic",
         {{"profile", h.profile},
          {"rope_nominal_length_px", h.rope_nominal_length_px},
          {"rope_min_separation_fraction", h.rope_min_separation_fraction},
          {"rope_max_branches", h.rope_max_branches},
          {"cloth_min_area_ratio", h.cloth_min_area_ratio},
          {"cloth_min_corner_deg", h.cloth_min_corner_deg},
          {"cloth_max_corner_deg", h.cloth_max_corner_deg}}},
        {"remote",
         {{"endpoint", r.endpoint},
          {"path", r.path},
          {"model", r.model},
          {"api_key_env", r.api_key_env},
          {"connect_timeout_s", r.connect_timeout_s},
          {"read_timeout_s", r.read_timeout_s},
          {"retries", r.retries},
          {"backoff_base_s", r.backoff_base_s},
          {"template", c.remote.template_path}}}}},
      {"ood",
       {{"throw_speed", {c.ood.throw_speed.lo, c.ood.throw_speed.hi}},
        {"throw_height", {c.ood.throw_height.lo, c.ood.throw_height.hi}},
        {"landing_target_jitter", c.ood.landing_target_jitter},
        {"spin", {c.ood.spin.lo, c.ood.spin.hi}}}},
      {"sim",
       {{"timestep", sc.timestep},
        {"substeps", sc.substeps},
        {"solver_iterations", sc.solver_iterations},
        {"gravity", sc.gravity},
        {"damping", sc.damping},
        {"table_friction", sc.table_friction},
        {"air_drag", sc.air_drag},
        {"cloth_normal_drag", sc.cloth_normal_drag},
        {"rope_bending_stiffness", sc.rope_bending_stiffness},
        {"cloth_bending_stiffness", sc.cloth_bending_stiffness},
        {"rope_self_collision", sc.rope_self_collision},
        {"grasp_slip_strain", sc.grasp_slip_strain}}},
      {"explore",
       {{"rope_grasp_tolerance", ex.rope_grasp_tolerance},
        {"rope_lift_height", ex.rope_lift_height},
        {"rope_lift_duration", ex.rope_lift_duration},
        {"rope_translate", ex.rope_translate},
        {"rope_translate_duration", ex.rope_translate_duration},
        {"rope_release_height", ex.rope_release_height},
        {"rope_lower_duration", ex.rope_lower_duration},
        {"cloth_grasp_tolerance", ex.cloth_grasp_tolerance},
        {"cloth_lift_height", ex.cloth_lift_height},
        {"cloth_lift_duration", ex.cloth_lift_duration},
        {"cloth_stretch_fraction", ex.cloth_stretch_fraction},
        {"cloth_reposition_duration", ex.cloth_reposition_duration},
        {"cloth_lay_distance", ex.cloth_lay_distance},
        {"cloth_lay_overshoot", ex.cloth_lay_overshoot},
        {"cloth_lay_height", ex.cloth_lay_height},
        {"cloth_lay_duration", ex.cloth_lay_duration}}},
      {"prepare",
       {{"grasp_tolerance", c.pipeline.prepare.grasp_tolerance},
        {"move_duration", c.pipeline.prepare.move_duration}}},
      {"stable_state", {{"iou", c.pipeline.stable_iou}, {"window", c.pipeline.stable_window}}},
  };
}

pipeline::GroundTruthFn oracle_labeller(const scene::Calibration& calib, double epsilon_px) {
  return [calib, epsilon_px](const sim::ObjectState& state, const recognizer::Representation& rep) {
    return oracle::is_valid(rep, oracle::ground_truth_of(state, calib, epsilon_px));
  };
}

adp::PolicyFactory make_policy_factory(const ExperimentConfig& c) {
  switch (c.policy) {
    case PolicyKind::Oracle: {
      const double eps = c.epsilon_px;
      return [eps] { return std::make_unique<adp::OraclePolicy>(eps); };
    }
    case PolicyKind::Heuristic: {
      const auto params = c.heuristic;
      return [params] { return std::make_unique<adp::HeuristicPolicy>(params); };
    }
    case PolicyKind::AlwaysYes: return [] { return std::make_unique<adp::ConstantPolicy>(true); };
    case PolicyKind::AlwaysNo: return [] { return std::make_unique<adp::ConstantPolicy>(false); };
    case PolicyKind::Remote: {
      adp::PromptTemplate tmpl;
      try {
        tmpl = adp::load_prompt_template(c.remote.template_path);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("policy.remote.template: ") + e.what());
      }
      adp::RemoteConfig rc = c.remote.client;
      rc.apply_environment();
      return [rc, tmpl] { return std::make_unique<adp::RemotePolicy>(rc, tmpl); };
    }
  }
  throw ConfigError("unsupported policy");
}

pipeline::OrmFactory make_orm_factory(const ExperimentConfig& c) {
  const std::string id = c.orm;
  return [id](sim::ObjectKind kind) { return id.empty() ? recognizer::default_orm(kind) : recognizer::make_orm(id); };
}

RunSummary run(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
  c.validate();
  std::filesystem::create_directories(out_dir);
  const auto started = std::chrono::steady_clock::now();
  const auto started_wall = std::chrono::system_clock::now();

  std::ofstream log(out_dir / "episodes.jsonl");
  if (!log) throw std::runtime_error("cannot write " + (out_dir / "episodes.jsonl").string());
  pipeline::BatchOptions options;
  options.parallelism = c.parallelism;
  options.sink = [&log](const EpisodeRecord& e) { log << to_jsonl_line(e) << "\n" << std::flush; };

  pipeline::PipelineConfig pc = c.pipeline;
  auto episodes = pipeline::run_batch(c.episode_specs(), make_orm_factory(c), make_policy_factory(c),
                                      oracle_labeller(pc.calib, c.epsilon_px), pc, options);
  log.close();

  RunSummary s = summarize(std::move(episodes), c.k_max);
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_metrics(s, c.k_max, out_dir);

  double episode_seconds = 0.0;
  for (const auto& e : s.episodes) episode_seconds += e.wall_seconds;
  nlohmann::json manifest = {
      {"artifact", {{"name", kArtifactName}, {"version", kArtifactVersion}, {"record_schema", kRecordSchema}}},
      {"config", to_json(c)},
      {"started_at_unix", std::chrono::duration_cast<std::chrono::seconds>(started_wall.time_since_epoch()).count()},
      {"timings", {{"wall_seconds", s.wall_seconds}, {"episode_seconds_total", episode_seconds}}},
      {"episodes", s.episodes.size()},
      {"harness_errors", s.harness_errors},
      {"outputs", {"episodes.jsonl", "metrics.csv", "rates.json", "manifest.json"}},
  };
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return s;
}

RunSummary recompute(const std::string& episodes_path, int k_max, const std::filesystem::path& out_dir) {
  RunSummary s = summarize(read_episode_log(episodes_path), k_max);
  std::filesystem::create_directories(out_dir);
  write_metrics(s, k_max, out_dir);
  return s;
}

}  // namespace deform::experiment
