#include "deform/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace deform::pipeline {

namespace {

// Salt separating the episode's action-noise stream from the generator's stream.
constexpr std::uint64_t kEpisodeStream = 0xa11ce5eedULL;

class StableTracker {
 public:
  StableTracker(double threshold, int window) : threshold_(threshold), window_(window) {}

  /// Feed the observation after an exploration; true when the view has been
  /// unchanged for `window` explorations in a row.
  bool after_exploration(const scene::Observation& before, const scene::Observation& after) {
    streak_ = scene::mask_iou(before, after) > threshold_ ? streak_ + 1 : 0;
    return streak_ >= window_;
  }

 private:
  double threshold_;
  int window_;
  int streak_ = 0;
};

}  // namespace

void PipelineConfig::validate() const {
  sim.validate();
  if (max_explorations < 0) throw std::invalid_argument("max_explorations must be >= 0");
  if (max_prepares < 1) throw std::invalid_argument("max_prepares must be >= 1");
  if (prepare.p_slip < 0.0 || prepare.p_slip > 1.0) throw std::invalid_argument("p_slip must lie in [0, 1]");
  if (task.p_task_drop < 0.0 || task.p_task_drop > 1.0) throw std::invalid_argument("p_task_drop must lie in [0, 1]");
  if (stable_window < 1) throw std::invalid_argument("stable_window must be >= 1");
}

std::string episode_id_for(sim::ObjectKind kind, std::uint64_t seed) {
  return sim::to_string(kind) + "-" + std::to_string(seed);
}

EpisodeRecord run_episode(const sim::ObjectState& initial, const recognizer::Orm& orm, adp::Policy& policy,
                          const GroundTruthFn& ground_truth, const PipelineConfig& config, std::uint64_t seed,
                          const std::string& episode_id) {
  const auto started = std::chrono::steady_clock::now();
  EpisodeRecord rec;
  rec.episode_id = episode_id;
  rec.seed = seed;
  rec.object_kind = initial.kind();
  rec.policy = policy.name();

  Rng rng(seed ^ kEpisodeStream);
  StableTracker stable(config.stable_iou, config.stable_window);
  sim::ObjectState state = initial;

  try {
    int k = 0;
    for (;;) {
      const scene::Observation obs = scene::render(state, config.calib);
      if (obs.empty()) throw recognizer::EmptyMask();
      const recognizer::Representation rep = orm.recognize(obs);
      const scene::GrayImage overlay = recognizer::render_overlay(obs, rep);

      adp::JudgeContext ctx{obs, rep, overlay, policy.needs_privileged_state() ? &state : nullptr, episode_id, k};
      const adp::Verdict verdict = policy.judge(ctx);

      StepRecord step;
      step.index = k;
      step.gt_recognizable = ground_truth ? ground_truth(state, rep) : false;
      step.judged_recognizable = verdict.recognizable;
      step.classification = classify_step(step.gt_recognizable, step.judged_recognizable);
      step.representation = rep;
      step.verdict = verdict;

      if (adp::decide(verdict) == adp::ActionChoice::Prepare) {
        step.action = ActionTaken::Prepare;
        ++rec.prepares;
        primitives::ActionOutcome out;
        try {
          out = primitives::prepare(state, rep, obs, config.sim, rng, config.prepare);
        } catch (const primitives::PreconditionViolation& e) {
          // A YES on a failed extraction: nothing to grasp, so the attempt fails in place.
          out.kind = primitives::ActionKind::Preparation;
          out.succeeded = false;
          out.grasp_errors.push_back(std::string("precondition: ") + e.what());
          out.resulting_state = state;
        }
        step.prepare_succeeded = out.succeeded;
        step.grasp_errors = out.grasp_errors;
        rec.steps.push_back(std::move(step));
        state = std::move(out.resulting_state);
        if (out.succeeded) {
          rec.terminal = Terminal::Transitioned;
          rec.bottleneck_verified = primitives::verify_bottleneck(state, primitives::BottleneckSpec::for_kind(state.kind()));
          if (rec.bottleneck_verified) {
            const auto task = primitives::execute_task(state, config.sim, rng, config.task);
            rec.final_task_success = task.succeeded;
          }
          break;
        }
        if (rec.prepares >= config.max_prepares) {
          rec.terminal = Terminal::GraspFailedTerminal;
          break;
        }
        continue;  // re-judge without charging an exploration
      }

      if (k >= config.max_explorations) {
        step.action = ActionTaken::None;
        rec.steps.push_back(std::move(step));
        rec.terminal = Terminal::ExplorationBudgetExhausted;
        break;
      }
      step.action = ActionTaken::Explore;
      const auto out = primitives::explore(state, config.sim, config.explore);
      step.grasp_errors = out.grasp_errors;
      rec.steps.push_back(std::move(step));
      state = out.resulting_state;
      ++k;
      rec.explorations = k;
      const scene::Observation after = scene::render(state, config.calib);
      if (stable.after_exploration(obs, after)) rec.stable_state_at.push_back(k);
    }
  } catch (const sim::NonFiniteState& e) {
    rec.terminal = Terminal::HarnessError;
    rec.error = std::string("non-finite simulator state: ") + e.what();
  } catch (const recognizer::EmptyMask& e) {
    rec.terminal = Terminal::HarnessError;
    rec.error = "object left the camera view";
  } catch (const std::exception& e) {
    rec.terminal = Terminal::HarnessError;
    rec.error = e.what();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

std::vector<EpisodeRecord> run_batch(const std::vector<ood::OodSpec>& specs, const OrmFactory& orms,
                                     const adp::PolicyFactory& policies, const GroundTruthFn& ground_truth,
                                     const PipelineConfig& config, const BatchOptions& options) {
  config.validate();
  if (specs.empty()) throw std::invalid_argument("run_batch needs at least one episode spec");
  if (options.parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
  for (const auto& s : specs) s.validate();

  std::vector<EpisodeRecord> results(specs.size());
  std::atomic<std::size_t> next{0};
  std::mutex sink_mutex;

  const int threads = std::min<int>(options.parallelism, std::max<std::size_t>(specs.size(), 1));
  // Built up front so a bad policy configuration fails before any episode runs.
  std::vector<std::unique_ptr<adp::Policy>> worker_policies;
  for (int t = 0; t < threads; ++t) worker_policies.push_back(policies());

  auto worker = [&](adp::Policy* policy) {
    std::map<sim::ObjectKind, std::unique_ptr<recognizer::Orm>> orm_cache;
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      const ood::OodSpec& spec = specs[i];
      const std::string id = episode_id_for(spec.object_kind, spec.seed);
      EpisodeRecord rec;
      try {
        auto& orm = orm_cache[spec.object_kind];
        if (!orm) orm = orms(spec.object_kind);
        const sim::ObjectState initial = ood::generate(spec, config.sim);
        rec = run_episode(initial, *orm, *policy, ground_truth, config, spec.seed, id);
      } catch (const std::exception& e) {
        rec.episode_id = id;
        rec.seed = spec.seed;
        rec.object_kind = spec.object_kind;
        rec.policy = policy->name();
        rec.terminal = Terminal::HarnessError;
        rec.error = std::string("episode setup failed: ") + e.what();
      }
      if (options.sink) {
        std::lock_guard lock(sink_mutex);
        options.sink(rec);
      }
      results[i] = std::move(rec);
    }
  };

  if (threads == 1) {
    worker(worker_policies[0].get());
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, worker_policies[t].get());
    for (auto& th : pool) th.join();
  }
  return results;
}

}  // namespace deform::pipeline
