#pragma once

// Random but well-formed episode logs for exercising the metric code.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "deform/record.hpp"

namespace deform::fixtures {

inline StepRecord synthetic_step(int k, Classification c) {
  StepRecord s;
  s.index = k;
  s.classification = c;
  s.gt_recognizable = c == Classification::TP || c == Classification::FN;
  s.judged_recognizable = c == Classification::TP || c == Classification::FP;
  s.action = s.judged_recognizable ? ActionTaken::Prepare : ActionTaken::Explore;
  return s;
}

/// An episode whose step classifications are given in order, one per k.
inline EpisodeRecord synthetic_episode(const std::vector<Classification>& per_k, std::string id = "synthetic") {
  EpisodeRecord e;
  e.episode_id = std::move(id);
  for (std::size_t k = 0; k < per_k.size(); ++k) e.steps.push_back(synthetic_step(static_cast<int>(k), per_k[k]));
  const bool yes = e.steps.back().judged_recognizable;
  e.terminal = yes ? Terminal::Transitioned : Terminal::ExplorationBudgetExhausted;
  e.explorations = static_cast<int>(per_k.size()) - 1;
  return e;
}

/// Episodes stop at their first YES or at k_max. Some repeat a k after a failed
/// preparation and a few end as harness errors, as real logs do.
inline std::vector<EpisodeRecord> random_record_set(std::mt19937_64& rng, int k_max, int max_episodes = 12) {
  std::uniform_int_distribution<int> count(1, max_episodes);
  std::uniform_int_distribution<int> cls(0, 3);
  std::bernoulli_distribution rare(0.1);
  const int n = count(rng);
  std::vector<EpisodeRecord> out;
  for (int i = 0; i < n; ++i) {
    EpisodeRecord e;
    e.episode_id = "e" + std::to_string(i);
    int k = 0;
    for (;;) {
      const auto c = static_cast<Classification>(cls(rng));
      e.steps.push_back(synthetic_step(k, c));
      if (e.steps.back().judged_recognizable) {
        if (rare(rng)) {
          e.steps.back().prepare_succeeded = false;
          continue;  // re-judged at the same k
        }
        e.terminal = Terminal::Transitioned;
        break;
      }
      if (k == k_max) {
        e.steps.back().action = ActionTaken::None;
        e.terminal = Terminal::ExplorationBudgetExhausted;
        break;
      }
      ++k;
    }
    e.explorations = k;
    if (rare(rng)) e.terminal = Terminal::HarnessError;
    out.push_back(std::move(e));
  }
  if (std::all_of(out.begin(), out.end(), [](const EpisodeRecord& e) { return e.terminal == Terminal::HarnessError; }))
    out.front().terminal = Terminal::Transitioned;
  return out;
}

}  // namespace deform::fixtures
