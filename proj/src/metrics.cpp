#include "deform/metrics.hpp"

#include <charconv>
#include <ostream>

#include <nlohmann/json.hpp>

namespace deform::metrics {
namespace {

std::vector<const EpisodeRecord*> usable(const std::vector<EpisodeRecord>& records, int k_max) {
  if (records.empty()) throw InconsistentN("no episode records");
  if (k_max < 0) throw InconsistentN("k_max must be non-negative");
  std::vector<const EpisodeRecord*> out;
  for (const EpisodeRecord& r : records) {
    if (r.terminal == Terminal::HarnessError) continue;
    if (r.steps.empty()) throw InconsistentN("episode " + r.episode_id + " has no steps");
    if (r.steps.front().index != 0) throw InconsistentN("episode " + r.episode_id + " does not start at k = 0");
    for (std::size_t i = 1; i < r.steps.size(); ++i) {
      const int d = r.steps[i].index - r.steps[i - 1].index;
      if (d != 0 && d != 1) throw InconsistentN("episode " + r.episode_id + " has a gap in step indices");
    }
    if (r.steps.back().index > k_max) {
      throw InconsistentN("episode " + r.episode_id + " reaches k = " + std::to_string(r.steps.back().index) +
                          " beyond k_max = " + std::to_string(k_max));
    }
    out.push_back(&r);
  }
  if (out.empty()) throw InconsistentN("every episode ended in a harness error");
  return out;
}

MetricSeries finish(std::vector<Counts> counts, int k_max, int n) {
  MetricSeries s;
  s.k_max = k_max;
  s.n = n;
  s.counts = std::move(counts);
  for (const Counts& c : s.counts) {
    s.rr.push_back(static_cast<double>(c.tp + c.fn) / n);
    s.car.push_back(static_cast<double>(c.tp + c.tn) / n);
    const int positives = c.tp + c.fn;
    s.fnr.push_back(positives == 0 ? std::nullopt : std::optional<double>(static_cast<double>(c.fn) / positives));
  }
  return s;
}

std::string format_number(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

nlohmann::json ratio_json(const Ratio& r) {
  nlohmann::json j = {{"num", r.num}, {"den", r.den}};
  const auto v = r.value();
  j["value"] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

void Counts::add(Classification c) {
  switch (c) {
    case Classification::TP: ++tp; break;
    case Classification::FP: ++fp; break;
    case Classification::TN: ++tn; break;
    case Classification::FN: ++fn; break;
  }
}

MetricSeries series(const std::vector<EpisodeRecord>& records, int k_max) {
  const auto eps = usable(records, k_max);
  // Each episode holds one classification over a run of k values; record the
  // run boundaries in per-class difference arrays and prefix-sum once.
  std::vector<std::array<int, 4>> diff(k_max + 2, std::array<int, 4>{});
  for (const EpisodeRecord* e : eps) {
    const auto& steps = e->steps;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      // Only the last judgment at a given k counts.
      if (i + 1 < steps.size() && steps[i + 1].index == steps[i].index) continue;
      const int from = steps[i].index;
      const int to = (i + 1 < steps.size()) ? steps[i + 1].index : k_max + 1;
      const auto c = static_cast<std::size_t>(steps[i].classification);
      ++diff[from][c];
      --diff[to][c];
    }
  }
  std::vector<Counts> counts(k_max + 1);
  std::array<int, 4> running{};
  for (int k = 0; k <= k_max; ++k) {
    for (std::size_t c = 0; c < 4; ++c) running[c] += diff[k][c];
    counts[k] = {running[static_cast<std::size_t>(Classification::TP)], running[static_cast<std::size_t>(Classification::FP)],
                 running[static_cast<std::size_t>(Classification::TN)], running[static_cast<std::size_t>(Classification::FN)]};
  }
  return finish(std::move(counts), k_max, static_cast<int>(eps.size()));
}

MetricSeries series_bruteforce(const std::vector<EpisodeRecord>& records, int k_max) {
  const auto eps = usable(records, k_max);
  std::vector<std::vector<Classification>> matrix(eps.size(), std::vector<Classification>(k_max + 1));
  for (std::size_t e = 0; e < eps.size(); ++e) {
    for (int k = 0; k <= k_max; ++k) {
      // Latest judgment made with at most k explorations behind it.
      const StepRecord* chosen = nullptr;
      for (const StepRecord& s : eps[e]->steps) {
        if (s.index <= k) chosen = &s;
      }
      matrix[e][k] = chosen->classification;
    }
  }
  std::vector<Counts> counts(k_max + 1);
  for (int k = 0; k <= k_max; ++k) {
    for (std::size_t e = 0; e < eps.size(); ++e) counts[k].add(matrix[e][k]);
  }
  return finish(std::move(counts), k_max, static_cast<int>(eps.size()));
}

std::optional<double> Ratio::value() const {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

RateSummary rates(const std::vector<EpisodeRecord>& records) {
  RateSummary r;
  std::int64_t valid = 0, transitions = 0, successes = 0;
  for (const EpisodeRecord& e : records) {
    ++r.episodes;
    if (e.terminal == Terminal::HarnessError) {
      ++r.harness_errors;
      continue;
    }
    ++valid;
    const bool transitioned = e.terminal == Terminal::Transitioned && e.bottleneck_verified;
    if (transitioned) {
      ++transitions;
      if (e.final_task_success) ++successes;
    }
  }
  r.transition = {transitions, valid};
  r.completion_given_transition = {successes, transitions};
  r.final_success = {successes, valid};
  return r;
}

void write_csv(std::ostream& out, const MetricSeries& s) {
  out << kCsvHeader << '\n';
  for (int k = 0; k <= s.k_max; ++k) {
    const Counts& c = s.counts[k];
    out << k << ',' << format_number(s.rr[k]) << ',' << format_number(s.car[k]) << ','
        << (s.fnr[k] ? format_number(*s.fnr[k]) : std::string("nan")) << ',' << c.tp << ',' << c.fp << ',' << c.tn
        << ',' << c.fn << '\n';
  }
}

nlohmann::json to_json(const RateSummary& r) {
  return {
      {"transition_rate", ratio_json(r.transition)},
      {"completion_rate_given_transition", ratio_json(r.completion_given_transition)},
      {"final_success_rate", ratio_json(r.final_success)},
      {"harness_errors", r.harness_errors},
      {"episodes", r.episodes},
  };
}

nlohmann::json to_json(const MetricSeries& s) {
  auto rows = nlohmann::json::array();
  for (int k = 0; k <= s.k_max; ++k) {
    const Counts& c = s.counts[k];
    rows.push_back({{"k", k},
                    {"rr", s.rr[k]},
                    {"car", s.car[k]},
                    {"fnr", s.fnr[k] ? nlohmann::json(*s.fnr[k]) : nlohmann::json(nullptr)},
                    {"tp", c.tp},
                    {"fp", c.fp},
                    {"tn", c.tn},
                    {"fn", c.fn}});
  }
  return {{"n", s.n},
          {"k_max", s.k_max},
          {"carry_rule", "an episode that stopped before k contributes its final classification, including "
                         "budget-exhausted episodes (declared extension)"},
          {"rows", rows}};
}

}  // namespace deform::metrics
