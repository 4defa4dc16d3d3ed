#pragma once

// Recognizability rate (RR), correct assessment rate (CAR) and false negative
// rate (FNR) per exploration count k, plus the task-level rates.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "deform/record.hpp"

namespace deform::metrics {

inline constexpr int kDefaultKMax = 20;

class InconsistentN : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Counts {
  int tp = 0, fp = 0, tn = 0, fn = 0;
  int total() const { return tp + fp + tn + fn; }
  void add(Classification c);
  friend bool operator==(const Counts&, const Counts&) = default;
};

struct MetricSeries {
  int k_max = 0;
  int n = 0;
  std::vector<double> rr;
  std::vector<double> car;
  std::vector<std::optional<double>> fnr;  // empty when TP + FN = 0
  std::vector<Counts> counts;
  friend bool operator==(const MetricSeries&, const MetricSeries&) = default;
};

/// Per-k classification with carry-forward: an episode that stopped before k
/// contributes its final classification. Harness-error episodes are left out.
/// Throws InconsistentN on an empty set, an episode without steps, a gap in
/// step indices, or a step beyond k_max.
MetricSeries series(const std::vector<EpisodeRecord>& records, int k_max = kDefaultKMax);

/// Same result computed from the full episode-by-k classification matrix.
MetricSeries series_bruteforce(const std::vector<EpisodeRecord>& records, int k_max = kDefaultKMax);

struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 0;
  bool defined() const { return den != 0; }
  std::optional<double> value() const;
  friend bool operator==(const Ratio& a, const Ratio& b) { return a.num == b.num && a.den == b.den; }
  /// Equal as rationals (cross-multiplied), e.g. 18/30 == 3/5.
  bool same_value(const Ratio& other) const { return defined() && other.defined() && num * other.den == other.num * den; }
};

struct RateSummary {
  Ratio transition;                        // verified transitions / valid episodes
  Ratio completion_given_transition;       // task successes / verified transitions
  Ratio final_success;                     // task successes / valid episodes
  int harness_errors = 0;
  int episodes = 0;
};

RateSummary rates(const std::vector<EpisodeRecord>& records);

void write_csv(std::ostream& out, const MetricSeries& s);
inline constexpr const char* kCsvHeader = "k,rr,car,fnr,tp,fp,tn,fn";

nlohmann::json to_json(const RateSummary& r);
nlohmann::json to_json(const MetricSeries& s);

}  // namespace deform::metrics
