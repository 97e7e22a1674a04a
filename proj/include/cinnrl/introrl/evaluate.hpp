#pragma once

#include "cinnrl/introrl/observation.hpp"
#include "cinnrl/introrl/policy.hpp"

#include <vector>

namespace cinnrl::introrl {

inline constexpr double kRangeLow = 70.0;
inline constexpr double kRangeHigh = 180.0;

struct GlycemicMetrics {
  /// Percentage of samples with 70 <= BG <= 180.
  double time_in_range = 0.0;
  /// Entries below 70 / above 180; a trace that starts out of range counts once.
  int hypo_events = 0;
  int hyper_events = 0;
  /// Mean cumulative environment reward per episode.
  double mean_return = 0.0;
  int episodes = 0;
};

GlycemicMetrics glycemic_metrics(const std::vector<double>& bg);

struct TraceRow {
  int t = 0;
  double glucose = 0.0;
  double insulin = 0.0;
  double carbs = 0.0;
};

/// Deterministic-policy rollouts of full episodes. Metrics are pooled over
/// all samples; `trace` (optional) receives the last episode.
GlycemicMetrics evaluate(const GaussianPolicy& policy, GlucoseEnv& env, const ObsEncoder& encoder,
                         int episodes, std::vector<TraceRow>* trace = nullptr);

}  // namespace cinnrl::introrl
