#pragma once

#include "cinnrl/introrl/evaluate.hpp"
#include "cinnrl/introrl/sac.hpp"

#include <functional>
#include <string>
#include <vector>

namespace cinnrl::introrl {

struct EpisodeRecord {
  int episode = 0;
  /// Environment reward only; intrinsic terms are excluded.
  double cum_reward = 0.0;
  double time_in_range = 0.0;
  int clamp_events = 0;
};

struct RlResult {
  std::vector<EpisodeRecord> curve;
  /// Glucose and delivered doses of the last training episode.
  std::vector<TraceRow> trace;
  std::string cinn_hash_before;
  std::string cinn_hash_after;
  long updates = 0;
  int clamp_events = 0;
};

/// Interleaves one environment step with one gradient update after warm-up.
/// With cfg.steps == 0 a single episode of the untrained stochastic policy
/// is recorded. sac_cinn and sac_icm need a frozen `model`.
RlResult train_rl(SacAgent& agent, GlucoseEnv& env, const ObsEncoder& encoder, const cinn::CinnModel* model,
                  const std::function<void(const EpisodeRecord&)>& on_episode = {});

}  // namespace cinnrl::introrl
