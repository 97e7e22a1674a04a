#include "cinnrl/introrl/evaluate.hpp"

#include "cinnrl/error.hpp"

namespace cinnrl::introrl {

GlycemicMetrics glycemic_metrics(const std::vector<double>& bg) {
  GlycemicMetrics m;
  if (bg.empty()) return m;
  int in_range = 0;
  bool low = false, high = false;
  for (double g : bg) {
    if (g >= kRangeLow && g <= kRangeHigh) ++in_range;
    if (g < kRangeLow && !low) ++m.hypo_events;
    if (g > kRangeHigh && !high) ++m.hyper_events;
    low = g < kRangeLow;
    high = g > kRangeHigh;
  }
  m.time_in_range = 100.0 * in_range / static_cast<double>(bg.size());
  return m;
}

GlycemicMetrics evaluate(const GaussianPolicy& policy, GlucoseEnv& env, const ObsEncoder& encoder, int episodes,
                         std::vector<TraceRow>* trace) {
  if (episodes < 1) throw Error("evaluate: need at least one episode");
  std::vector<double> pooled;
  GlycemicMetrics total;
  double returns = 0.0;
  num::Rng unused(0);
  for (int e = 0; e < episodes; ++e) {
    env.reset();
    if (trace) trace->clear();
    std::vector<double> bg;
    for (bool done = false; !done;) {
      const Vector action = policy.select_action(encoder.encode(env), false, unused);
      const int t = env.t();
      const StepResult r = env.step(action);
      returns += r.reward;
      bg.push_back(r.glucose);
      if (trace) trace->push_back({t, r.glucose, r.executed(0), r.executed(1)});
      done = r.done;
    }
    const GlycemicMetrics m = glycemic_metrics(bg);
    total.hypo_events += m.hypo_events;
    total.hyper_events += m.hyper_events;
    pooled.insert(pooled.end(), bg.begin(), bg.end());
  }
  total.time_in_range = glycemic_metrics(pooled).time_in_range;
  total.mean_return = returns / episodes;
  total.episodes = episodes;
  return total;
}

}  // namespace cinnrl::introrl
