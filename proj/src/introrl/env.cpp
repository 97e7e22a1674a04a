#include "cinnrl/introrl/env.hpp"

#include "cinnrl/error.hpp"
#include "cinnrl/glucosim/reward.hpp"

#include <algorithm>
#include <random>

namespace cinnrl::introrl {

ActionBounds ActionBounds::from(const EnvConfig& cfg) {
  ActionBounds b;
  b.low = Vector(2);
  b.high = Vector(2);
  b.low << 0.0, -cfg.rescue_max;
  b.high << cfg.insulin_max, cfg.rescue_max;
  return b;
}

Vector ActionBounds::scale(const Vector& unit) const {
  return low + 0.5 * (unit.array() + 1.0).matrix().cwiseProduct(high - low);
}

GlucoseEnv::GlucoseEnv(glucosim::PatientModel model, EnvConfig cfg, std::uint64_t seed)
    : model_(std::move(model)),
      cfg_(std::move(cfg)),
      meals_(cfg_.meals, model_.dt()),
      rng_(num::derive_seed(seed, "env")) {
  if (cfg_.episode_steps < 1) throw Error("GlucoseEnv: episode_steps must be >= 1");
  rest_ = model_.resting_state(model_.nominal_therapy().basal);
  state_ = rest_;
}

Vector GlucoseEnv::reset() {
  std::normal_distribution<double> start(120.0, cfg_.initial_spread);
  state_ = model_.with_glucose(rest_, std::clamp(start(rng_), 70.0, 250.0));
  t_ = 0;
  return state_;
}

Vector GlucoseEnv::execute(const Vector& action, double meal_carbs) {
  Vector out(2);
  out(0) = std::max(0.0, action(0));
  out(1) = meal_carbs + std::max(0.0, action(1));
  return out;
}

StepResult GlucoseEnv::step(const Vector& action) {
  if (action.size() != 2 || !action.allFinite()) throw Error("GlucoseEnv::step: action must be 2 finite values");
  StepResult r;
  r.executed = execute(action, meal_now());
  r.s_next = model_.step(state_, r.executed, &r.clamped);
  clamp_events_ += r.clamped ? 1 : 0;
  r.glucose = model_.glucose(r.s_next);
  r.reward = glucosim::reward(r.glucose);
  state_ = r.s_next;
  ++t_;
  r.done = t_ >= cfg_.episode_steps;
  return r;
}

}  // namespace cinnrl::introrl
