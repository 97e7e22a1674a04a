#pragma once

#include "cinnrl/glucosim/dosing.hpp"
#include "cinnrl/glucosim/patient.hpp"
#include "cinnrl/numkit/random.hpp"

#include <cstdint>
#include <vector>

namespace cinnrl::introrl {

using num::Index;
using num::Matrix;
using num::Vector;

struct EnvConfig {
  int episode_steps = 288;
  /// Insulin dose range (U/step) the policy can command.
  double insulin_max = 1.0;
  /// Rescue carbohydrate range (g/step); the commanded value is clipped at 0.
  double rescue_max = 2.0;
  double initial_spread = 20.0;
  std::vector<glucosim::MealEvent> meals = glucosim::default_meals();
};

/// Lower/upper bounds of the policy's two action dimensions:
/// insulin in [0, insulin_max] and rescue carbohydrate in [-rescue_max, rescue_max].
struct ActionBounds {
  Vector low;
  Vector high;

  static ActionBounds from(const EnvConfig& cfg);
  Vector midpoint() const { return 0.5 * (low + high); }
  /// Maps a squashed value in [-1, 1] to the bounds.
  Vector scale(const Vector& unit) const;
};

struct StepResult {
  Vector s_next;
  /// Insulin and total carbohydrate actually delivered.
  Vector executed;
  double reward = 0.0;
  double glucose = 0.0;
  bool done = false;
  bool clamped = false;
};

/// One simulated day per episode with the fixed meal plan. The policy
/// commands insulin and rescue carbohydrate; scheduled meals are added by
/// the environment.
class GlucoseEnv {
 public:
  GlucoseEnv(glucosim::PatientModel model, EnvConfig cfg, std::uint64_t seed);

  Vector reset();
  /// `action` in policy bounds (see ActionBounds).
  StepResult step(const Vector& action);

  /// Executed (insulin, carbs) for a policy action given the scheduled meal.
  static Vector execute(const Vector& action, double meal_carbs);

  const Vector& state() const { return state_; }
  int t() const { return t_; }
  double meal_now() const { return meals_.carbs_at(t_); }
  double glucose() const { return model_.glucose(state_); }
  const glucosim::PatientModel& model() const { return model_; }
  const EnvConfig& config() const { return cfg_; }
  const glucosim::MealSchedule& meals() const { return meals_; }
  int clamp_events() const { return clamp_events_; }

 private:
  glucosim::PatientModel model_;
  EnvConfig cfg_;
  glucosim::MealSchedule meals_;
  num::Rng rng_;
  Vector rest_;
  Vector state_;
  int t_ = 0;
  int clamp_events_ = 0;
};

}  // namespace cinnrl::introrl
