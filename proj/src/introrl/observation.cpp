#include "cinnrl/introrl/observation.hpp"

#include "cinnrl/glucosim/dataset.hpp"

#include <cmath>
#include <numbers>

namespace cinnrl::introrl {

ObsEncoder ObsEncoder::fit(const glucosim::PatientModel& model, const EnvConfig& cfg) {
  glucosim::GenConfig gen;
  gen.n_traj = 1;
  gen.steps = cfg.episode_steps;
  gen.initial_spread = 0.0;
  gen.therapy = model.nominal_therapy();
  gen.meals = cfg.meals;
  const glucosim::Dataset day = gen_dataset(model, glucosim::dose_policy(0, 0.0), gen);
  ObsEncoder enc;
  enc.state = cinn::Normalizer::fit({&day.data.s});
  enc.steps_per_day = glucosim::MealSchedule(cfg.meals, model.dt()).steps_per_day();
  return enc;
}

Vector ObsEncoder::encode(const Vector& s, double meal, int t) const {
  Vector out(dim());
  const Index n = state.dim();
  out.head(n) = state.apply(Matrix(s.transpose())).transpose();
  const double phase = 2.0 * std::numbers::pi * (t % steps_per_day) / steps_per_day;
  out(n) = meal / meal_scale;
  out(n + 1) = std::sin(phase);
  out(n + 2) = std::cos(phase);
  return out;
}

}  // namespace cinnrl::introrl
