#pragma once

#include "cinnrl/cinn/transitions.hpp"
#include "cinnrl/introrl/env.hpp"

namespace cinnrl::introrl {

/// Policy input: the z-scored patient state, the scheduled meal (scaled) and
/// the time of day as a point on the unit circle.
struct ObsEncoder {
  cinn::Normalizer state;
  double meal_scale = 50.0;
  int steps_per_day = 288;

  /// State statistics from one day of the nominal therapy.
  static ObsEncoder fit(const glucosim::PatientModel& model, const EnvConfig& cfg);

  Index dim() const { return state.dim() + 3; }
  Vector encode(const Vector& s, double meal, int t) const;
  Vector encode(const GlucoseEnv& env) const { return encode(env.state(), env.meal_now(), env.t()); }
};

}  // namespace cinnrl::introrl
