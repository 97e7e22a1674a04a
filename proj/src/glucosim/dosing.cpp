#include "cinnrl/glucosim/dosing.hpp"

#include "cinnrl/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

namespace cinnrl::glucosim {

std::vector<MealEvent> default_meals() {
  return {{7 * 60.0, 60.0}, {12 * 60.0, 80.0}, {18 * 60.0, 70.0}};
}

MealSchedule::MealSchedule(std::vector<MealEvent> events, double dt) : events_(std::move(events)) {
  if (!(dt > 0.0)) throw Error("meal schedule: dt must be positive");
  steps_per_day_ = static_cast<int>(std::lround(1440.0 / dt));
  per_step_.assign(static_cast<std::size_t>(steps_per_day_), 0.0);
  std::sort(events_.begin(), events_.end(), [](const MealEvent& a, const MealEvent& b) { return a.minute < b.minute; });
  for (const MealEvent& e : events_) {
    if (e.minute < 0.0 || e.minute >= 1440.0) throw Error("meal schedule: meal time outside the day");
    if (e.grams < 0.0) throw Error("meal schedule: negative carbohydrate amount");
    const auto slot = static_cast<std::size_t>(std::floor(e.minute / dt));
    if (per_step_[slot] > 0.0) {
      throw Error("meal schedule: meals overlap in the step starting at minute " +
                  std::to_string(static_cast<double>(slot) * dt));
    }
    per_step_[slot] = e.grams;
  }
}

double MealSchedule::carbs_at(long step) const {
  if (steps_per_day_ == 0) return 0.0;
  const long day_step = ((step % steps_per_day_) + steps_per_day_) % steps_per_day_;
  return per_step_[static_cast<std::size_t>(day_step)];
}

double MealSchedule::total_grams() const {
  return std::accumulate(events_.begin(), events_.end(), 0.0,
                         [](double acc, const MealEvent& e) { return acc + e.grams; });
}

MealSchedule meal_schedule(const std::vector<MealEvent>& events, double dt) { return MealSchedule(events, dt); }

DosePolicy dose_policy(int id, double jitter) {
  static constexpr std::array<double, kPolicyCount> factors{1.0, 0.9, 1.1, 0.8, 1.2, 0.7, 1.3, 0.6, 1.4};
  if (id < 0 || id >= kPolicyCount) throw Error("dose policy id must be in 0..8, got " + std::to_string(id));
  return {id, factors[static_cast<std::size_t>(id)], jitter};
}

double nominal_dose(const Therapy& therapy, double bg, double carbs) {
  return therapy.basal + carbs / therapy.icr + therapy.correction * std::max(0.0, bg - therapy.target);
}

double sample_dose(const Therapy& therapy, const DosePolicy& policy, double bg, double carbs, num::Rng& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  const double dose = nominal_dose(therapy, bg, carbs) * policy.factor * (1.0 + policy.jitter * noise(rng));
  return std::clamp(dose, 0.0, therapy.max_insulin);
}

}  // namespace cinnrl::glucosim
