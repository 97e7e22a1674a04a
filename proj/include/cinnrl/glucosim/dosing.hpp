#pragma once

#include "cinnrl/glucosim/patient.hpp"
#include "cinnrl/numkit/random.hpp"

#include <vector>

namespace cinnrl::glucosim {

struct MealEvent {
  double minute = 0.0;  // minutes after midnight
  double grams = 0.0;

  bool operator==(const MealEvent&) const = default;
};

/// 07:00 60 g, 12:00 80 g, 18:00 70 g.
std::vector<MealEvent> default_meals();

/// Daily meal plan discretized to steps of dt minutes. Each meal is
/// delivered within a single step; two meals in one step are rejected.
class MealSchedule {
 public:
  MealSchedule() = default;
  MealSchedule(std::vector<MealEvent> events, double dt);

  const std::vector<MealEvent>& events() const { return events_; }
  int steps_per_day() const { return steps_per_day_; }
  /// Carbohydrate (g) delivered at global step index `step`.
  double carbs_at(long step) const;
  double total_grams() const;

 private:
  std::vector<MealEvent> events_;
  std::vector<double> per_step_;
  int steps_per_day_ = 0;
};

MealSchedule meal_schedule(const std::vector<MealEvent>& events = default_meals(), double dt = 5.0);

/// Policy i scales the nominal therapy by factor(i) with multiplicative
/// Gaussian jitter on every dose.
struct DosePolicy {
  int id = 0;
  double factor = 1.0;
  double jitter = 0.05;
};

inline constexpr int kPolicyCount = 9;
DosePolicy dose_policy(int id, double jitter = 0.05);

double nominal_dose(const Therapy& therapy, double bg, double carbs);
/// Jittered, scaled dose clipped to [0, therapy.max_insulin].
double sample_dose(const Therapy& therapy, const DosePolicy& policy, double bg, double carbs, num::Rng& rng);

}  // namespace cinnrl::glucosim
