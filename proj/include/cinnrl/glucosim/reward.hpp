#pragma once

namespace cinnrl::glucosim {

inline constexpr double kTargetLow = 70.0;
inline constexpr double kTargetHigh = 180.0;

/// Distance of a glucose reading (mg/dl) from the 70-180 target range.
double glucose_deviation(double bg);

/// Environment reward: the negated squared deviation, so 0 inside the range.
double reward(double bg);

}  // namespace cinnrl::glucosim
