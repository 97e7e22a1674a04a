#include "cinnrl/glucosim/reward.hpp"

#include <algorithm>

namespace cinnrl::glucosim {

double glucose_deviation(double bg) {
  return std::max({std::min(bg - kTargetLow, bg - kTargetHigh), std::min(kTargetLow - bg, kTargetHigh - bg), 0.0});
}

double reward(double bg) {
  const double d = glucose_deviation(bg);
  return -d * d;
}

}  // namespace cinnrl::glucosim
