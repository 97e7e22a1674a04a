#pragma once

#include "cinnrl/numkit/var.hpp"

#include <cstdint>
#include <vector>

namespace cinnrl::num {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over a fixed parameter group. step() applies the
/// update from the accumulated gradients and then zeroes them.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter*> params, AdamConfig config = {});

  void step();
  void zero_grad();

  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  /// Rebinds to new parameter addresses (after the owner was copied or moved).
  void rebind(std::vector<Parameter*> params);

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::uint64_t t_ = 0;
  AdamConfig config_;
};

}  // namespace cinnrl::num
