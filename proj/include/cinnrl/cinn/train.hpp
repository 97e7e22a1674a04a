#pragma once

#include "cinnrl/cinn/model.hpp"
#include "cinnrl/numkit/adam.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace cinnrl::cinn {

struct TrainConfig {
  /// Initial learning rate; it follows a cosine decay to lr * final_lr_fraction.
  double lr = 1e-3;
  double final_lr_fraction = 0.01;
  int batch = 32;
  int epochs = 200;
  std::uint64_t seed = 0;
};

/// Forward (state) and backward (action) mean squared errors in normalized
/// coordinates, and their sum.
struct Losses {
  double forward = 0.0;
  double backward = 0.0;
  double total() const { return forward + backward; }
};

struct EpochRecord {
  int epoch = 0;
  Losses train;
  std::vector<Losses> test;
};

Losses loss_bidirectional(const BidirectionalModel& model, const Transitions& data);

/// Mini-batch training: per batch the forward loss and the inverse loss are
/// back-propagated in turn, gradients accumulate, then one Adam step is
/// taken. After every epoch the losses on `train` and each test set are
/// recorded. A non-finite loss raises DivergenceError with the epoch.
std::vector<EpochRecord> train_bidirectional(
    BidirectionalModel& model, const Transitions& train, const std::vector<Transitions>& tests,
    const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace cinnrl::cinn
