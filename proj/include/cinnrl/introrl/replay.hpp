#pragma once

#include "cinnrl/numkit/random.hpp"
#include "cinnrl/numkit/var.hpp"

#include <vector>

namespace cinnrl::introrl {

using num::Index;
using num::Matrix;
using num::Vector;

struct Transition {
  Vector obs;
  /// Policy action in squashed units, (-1, 1).
  Vector unit;
  double reward = 0.0;
  Vector obs_next;
  /// Terminal; the end of a simulated day is a time limit, not terminal.
  bool done = false;
  /// Raw patient states and the executed (insulin, carbs) for the CINN terms.
  Vector s;
  Vector s_next;
  Vector executed;
  double meal = 0.0;
};

/// Rows of a sampled batch.
struct Batch {
  Matrix obs;
  Matrix unit;
  Vector reward;
  Matrix obs_next;
  Vector not_done;
  Matrix s;
  Matrix s_next;
  Matrix executed;
  Vector meal;
  std::vector<Index> indices;

  Index size() const { return obs.rows(); }
};

/// Fixed-capacity FIFO ring buffer.
class ReplayBuffer {
 public:
  ReplayBuffer(Index capacity, Index obs_dim, Index action_dim, Index state_dim);

  void add(const Transition& t);
  Index size() const { return size_; }
  Index capacity() const { return capacity_; }
  /// Uniform over stored transitions, without replacement within the batch.
  Batch sample(Index batch, num::Rng& rng) const;
  /// Oldest-first position of the i-th stored transition.
  Transition at(Index i) const;

 private:
  Index capacity_;
  Index size_ = 0;
  Index next_ = 0;
  Matrix obs_, unit_, obs_next_, s_, s_next_, executed_;
  Vector reward_, not_done_, meal_;
};

}  // namespace cinnrl::introrl
