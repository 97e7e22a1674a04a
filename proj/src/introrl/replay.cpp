#include "cinnrl/introrl/replay.hpp"

#include "cinnrl/error.hpp"

#include <algorithm>
#include <unordered_set>

namespace cinnrl::introrl {

ReplayBuffer::ReplayBuffer(Index capacity, Index obs_dim, Index action_dim, Index state_dim)
    : capacity_(capacity),
      obs_(capacity, obs_dim),
      unit_(capacity, action_dim),
      obs_next_(capacity, obs_dim),
      s_(capacity, state_dim),
      s_next_(capacity, state_dim),
      executed_(capacity, action_dim),
      reward_(capacity),
      not_done_(capacity),
      meal_(capacity) {
  if (capacity < 1) throw Error("ReplayBuffer: capacity must be >= 1");
}

void ReplayBuffer::add(const Transition& t) {
  if (t.obs.size() != obs_.cols() || t.unit.size() != unit_.cols() || t.s.size() != s_.cols()) {
    throw ShapeError("ReplayBuffer::add: transition shape does not match the buffer");
  }
  obs_.row(next_) = t.obs.transpose();
  unit_.row(next_) = t.unit.transpose();
  obs_next_.row(next_) = t.obs_next.transpose();
  s_.row(next_) = t.s.transpose();
  s_next_.row(next_) = t.s_next.transpose();
  executed_.row(next_) = t.executed.transpose();
  reward_(next_) = t.reward;
  not_done_(next_) = t.done ? 0.0 : 1.0;
  meal_(next_) = t.meal;
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Batch ReplayBuffer::sample(Index batch, num::Rng& rng) const {
  if (batch < 1 || batch > size_) {
    throw Error("ReplayBuffer::sample: batch " + std::to_string(batch) + " with " + std::to_string(size_) +
                " stored transitions");
  }
  Batch out;
  std::unordered_set<Index> seen;
  while (static_cast<Index>(out.indices.size()) < batch) {
    const auto i = static_cast<Index>(rng() % static_cast<std::uint64_t>(size_));
    if (seen.insert(i).second) out.indices.push_back(i);
  }
  const auto& idx = out.indices;
  out.obs = obs_(idx, Eigen::all);
  out.unit = unit_(idx, Eigen::all);
  out.obs_next = obs_next_(idx, Eigen::all);
  out.s = s_(idx, Eigen::all);
  out.s_next = s_next_(idx, Eigen::all);
  out.executed = executed_(idx, Eigen::all);
  out.reward = reward_(idx);
  out.not_done = not_done_(idx);
  out.meal = meal_(idx);
  return out;
}

Transition ReplayBuffer::at(Index i) const {
  if (i < 0 || i >= size_) throw Error("ReplayBuffer::at: index out of range");
  const Index r = size_ < capacity_ ? i : (next_ + i) % capacity_;
  Transition t;
  t.obs = obs_.row(r).transpose();
  t.unit = unit_.row(r).transpose();
  t.obs_next = obs_next_.row(r).transpose();
  t.s = s_.row(r).transpose();
  t.s_next = s_next_.row(r).transpose();
  t.executed = executed_.row(r).transpose();
  t.reward = reward_(r);
  t.done = not_done_(r) == 0.0;
  t.meal = meal_(r);
  return t;
}

}  // namespace cinnrl::introrl
