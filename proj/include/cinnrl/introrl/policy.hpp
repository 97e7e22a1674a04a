#pragma once

#include "cinnrl/introrl/env.hpp"
#include "cinnrl/numkit/mlp.hpp"

namespace cinnrl::introrl {

using num::Var;

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

/// Reparameterized draw: the squashed unit action in (-1, 1) and its
/// log-density (tanh correction included).
struct PolicySample {
  Var unit;
  Var log_prob;
};

/// Gaussian policy over two action dimensions, squashed by tanh and scaled
/// to ActionBounds. One trunk emits [mean, log_std].
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(num::Mlp trunk, ActionBounds bounds);
  static GaussianPolicy random(Index obs_dim, Index hidden, const ActionBounds& bounds, num::Rng& rng);

  Index obs_dim() const { return trunk_.in_dim(); }
  Index action_dim() const { return trunk_.out_dim() / 2; }

  /// tanh(mean) per row.
  Var deterministic(const Var& obs, bool trainable) const;
  /// `noise` holds standard normal draws, one row per observation row.
  PolicySample sample(const Var& obs, const Matrix& noise, bool trainable) const;

  /// Squashed action in (-1, 1) for a single observation.
  Vector select_unit(const Vector& obs, bool stochastic, num::Rng& rng) const;
  /// Action in bounds for a single observation.
  Vector select_action(const Vector& obs, bool stochastic, num::Rng& rng) const;

  const ActionBounds& bounds() const { return bounds_; }
  num::Mlp& trunk() { return trunk_; }
  const num::Mlp& trunk() const { return trunk_; }
  std::vector<num::Parameter*> parameters() { return trunk_.parameters(); }

 private:
  num::Mlp trunk_;
  ActionBounds bounds_;
};

/// Maps squashed unit actions to bounds, row-wise.
Var scale_to_bounds(const Var& unit, const ActionBounds& bounds);

}  // namespace cinnrl::introrl
