#pragma once

#include "cinnrl/numkit/var.hpp"

#include <vector>

namespace cinnrl::cinn {

/// Row-aligned (s, a, s') tuples.
struct Transitions {
  num::Matrix s;
  num::Matrix a;
  num::Matrix s_next;

  num::Index size() const { return s.rows(); }
  num::Index state_dim() const { return s.cols(); }
  num::Index action_dim() const { return a.cols(); }
  Transitions rows(const std::vector<num::Index>& idx) const;
  Transitions head(num::Index count) const;
  Transitions tail(num::Index count) const;
};

/// Fixed per-column affine map x -> (x - mean) / scale.
struct Normalizer {
  num::RowVector mean;
  num::RowVector scale;

  static Normalizer identity(num::Index dim);
  /// Column statistics of the stacked blocks; near-constant columns keep scale 1.
  static Normalizer fit(const std::vector<const num::Matrix*>& blocks);

  num::Index dim() const { return mean.size(); }
  num::Matrix apply(const num::Matrix& x) const;
  num::Matrix invert(const num::Matrix& z) const;
  num::Var apply(const num::Var& x) const;
  num::Var invert(const num::Var& z) const;
};

/// Normalizers for the state space (shared by s and s') and the action space.
struct Scaling {
  Normalizer state;
  Normalizer action;

  static Scaling identity(num::Index state_dim, num::Index action_dim);
  static Scaling fit(const Transitions& data);
};

}  // namespace cinnrl::cinn
