#include "cinnrl/cinn/baseline.hpp"

#include "cinnrl/error.hpp"

namespace cinnrl::cinn {

MaskedMlp::MaskedMlp(Index state_dim, Index action_dim, num::Mlp net)
    : n_(state_dim), k_(action_dim), net_(std::move(net)) {
  if (net_.in_dim() != 2 * n_ + k_ || net_.out_dim() != n_ + k_) {
    throw ShapeError("MaskedMlp: network must map " + std::to_string(2 * n_ + k_) + " -> " +
                     std::to_string(n_ + k_));
  }
  scaling = Scaling::identity(n_, k_);
}

MaskedMlp MaskedMlp::random(Index state_dim, Index action_dim, const std::vector<Index>& hidden,
                            num::Rng& rng, double negative_slope) {
  std::vector<Index> widths{2 * state_dim + action_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(state_dim + action_dim);
  return MaskedMlp(state_dim, action_dim, num::Mlp::random(widths, rng, negative_slope));
}

Var MaskedMlp::forward(const Var& s, const Var& a, bool trainable) const {
  const Var masked = num::constant(Matrix::Zero(s.rows(), n_));
  return num::columns(net_.forward(num::hconcat({s, masked, a}), trainable), 0, n_);
}

Var MaskedMlp::inverse(const Var& s, const Var& s_next, bool trainable) const {
  const Var masked = num::constant(Matrix::Zero(s.rows(), k_));
  return num::columns(net_.forward(num::hconcat({s, s_next, masked}), trainable), n_, k_);
}

}  // namespace cinnrl::cinn
