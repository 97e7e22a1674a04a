#pragma once

#include "cinnrl/cinn/model.hpp"

namespace cinnrl::cinn {

/// One network over [s, s', a] predicting [s', a]. The unknown part of the
/// input is masked to zero: s' for forward prediction, a for inference.
class MaskedMlp : public BidirectionalModel {
 public:
  MaskedMlp(Index state_dim, Index action_dim, num::Mlp net);
  static MaskedMlp random(Index state_dim, Index action_dim, const std::vector<Index>& hidden,
                          num::Rng& rng, double negative_slope = num::kDefaultNegativeSlope);

  Var forward(const Var& s, const Var& a, bool trainable) const override;
  Var inverse(const Var& s, const Var& s_next, bool trainable) const override;
  std::vector<num::Parameter*> parameters() override { return net_.parameters(); }
  Index state_dim() const override { return n_; }
  Index action_dim() const override { return k_; }

  const num::Mlp& net() const { return net_; }

 private:
  Index n_;
  Index k_;
  num::Mlp net_;
};

}  // namespace cinnrl::cinn
