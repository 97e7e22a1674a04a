#pragma once

#include "cinnrl/causal/plan.hpp"
#include "cinnrl/cinn/blocks.hpp"
#include "cinnrl/cinn/transitions.hpp"

#include <string>
#include <variant>
#include <vector>

namespace cinnrl::cinn {

/// A model that maps (s, a) -> s' and (s, s') -> a. The Var interface works
/// in normalized coordinates; predict/infer take and return raw values.
class BidirectionalModel {
 public:
  virtual ~BidirectionalModel() = default;

  virtual Var forward(const Var& s, const Var& a, bool trainable) const = 0;
  virtual Var inverse(const Var& s, const Var& s_next, bool trainable) const = 0;
  virtual std::vector<num::Parameter*> parameters() = 0;
  virtual Index state_dim() const = 0;
  virtual Index action_dim() const = 0;

  Matrix predict(const Matrix& s, const Matrix& a) const;
  Matrix infer(const Matrix& s, const Matrix& s_next) const;

  Scaling scaling;
};

using Block = std::variant<SymmetricBlock, AsymmetricBlock>;

class CinnModel : public BidirectionalModel {
 public:
  CinnModel(causal::BlockPlan plan, std::vector<Block> blocks, BlockOptions options = {});
  static CinnModel random(const causal::BlockPlan& plan, const BlockOptions& options, num::Rng& rng);

  Var forward(const Var& s, const Var& a, bool trainable) const override;
  Var inverse(const Var& s, const Var& s_next, bool trainable) const override;
  /// Throws once the model is frozen.
  std::vector<num::Parameter*> parameters() override;
  std::vector<const num::Parameter*> parameters() const;
  Index state_dim() const override { return plan_.state_dim; }
  Index action_dim() const override { return plan_.action_dim; }

  /// E[s' | do(a), s] for every row.
  Matrix forward_predict(const Matrix& s, const Matrix& a) const { return predict(s, a); }
  /// Action that would have produced s' from s, for every row.
  Matrix counterfactual_infer(const Matrix& s, const Matrix& s_next) const { return infer(s, s_next); }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  /// SHA-256 over every parameter value and the normalizers.
  std::string parameter_hash() const;
  /// Every semi-orthogonal matrix the model uses, in block order.
  std::vector<Matrix> orthogonal_maps() const;

  const causal::BlockPlan& plan() const { return plan_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const BlockOptions& options() const { return options_; }

 private:
  causal::BlockPlan plan_;
  std::vector<Block> blocks_;
  BlockOptions options_;
  bool frozen_ = false;
};

}  // namespace cinnrl::cinn
