#pragma once

#include "cinnrl/causal/plan.hpp"
#include "cinnrl/numkit/mlp.hpp"
#include "cinnrl/numkit/ortho.hpp"

#include <vector>

namespace cinnrl::cinn {

using num::Index;
using num::Matrix;
using num::Var;

struct BlockOptions {
  Index hidden = 16;
  int coupling_depth = 2;
  double negative_slope = num::kDefaultNegativeSlope;
  /// Coupling scale outputs are clamped to [-scale_clamp, scale_clamp] before exp.
  double scale_clamp = 5.0;
  /// Householder reflectors per orthogonal map; < 0 means one per column.
  Index reflectors = -1;
  /// Gain on the last layer of every coupling network at initialization.
  double init_gain = 1.0;
};

/// m_i produce log-scales and n_i shifts. m2, n2 read the second half and
/// update the first; m1, n1 read the updated first half and update the second.
struct CouplingPair {
  num::Mlp m1;
  num::Mlp m2;
  num::Mlp n1;
  num::Mlp n2;

  static CouplingPair zero(Index d1, Index d2, const BlockOptions& opt);
  static CouplingPair random(Index d1, Index d2, const BlockOptions& opt, num::Rng& rng);
};

/// Fuses the hidden vector u1 with the injected states u2 through a
/// semi-orthogonal map and a stack of affine couplings.
class SymmetricBlock {
 public:
  SymmetricBlock(causal::SymmetricSpec spec, num::OrthoParam fusion,
                 std::vector<CouplingPair> couplings, double scale_clamp = 5.0);
  static SymmetricBlock random(const causal::SymmetricSpec& spec, const BlockOptions& opt,
                               num::Rng& rng);

  /// [v1, v2], batch x io_dim.
  Var forward(const Var& u1, const Var& u2, bool trainable = false) const;
  /// Recovers u1 from [v1, v2] given the conditioning u2.
  Var inverse(const Var& v, const Var& u2, bool trainable = false) const;

  const causal::SymmetricSpec& spec() const { return spec_; }
  const num::OrthoParam& fusion() const { return fusion_; }
  const std::vector<CouplingPair>& couplings() const { return couplings_; }
  double scale_clamp() const { return scale_clamp_; }
  std::vector<num::Parameter*> parameters();
  std::vector<const num::Parameter*> parameters() const;

 private:
  causal::SymmetricSpec spec_;
  num::OrthoParam fusion_;
  std::vector<CouplingPair> couplings_;
  double scale_clamp_;
};

/// y = x W^T + B with W (out x in) having orthonormal rows. The input is
/// [hidden, known]; the inverse solves for the hidden part by least squares.
class AsymmetricBlock {
 public:
  AsymmetricBlock(causal::AsymmetricSpec spec, num::OrthoParam proj, num::Parameter bias);
  static AsymmetricBlock random(const causal::AsymmetricSpec& spec, const BlockOptions& opt,
                                num::Rng& rng);

  Index hidden_dim() const;
  Var forward(const Var& x, bool trainable = false) const;
  Var inverse(const Var& y, const Var& known, bool trainable = false) const;

  const causal::AsymmetricSpec& spec() const { return spec_; }
  const num::OrthoParam& proj() const { return proj_; }
  const num::Parameter& bias() const { return bias_; }
  std::vector<num::Parameter*> parameters();
  std::vector<const num::Parameter*> parameters() const;

 private:
  causal::AsymmetricSpec spec_;
  num::OrthoParam proj_;
  num::Parameter bias_;
};

}  // namespace cinnrl::cinn
