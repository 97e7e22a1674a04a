#pragma once

#include "cinnrl/numkit/random.hpp"
#include "cinnrl/numkit/var.hpp"

namespace cinnrl::num {

/// Semi-orthogonal (rows x order) matrix stored as Householder reflectors.
/// The materialized matrix is the leading `rows` rows of H_1 ... H_k, so
/// W W^T = I holds by construction for any reflector values.
class OrthoParam {
 public:
  OrthoParam() = default;
  /// k = 0 reflectors: W is the leading rows of the identity.
  OrthoParam(Index rows, Index order);
  OrthoParam(Index rows, Parameter reflectors);

  /// `reflector_count` < 0 selects k = order.
  static OrthoParam random(Index rows, Index order, Rng& rng, Index reflector_count = -1);

  Index rows() const { return rows_; }
  Index order() const { return reflectors_.value.cols(); }
  Index reflector_count() const { return reflectors_.value.rows(); }

  Matrix materialize() const;
  Var materialize(bool trainable) const;

  Parameter& reflectors() { return reflectors_; }
  const Parameter& reflectors() const { return reflectors_; }

 private:
  Index rows_ = 0;
  Parameter reflectors_;
};

}  // namespace cinnrl::num
