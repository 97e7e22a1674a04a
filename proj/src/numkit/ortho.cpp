#include "cinnrl/numkit/ortho.hpp"

#include "cinnrl/error.hpp"
#include "cinnrl/numkit/linalg.hpp"

namespace cinnrl::num {

OrthoParam::OrthoParam(Index rows, Index order) : OrthoParam(rows, Parameter(Matrix(0, order))) {}

OrthoParam::OrthoParam(Index rows, Parameter reflectors)
    : rows_(rows), reflectors_(std::move(reflectors)) {
  if (rows_ < 0 || rows_ > order()) {
    throw ShapeError("OrthoParam: " + std::to_string(rows_) + " rows exceed order " +
                     std::to_string(order()));
  }
}

OrthoParam OrthoParam::random(Index rows, Index order, Rng& rng, Index reflector_count) {
  const Index k = reflector_count < 0 ? order : reflector_count;
  return OrthoParam(rows, Parameter(normal_matrix(k, order, rng)));
}

Matrix OrthoParam::materialize() const { return householder_rows(reflectors_.value, rows_); }

Var OrthoParam::materialize(bool trainable) const {
  return householder_rows(bind(reflectors_, trainable), rows_);
}

}  // namespace cinnrl::num
