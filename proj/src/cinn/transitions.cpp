#include "cinnrl/cinn/transitions.hpp"

#include "cinnrl/error.hpp"

#include <cmath>

namespace cinnrl::cinn {

using num::Index;
using num::Matrix;
using num::RowVector;
using num::Var;

Transitions Transitions::rows(const std::vector<Index>& idx) const {
  Transitions out;
  out.s = s(idx, Eigen::all);
  out.a = a(idx, Eigen::all);
  out.s_next = s_next(idx, Eigen::all);
  return out;
}

Transitions Transitions::head(Index count) const {
  return {s.topRows(count), a.topRows(count), s_next.topRows(count)};
}

Transitions Transitions::tail(Index count) const {
  return {s.bottomRows(count), a.bottomRows(count), s_next.bottomRows(count)};
}

Normalizer Normalizer::identity(Index dim) {
  return {RowVector::Zero(dim), RowVector::Ones(dim)};
}

Normalizer Normalizer::fit(const std::vector<const Matrix*>& blocks) {
  if (blocks.empty() || blocks.front()->rows() == 0) throw ShapeError("Normalizer::fit: no data");
  const Index dim = blocks.front()->cols();
  RowVector sum = RowVector::Zero(dim);
  Index count = 0;
  for (const Matrix* m : blocks) {
    if (m->cols() != dim) throw ShapeError("Normalizer::fit: column count differs between blocks");
    sum += m->colwise().sum();
    count += m->rows();
  }
  Normalizer out;
  out.mean = sum / static_cast<double>(count);
  RowVector ss = RowVector::Zero(dim);
  for (const Matrix* m : blocks) ss += (m->rowwise() - out.mean).array().square().colwise().sum().matrix();
  out.scale = (ss / static_cast<double>(count)).array().sqrt();
  for (Index j = 0; j < dim; ++j) {
    if (!(out.scale(j) > 1e-8 * std::max(1.0, std::abs(out.mean(j))))) out.scale(j) = 1.0;
  }
  return out;
}

namespace {

void check_dim(Index cols, Index dim) {
  if (cols != dim) {
    throw ShapeError("Normalizer: expected " + std::to_string(dim) + " columns, got " + std::to_string(cols));
  }
}

}  // namespace

Matrix Normalizer::apply(const Matrix& x) const {
  check_dim(x.cols(), dim());
  return ((x.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

Matrix Normalizer::invert(const Matrix& z) const {
  check_dim(z.cols(), dim());
  return ((z.array().rowwise() * scale.array()).rowwise() + mean.array()).matrix();
}

Var Normalizer::apply(const Var& x) const {
  const Matrix inv = scale.cwiseInverse().asDiagonal().toDenseMatrix();
  return num::matmul(num::add_rowwise(x, num::constant(-mean)), num::constant(inv));
}

Var Normalizer::invert(const Var& z) const {
  const Matrix d = scale.asDiagonal().toDenseMatrix();
  return num::add_rowwise(num::matmul(z, num::constant(d)), num::constant(mean));
}

Scaling Scaling::identity(Index state_dim, Index action_dim) {
  return {Normalizer::identity(state_dim), Normalizer::identity(action_dim)};
}

Scaling Scaling::fit(const Transitions& data) {
  return {Normalizer::fit({&data.s, &data.s_next}), Normalizer::fit({&data.a})};
}

}  // namespace cinnrl::cinn
