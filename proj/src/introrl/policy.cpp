#include "cinnrl/introrl/policy.hpp"

#include "cinnrl/error.hpp"

#include <cmath>
#include <numbers>

namespace cinnrl::introrl {

GaussianPolicy::GaussianPolicy(num::Mlp trunk, ActionBounds bounds)
    : trunk_(std::move(trunk)), bounds_(std::move(bounds)) {
  if (trunk_.out_dim() != 2 * bounds_.low.size()) {
    throw ShapeError("GaussianPolicy: trunk must emit mean and log_std for every action dimension");
  }
}

GaussianPolicy GaussianPolicy::random(Index obs_dim, Index hidden, const ActionBounds& bounds, num::Rng& rng) {
  return GaussianPolicy(num::Mlp::random({obs_dim, hidden, hidden, 2 * bounds.low.size()}, rng,
                                         num::kDefaultNegativeSlope, 0.1),
                        bounds);
}

Var GaussianPolicy::deterministic(const Var& obs, bool trainable) const {
  return num::tanh(num::columns(trunk_.forward(obs, trainable), 0, action_dim()));
}

PolicySample GaussianPolicy::sample(const Var& obs, const Matrix& noise, bool trainable) const {
  const Index k = action_dim();
  if (noise.rows() != obs.rows() || noise.cols() != k) throw ShapeError("GaussianPolicy::sample: noise shape");
  const Var out = trunk_.forward(obs, trainable);
  const Var mean = num::columns(out, 0, k);
  const Var log_std = num::clamp(num::columns(out, k, k), kLogStdMin, kLogStdMax);
  const Var eps = num::constant(noise);
  const Var pre = mean + num::hadamard(num::exp(log_std), eps);
  const Var unit = num::tanh(pre);
  // log N(pre; mean, std) = -eps^2/2 - log_std - log(2 pi)/2, then the tanh Jacobian.
  const double c = 0.5 * std::log(2.0 * std::numbers::pi);
  const Var gauss = num::add_scalar(-0.5 * num::square(eps) - log_std, -c);
  const Var jac = num::log(num::add_scalar(-num::square(unit), 1.0 + 1e-6));
  return {unit, num::row_sum(gauss - jac)};
}

Vector GaussianPolicy::select_unit(const Vector& obs, bool stochastic, num::Rng& rng) const {
  const Var x = num::constant(obs.transpose());
  Matrix unit;
  if (stochastic) {
    const Matrix noise = num::normal_matrix(1, action_dim(), rng);
    unit = sample(x, noise, false).unit.value();
  } else {
    unit = deterministic(x, false).value();
  }
  return unit.row(0).transpose();
}

Vector GaussianPolicy::select_action(const Vector& obs, bool stochastic, num::Rng& rng) const {
  return bounds_.scale(select_unit(obs, stochastic, rng));
}

Var scale_to_bounds(const Var& unit, const ActionBounds& bounds) {
  const Vector half = 0.5 * (bounds.high - bounds.low);
  const num::RowVector offset = (bounds.low + half).transpose();
  const Matrix d = half.asDiagonal().toDenseMatrix();
  return num::add_rowwise(num::matmul(unit, num::constant(d)), num::constant(offset));
}

}  // namespace cinnrl::introrl
