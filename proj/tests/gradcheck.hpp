#pragma once

#include "cinnrl/numkit/var.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace cinnrl::testing {

/// Largest elementwise relative error between backward() and central
/// differences of `loss` over every entry of `params`.
inline double grad_error(const std::function<num::Var()>& loss, const std::vector<num::Parameter*>& params,
                         double h = 1e-5) {
  for (num::Parameter* p : params) p->zero_grad();
  num::backward(loss());
  double worst = 0.0;
  for (num::Parameter* p : params) {
    const num::Matrix analytic = p->grad;
    for (num::Index i = 0; i < p->value.size(); ++i) {
      const double x0 = p->value.data()[i];
      p->value.data()[i] = x0 + h;
      const double up = loss().scalar();
      p->value.data()[i] = x0 - h;
      const double down = loss().scalar();
      p->value.data()[i] = x0;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  for (num::Parameter* p : params) p->zero_grad();
  return worst;
}

/// Scalar probe sum(W .* y) with fixed weights so every output entry matters.
inline num::Var probe(const num::Var& y, const num::Matrix& weights) {
  return num::sum(num::hadamard(y, num::constant(weights)));
}

}  // namespace cinnrl::testing

#include "cinnrl/numkit/mlp.hpp"
#include "cinnrl/numkit/random.hpp"

#include <utility>

namespace cinnrl::testing {

struct OpAudit {
  std::string op;
  double error;
};

/// Finite-difference audit of every differentiable primitive on random
/// small operands. Kinked ops (leaky_relu, clamp, minimum) are probed away
/// from their kinks.
inline std::vector<OpAudit> audit_primitives(std::uint64_t seed) {
  using namespace num;
  Rng rng(seed);
  std::vector<OpAudit> out;
  const auto run = [&](const std::string& name, std::vector<Parameter*> ps, const std::function<Var()>& f) {
    out.push_back({name, grad_error(f, ps)});
  };
  // Values bounded away from 0 so kinks are at least 0.2 away.
  const auto away = [&](Index r, Index c) {
    Matrix m = uniform_matrix(r, c, rng, 0.2, 1.5);
    for (Index i = 0; i < m.size(); ++i)
      if (rng() % 2) m.data()[i] = -m.data()[i];
    return m;
  };
  Parameter a(normal_matrix(3, 4, rng)), b(normal_matrix(3, 4, rng)), c(normal_matrix(4, 2, rng));
  Parameter row(normal_matrix(1, 4, rng)), col(normal_matrix(3, 1, rng));
  Parameter pos(uniform_matrix(3, 4, rng, 0.5, 2.0)), kinked(away(3, 4));
  const Matrix w34 = normal_matrix(3, 4, rng), w32 = normal_matrix(3, 2, rng), w43 = normal_matrix(4, 3, rng);
  const Matrix w31 = normal_matrix(3, 1, rng), w36 = normal_matrix(3, 6, rng);

  run("matmul", {&a, &c}, [&] { return probe(matmul(leaf(a), leaf(c)), w32); });
  run("add", {&a, &b}, [&] { return probe(add(leaf(a), leaf(b)), w34); });
  run("sub", {&a, &b}, [&] { return probe(sub(leaf(a), leaf(b)), w34); });
  run("hadamard", {&a, &b}, [&] { return probe(hadamard(leaf(a), leaf(b)), w34); });
  run("scale", {&a}, [&] { return probe(scale(leaf(a), -1.7), w34); });
  run("add_scalar", {&a}, [&] { return probe(square(add_scalar(leaf(a), 0.3)), w34); });
  run("add_rowwise", {&a, &row}, [&] { return probe(square(add_rowwise(leaf(a), leaf(row))), w34); });
  run("mul_colwise", {&a, &col}, [&] { return probe(mul_colwise(leaf(a), leaf(col)), w34); });
  run("transpose", {&a}, [&] { return probe(transpose(leaf(a)), w43); });
  run("exp", {&a}, [&] { return probe(exp(leaf(a)), w34); });
  run("log", {&pos}, [&] { return probe(log(leaf(pos)), w34); });
  run("tanh", {&a}, [&] { return probe(tanh(leaf(a)), w34); });
  run("square", {&a}, [&] { return probe(square(leaf(a)), w34); });
  run("leaky_relu", {&kinked}, [&] { return probe(leaky_relu(leaf(kinked), 0.01), w34); });
  run("clamp", {&kinked}, [&] { return probe(clamp(leaf(kinked), -1.0, 1.0), w34); });
  {
    Parameter lo(away(3, 4));
    Parameter hi(lo.value + away(3, 4));
    run("minimum", {&lo, &hi}, [&] { return probe(minimum(leaf(lo), leaf(hi)), w34); });
  }
  run("sum", {&a}, [&] { return sum(square(leaf(a))); });
  run("mean", {&a}, [&] { return mean(square(leaf(a))); });
  run("row_sum", {&a}, [&] { return probe(row_sum(square(leaf(a))), w31); });
  run("columns", {&a}, [&] { return probe(columns(leaf(a), 1, 2), w32); });
  run("hconcat", {&a, &col}, [&] { return probe(hconcat({leaf(a), leaf(col)}), w36.leftCols(5)); });
  run("select_columns", {&a}, [&] { return probe(select_columns(leaf(a), {3, 0}), w32); });
  {
    Parameter refl(normal_matrix(3, 4, rng));
    const Matrix w = normal_matrix(2, 4, rng);
    run("householder_rows", {&refl}, [&] { return probe(householder_rows(leaf(refl), 2), w); });
  }
  {
    Parameter sys(normal_matrix(5, 3, rng)), rhs(normal_matrix(5, 2, rng));
    run("lstsq", {&sys, &rhs}, [&] { return probe(lstsq(leaf(sys), leaf(rhs)), w32); });
  }
  {
    Mlp net = Mlp::random({3, 5, 2}, rng);
    const Matrix x = normal_matrix(4, 3, rng), w = normal_matrix(4, 2, rng);
    run("mlp", net.parameters(), [&] { return probe(net.forward(constant(x), true), w); });
  }
  return out;
}

}  // namespace cinnrl::testing
