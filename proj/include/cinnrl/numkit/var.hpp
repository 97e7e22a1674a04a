#pragma once

// Reverse-mode differentiation over dense Eigen matrices.
//
// A Var is a handle to a node of a dynamically built expression graph. Every
// op evaluates eagerly and, when at least one input requires a gradient,
// records a closure that maps the node's gradient back onto its inputs.
// Nodes whose inputs are all constants are themselves constants, so graphs
// built over frozen parameters cost no more than plain evaluation.
//
// Batches are stored row-wise: a (batch x features) matrix multiplies a
// (features x out) weight from the right.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace cinnrl::num {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Trainable tensor. Copies receive a fresh id and a zeroed gradient.
class Parameter {
 public:
  Parameter();
  explicit Parameter(Matrix value);
  Parameter(const Parameter& other);
  Parameter& operator=(const Parameter& other);
  Parameter(Parameter&& other) noexcept;
  Parameter& operator=(Parameter&& other) noexcept;

  std::uint64_t id() const noexcept { return id_; }
  void zero_grad();

  Matrix value;
  // Accumulation scratch written by backward(); not part of the value.
  mutable Matrix grad;

 private:
  std::uint64_t id_;
};

struct Node {
  Matrix value;
  Matrix grad;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;
  const Parameter* param = nullptr;
  bool requires_grad = false;
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Matrix& value() const { return node_->value; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  double scalar() const;
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Matrix value);
/// Leaf bound to a parameter; backward() accumulates into p.grad.
Var leaf(const Parameter& p);
/// leaf(p) when trainable, constant(p.value) otherwise.
Var bind(const Parameter& p, bool trainable);

/// Accumulates d(loss)/d(param) into every reachable Parameter::grad.
/// The loss must be 1x1. Intermediate gradients are reset on every call, so
/// calling twice doubles the parameter gradients.
void backward(const Var& loss);

/// Builds an op node. `fn` receives the node after its gradient is set and
/// must add contributions into the gradients of inputs that require them.
Var make_op(Matrix value, std::vector<Var> inputs, std::function<void(Node&)> fn);

// Elementwise and linear algebra ops.
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
/// a + row broadcast over every row of a.
Var add_rowwise(const Var& a, const Var& row);
/// Multiplies every column of a by the (rows x 1) column vector.
Var mul_colwise(const Var& a, const Var& column);
Var transpose(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var tanh(const Var& a);
Var square(const Var& a);
Var leaky_relu(const Var& a, double negative_slope);
/// Hard clamp; gradient is zero outside [lo, hi].
Var clamp(const Var& a, double lo, double hi);
Var minimum(const Var& a, const Var& b);
Var sum(const Var& a);
Var mean(const Var& a);
/// Sum over columns, (rows x 1).
Var row_sum(const Var& a);
Var columns(const Var& a, Index start, Index count);
Var hconcat(const std::vector<Var>& parts);
/// Gathers the listed columns in order.
Var select_columns(const Var& a, const std::vector<Index>& indices);

/// First `rows` rows of H_1 H_2 ... H_k for the k reflector rows of
/// `reflectors` (k x m), H_i = I - 2 v v^T / (v^T v).
Var householder_rows(const Var& reflectors, Index rows);

/// Least-squares solution X of A X = B (column right-hand sides).
Var lstsq(const Var& a, const Var& b);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator-(const Var& a) { return scale(a, -1.0); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }
inline Var operator*(const Var& a, double s) { return scale(a, s); }

}  // namespace cinnrl::num
