#include "cinnrl/numkit/var.hpp"

#include "cinnrl/error.hpp"
#include "cinnrl/numkit/linalg.hpp"

#include <atomic>
#include <sstream>
#include <unordered_set>

namespace cinnrl::num {

namespace {

std::atomic<std::uint64_t> next_parameter_id{1};

std::string dims(const Matrix& m) {
  std::ostringstream out;
  out << m.rows() << "x" << m.cols();
  return out.str();
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": operand shapes differ (" + dims(a.value()) + " vs " +
                     dims(b.value()) + ")");
  }
}

// Adds `contribution` into the gradient of input i when that input is tracked.
template <typename Expr>
void accumulate(Node& self, std::size_t i, const Expr& contribution) {
  Node& in = *self.inputs[i];
  if (in.requires_grad) in.grad += contribution;
}

}  // namespace

Parameter::Parameter() : id_(next_parameter_id++) {}

Parameter::Parameter(Matrix v)
    : value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())), id_(next_parameter_id++) {}

Parameter::Parameter(const Parameter& other)
    : value(other.value), grad(Matrix::Zero(other.value.rows(), other.value.cols())),
      id_(next_parameter_id++) {}

Parameter& Parameter::operator=(const Parameter& other) {
  if (this != &other) {
    value = other.value;
    grad = Matrix::Zero(value.rows(), value.cols());
  }
  return *this;
}

Parameter::Parameter(Parameter&& other) noexcept
    : value(std::move(other.value)), grad(std::move(other.grad)), id_(other.id_) {}

Parameter& Parameter::operator=(Parameter&& other) noexcept {
  value = std::move(other.value);
  grad = std::move(other.grad);
  id_ = other.id_;
  return *this;
}

void Parameter::zero_grad() { grad = Matrix::Zero(value.rows(), value.cols()); }

double Var::scalar() const {
  if (rows() != 1 || cols() != 1) {
    throw ShapeError("Var::scalar: value is " + dims(value()) + ", expected 1x1");
  }
  return value()(0, 0);
}

Var constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var leaf(const Parameter& p) {
  auto node = std::make_shared<Node>();
  node->value = p.value;
  node->param = &p;
  node->requires_grad = true;
  return Var(std::move(node));
}

Var bind(const Parameter& p, bool trainable) { return trainable ? leaf(p) : constant(p.value); }

Var make_op(Matrix value, std::vector<Var> inputs, std::function<void(Node&)> fn) {
  if (!value.allFinite()) {
    throw NumericError("non-finite value produced (" + dims(value) + ")");
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const Var& in : inputs) {
    if (in.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (Var& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(fn);
  }
  return Var(std::move(node));
}

void backward(const Var& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + dims(loss.value()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (inputs before users).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->grad = Matrix::Zero(n->value.rows(), n->value.cols());
  loss.node()->grad(0, 0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) n->backward(*n);
    if (n->param != nullptr) {
      Matrix& pg = n->param->grad;
      if (pg.rows() != n->grad.rows() || pg.cols() != n->grad.cols()) {
        pg = Matrix::Zero(n->grad.rows(), n->grad.cols());
      }
      pg += n->grad;
    }
  }
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + dims(a.value()) + " * " + dims(b.value()));
  }
  Matrix out = a.value() * b.value();
  return make_op(std::move(out), {a, b}, [](Node& self) {
    const Matrix& av = self.inputs[0]->value;
    const Matrix& bv = self.inputs[1]->value;
    accumulate(self, 0, self.grad * bv.transpose());
    accumulate(self, 1, av.transpose() * self.grad);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  return make_op(a.value() + b.value(), {a, b}, [](Node& self) {
    accumulate(self, 0, self.grad);
    accumulate(self, 1, self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  return make_op(a.value() - b.value(), {a, b}, [](Node& self) {
    accumulate(self, 0, self.grad);
    accumulate(self, 1, -self.grad);
  });
}

Var hadamard(const Var& a, const Var& b) {
  require_same_shape("hadamard", a, b);
  return make_op(a.value().cwiseProduct(b.value()), {a, b}, [](Node& self) {
    accumulate(self, 0, self.grad.cwiseProduct(self.inputs[1]->value));
    accumulate(self, 1, self.grad.cwiseProduct(self.inputs[0]->value));
  });
}

Var scale(const Var& a, double s) {
  return make_op(a.value() * s, {a}, [s](Node& self) { accumulate(self, 0, self.grad * s); });
}

Var add_scalar(const Var& a, double s) {
  return make_op(a.value().array() + s, {a}, [](Node& self) { accumulate(self, 0, self.grad); });
}

Var add_rowwise(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_rowwise: row is " + dims(row.value()) + ", operand is " +
                     dims(a.value()));
  }
  Matrix out = a.value().rowwise() + row.value().row(0);
  return make_op(std::move(out), {a, row}, [](Node& self) {
    accumulate(self, 0, self.grad);
    accumulate(self, 1, self.grad.colwise().sum());
  });
}

Var mul_colwise(const Var& a, const Var& column) {
  if (column.cols() != 1 || column.rows() != a.rows()) {
    throw ShapeError("mul_colwise: column is " + dims(column.value()) + ", operand is " +
                     dims(a.value()));
  }
  Matrix out = a.value().array().colwise() * column.value().col(0).array();
  return make_op(std::move(out), {a, column}, [](Node& self) {
    const Matrix& av = self.inputs[0]->value;
    const Matrix& cv = self.inputs[1]->value;
    accumulate(self, 0, Matrix(self.grad.array().colwise() * cv.col(0).array()));
    accumulate(self, 1, self.grad.cwiseProduct(av).rowwise().sum());
  });
}

Var transpose(const Var& a) {
  return make_op(a.value().transpose(), {a},
                 [](Node& self) { accumulate(self, 0, self.grad.transpose()); });
}

Var exp(const Var& a) {
  Matrix out = a.value().array().exp();
  if (!out.allFinite()) {
    std::ostringstream msg;
    msg << "exp overflow: largest argument " << a.value().maxCoeff();
    throw NumericError(msg.str());
  }
  return make_op(std::move(out), {a},
                 [](Node& self) { accumulate(self, 0, self.grad.cwiseProduct(self.value)); });
}

Var log(const Var& a) {
  if ((a.value().array() <= 0.0).any()) {
    std::ostringstream msg;
    msg << "log of non-positive value " << a.value().minCoeff();
    throw NumericError(msg.str());
  }
  return make_op(a.value().array().log(), {a}, [](Node& self) {
    accumulate(self, 0, Matrix(self.grad.array() / self.inputs[0]->value.array()));
  });
}

Var tanh(const Var& a) {
  return make_op(a.value().array().tanh(), {a}, [](Node& self) {
    accumulate(self, 0, Matrix(self.grad.array() * (1.0 - self.value.array().square())));
  });
}

Var square(const Var& a) {
  return make_op(a.value().array().square(), {a}, [](Node& self) {
    accumulate(self, 0, Matrix(2.0 * self.grad.array() * self.inputs[0]->value.array()));
  });
}

Var leaky_relu(const Var& a, double negative_slope) {
  Matrix out = a.value().unaryExpr(
      [negative_slope](double x) { return x >= 0.0 ? x : negative_slope * x; });
  return make_op(std::move(out), {a}, [negative_slope](Node& self) {
    const Matrix& x = self.inputs[0]->value;
    Matrix slope = x.unaryExpr([negative_slope](double v) { return v >= 0.0 ? 1.0 : negative_slope; });
    accumulate(self, 0, self.grad.cwiseProduct(slope));
  });
}

Var clamp(const Var& a, double lo, double hi) {
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return make_op(std::move(out), {a}, [lo, hi](Node& self) {
    const Matrix& x = self.inputs[0]->value;
    Matrix pass = x.unaryExpr([lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
    accumulate(self, 0, self.grad.cwiseProduct(pass));
  });
}

Var minimum(const Var& a, const Var& b) {
  require_same_shape("minimum", a, b);
  return make_op(a.value().cwiseMin(b.value()), {a, b}, [](Node& self) {
    const Matrix& av = self.inputs[0]->value;
    const Matrix& bv = self.inputs[1]->value;
    Matrix take_a = (av.array() <= bv.array()).cast<double>();
    accumulate(self, 0, self.grad.cwiseProduct(take_a));
    accumulate(self, 1, Matrix(self.grad.array() * (1.0 - take_a.array())));
  });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return make_op(std::move(out), {a}, [](Node& self) {
    const Matrix& x = self.inputs[0]->value;
    accumulate(self, 0, Matrix::Constant(x.rows(), x.cols(), self.grad(0, 0)));
  });
}

Var mean(const Var& a) {
  const double count = static_cast<double>(a.value().size());
  if (count == 0.0) throw ShapeError("mean: empty operand");
  return scale(sum(a), 1.0 / count);
}

Var row_sum(const Var& a) {
  Matrix out = a.value().rowwise().sum();
  return make_op(std::move(out), {a}, [](Node& self) {
    const Index cols = self.inputs[0]->value.cols();
    accumulate(self, 0, self.grad.replicate(1, cols));
  });
}

Var columns(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError("columns: range [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " + dims(a.value()));
  }
  Matrix out = a.value().middleCols(start, count);
  return make_op(std::move(out), {a}, [start, count](Node& self) {
    Node& in = *self.inputs[0];
    if (in.requires_grad) in.grad.middleCols(start, count) += self.grad;
  });
}

Var hconcat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("hconcat: no operands");
  const Index rows = parts.front().rows();
  Index total = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) {
      throw ShapeError("hconcat: row counts differ (" + std::to_string(rows) + " vs " +
                       std::to_string(p.rows()) + ")");
    }
    total += p.cols();
  }
  Matrix out(rows, total);
  Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  return make_op(std::move(out), parts, [](Node& self) {
    Index off = 0;
    for (auto& in : self.inputs) {
      const Index c = in->value.cols();
      if (in->requires_grad) in->grad += self.grad.middleCols(off, c);
      off += c;
    }
  });
}

Var select_columns(const Var& a, const std::vector<Index>& indices) {
  Matrix out(a.rows(), static_cast<Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const Index src = indices[j];
    if (src < 0 || src >= a.cols()) {
      throw ShapeError("select_columns: index " + std::to_string(src) + " outside " +
                       dims(a.value()));
    }
    out.col(static_cast<Index>(j)) = a.value().col(src);
  }
  return make_op(std::move(out), {a}, [indices](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    for (std::size_t j = 0; j < indices.size(); ++j) {
      in.grad.col(indices[j]) += self.grad.col(static_cast<Index>(j));
    }
  });
}

Var householder_rows(const Var& reflectors, Index rows) {
  const Matrix& refl = reflectors.value();
  const Index m = refl.cols();
  const Index k = refl.rows();
  // partials[i] holds the product after the first i reflections.
  std::vector<Matrix> partials;
  partials.reserve(static_cast<std::size_t>(k) + 1);
  partials.push_back(householder_rows(Matrix(0, m), rows));
  for (Index i = 0; i < k; ++i) {
    const Vector v = refl.row(i).transpose();
    const double s = v.squaredNorm();
    if (!(s > 0.0)) {
      throw RankError("householder_rows: reflector " + std::to_string(i) + " has zero norm");
    }
    const Matrix& prev = partials.back();
    partials.push_back(prev - (2.0 / s) * (prev * v) * v.transpose());
  }
  Matrix out = partials.back();
  return make_op(std::move(out), {reflectors}, [partials = std::move(partials)](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    const Matrix& refl = in.value;
    Matrix g = self.grad;
    for (Index i = refl.rows() - 1; i >= 0; --i) {
      const Vector v = refl.row(i).transpose();
      const double s = v.squaredNorm();
      const Matrix& prev = partials[static_cast<std::size_t>(i)];
      // dL/dH = prev^T g; H = I - 2 v v^T / s
      const Vector gv = g * v;
      const Vector pv = prev * v;
      const Vector gh_v = prev.transpose() * gv;
      const Vector ght_v = g.transpose() * pv;
      const double vghv = pv.dot(gv);
      const Vector dv = (-2.0 / s) * (gh_v + ght_v) + (4.0 * vghv / (s * s)) * v;
      in.grad.row(i) += dv.transpose();
      // dL/dprev = g H^T = g H
      g -= (2.0 / s) * gv * v.transpose();
    }
  });
}

Var lstsq(const Var& a, const Var& b) {
  Matrix x = lstsq(a.value(), b.value());
  return make_op(std::move(x), {a, b}, [](Node& self) {
    const Matrix& av = self.inputs[0]->value;
    const Matrix& bv = self.inputs[1]->value;
    const Matrix& xv = self.value;
    // x = (A^T A)^{-1} A^T b; z = (A^T A)^{-1} dL/dx
    const Matrix gram = av.transpose() * av;
    const Matrix z = gram.ldlt().solve(self.grad);
    const Matrix az = av * z;
    accumulate(self, 1, az);
    const Matrix residual = bv - av * xv;
    accumulate(self, 0, residual * z.transpose() - az * xv.transpose());
  });
}

}  // namespace cinnrl::num
