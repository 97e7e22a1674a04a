#include "cinnrl/numkit/mlp.hpp"

#include "cinnrl/error.hpp"

#include <cmath>

namespace cinnrl::num {

Mlp::Mlp(const std::vector<Index>& widths, double negative_slope)
    : negative_slope_(negative_slope) {
  if (widths.size() < 2) throw ShapeError("Mlp: need at least an input and an output width");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers_.push_back(Linear{Parameter(Matrix::Zero(widths[i], widths[i + 1])),
                             Parameter(Matrix::Zero(1, widths[i + 1]))});
  }
}

Mlp Mlp::random(const std::vector<Index>& widths, Rng& rng, double negative_slope,
                double last_layer_gain) {
  Mlp net(widths, negative_slope);
  for (std::size_t i = 0; i < net.layers_.size(); ++i) {
    Linear& layer = net.layers_[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_dim()));
    const double gain = (i + 1 == net.layers_.size()) ? last_layer_gain : 1.0;
    layer.weight.value = gain * uniform_matrix(layer.in_dim(), layer.out_dim(), rng, -bound, bound);
    layer.bias.value = gain * uniform_matrix(1, layer.out_dim(), rng, -bound, bound);
  }
  return net;
}

void Mlp::check_input(Index width) const {
  if (layers_.empty()) throw ShapeError("Mlp: network has no layers");
  if (width != layers_.front().in_dim()) {
    throw ShapeError("Mlp layer 0: expected input width " +
                     std::to_string(layers_.front().in_dim()) + ", got " + std::to_string(width));
  }
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (layers_[i].in_dim() != layers_[i - 1].out_dim()) {
      throw ShapeError("Mlp layer " + std::to_string(i) + ": expected input width " +
                       std::to_string(layers_[i].in_dim()) + ", previous layer emits " +
                       std::to_string(layers_[i - 1].out_dim()));
    }
  }
}

Var Mlp::forward(const Var& x, bool trainable) const {
  check_input(x.cols());
  Var h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Linear& layer = layers_[i];
    h = add_rowwise(matmul(h, bind(layer.weight, trainable)), bind(layer.bias, trainable));
    if (i + 1 < layers_.size()) h = leaky_relu(h, negative_slope_);
  }
  return h;
}

Matrix Mlp::operator()(const Matrix& x) const {
  check_input(x.cols());
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Linear& layer = layers_[i];
    Matrix next = h * layer.weight.value;
    next.rowwise() += layer.bias.value.row(0);
    if (i + 1 < layers_.size()) {
      const double slope = negative_slope_;
      next = next.unaryExpr([slope](double v) { return v >= 0.0 ? v : slope * v; });
    }
    h = std::move(next);
  }
  return h;
}

Index Mlp::in_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
Index Mlp::out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (Linear& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Parameter*> Mlp::parameters() const {
  std::vector<const Parameter*> out;
  for (const Linear& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

void polyak_update(Mlp& target, const Mlp& source, double tau) {
  auto dst = target.parameters();
  auto src = source.parameters();
  if (dst.size() != src.size()) throw ShapeError("polyak_update: networks differ in depth");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i]->value = (1.0 - tau) * dst[i]->value + tau * src[i]->value;
  }
}

}  // namespace cinnrl::num
