#pragma once

#include "cinnrl/numkit/random.hpp"
#include "cinnrl/numkit/var.hpp"

#include <vector>

namespace cinnrl::num {

inline constexpr double kDefaultNegativeSlope = 0.01;

/// Affine layer y = x W + b with W (in x out) and b (1 x out).
struct Linear {
  Parameter weight;
  Parameter bias;

  Index in_dim() const { return weight.value.rows(); }
  Index out_dim() const { return weight.value.cols(); }
};

/// Fully connected network: affine layers interleaved with leaky ReLU, no
/// activation after the last layer.
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialized network with the given layer widths (at least two).
  explicit Mlp(const std::vector<Index>& widths, double negative_slope = kDefaultNegativeSlope);

  /// Uniform(+-1/sqrt(fan_in)) initialization. The last layer is further
  /// multiplied by `last_layer_gain`.
  static Mlp random(const std::vector<Index>& widths, Rng& rng,
                    double negative_slope = kDefaultNegativeSlope, double last_layer_gain = 1.0);

  Var forward(const Var& x, bool trainable = true) const;
  /// Plain evaluation, no graph.
  Matrix operator()(const Matrix& x) const;

  Index in_dim() const;
  Index out_dim() const;
  double negative_slope() const { return negative_slope_; }

  std::vector<Linear>& layers() { return layers_; }
  const std::vector<Linear>& layers() const { return layers_; }
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  void check_input(Index width) const;

  std::vector<Linear> layers_;
  double negative_slope_ = kDefaultNegativeSlope;
};

/// target <- (1 - tau) target + tau source, parameter by parameter.
void polyak_update(Mlp& target, const Mlp& source, double tau);

}  // namespace cinnrl::num
