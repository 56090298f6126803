#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace acdne::nn {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

enum class Activation { kIdentity, kRelu, kSoftmax, kSigmoid };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view text);

// y = act(x W + b), x holding one sample per row.
struct DenseLayer {
  Matrix weight;  // in_dim x out_dim
  RowVector bias;  // out_dim
  Activation activation = Activation::kIdentity;

  int in_dim() const { return static_cast<int>(weight.rows()); }
  int out_dim() const { return static_cast<int>(weight.cols()); }
};

// Uniform(-r, r) weights with r = sqrt(6 / (in + out)); zero bias.
DenseLayer make_layer(int in_dim, int out_dim, Activation activation, std::mt19937_64& rng);

Matrix apply_activation(Activation activation, const Matrix& pre);
Matrix softmax_rows(const Matrix& logits);
Matrix sigmoid(const Matrix& logits);

struct LayerCache {
  Matrix input;
  Matrix pre;
  Matrix post;
};

struct ForwardCache {
  std::vector<LayerCache> layers;
};

struct LayerGrad {
  Matrix weight;
  RowVector bias;

  static LayerGrad zeros_like(const DenseLayer& layer);
  LayerGrad& operator+=(const LayerGrad& other);
  LayerGrad& operator*=(double scale);
};

// Runs the layers in order. `cache` may be null when no backward pass follows.
Matrix forward(std::span<const DenseLayer> layers, const Matrix& input, ForwardCache* cache);

// Backpropagates d(loss)/d(output) through the cached forward pass.
// `grads` is resized to one entry per layer and overwritten. Returns
// d(loss)/d(input). Throws ContractError when `cache` does not belong to
// `layers`.
Matrix backward(std::span<const DenseLayer> layers, const ForwardCache& cache,
                const Matrix& output_grad, std::vector<LayerGrad>& grads);

// SGD with classical momentum and L2 on weights (never on biases):
//   v <- momentum * v + (g + l2 * W);  W <- W - lr * v
class SgdMomentum {
 public:
  SgdMomentum(double learning_rate, double momentum, double l2_weight);

  void set_learning_rate(double learning_rate);
  double learning_rate() const { return learning_rate_; }
  double momentum() const { return momentum_; }
  double l2_weight() const { return l2_weight_; }

  // layers[i] is updated with grads[i]. The first call fixes the parameter
  // list; later calls must pass layers of identical shapes. Throws
  // NumericError, leaving every layer untouched, if a gradient is not finite.
  void step(std::span<DenseLayer* const> layers, std::span<const LayerGrad* const> grads);

  const std::vector<LayerGrad>& velocity() const { return velocity_; }

 private:
  double learning_rate_;
  double momentum_;
  double l2_weight_;
  std::vector<LayerGrad> velocity_;
};

}  // namespace acdne::nn
