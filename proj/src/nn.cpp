#include "acdne/nn.hpp"

#include <cmath>
#include <string>

#include "acdne/errors.hpp"

namespace acdne::nn {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kSoftmax: return "softmax";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "identity";
}

Activation parse_activation(std::string_view text) {
  for (auto a : {Activation::kIdentity, Activation::kRelu, Activation::kSoftmax,
                 Activation::kSigmoid}) {
    if (to_string(a) == text) return a;
  }
  throw ArgumentError("unknown activation '" + std::string(text) + "'");
}

DenseLayer make_layer(int in_dim, int out_dim, Activation activation, std::mt19937_64& rng) {
  if (in_dim < 1 || out_dim < 1) throw ArgumentError("layer dimensions must be >= 1");
  const double range = std::sqrt(6.0 / (in_dim + out_dim));
  std::uniform_real_distribution<double> dist(-range, range);
  DenseLayer layer;
  layer.weight.resize(in_dim, out_dim);
  // Row-major fill so the draw order matches the checkpoint layout.
  for (int r = 0; r < in_dim; ++r) {
    for (int c = 0; c < out_dim; ++c) layer.weight(r, c) = dist(rng);
  }
  layer.bias = RowVector::Zero(out_dim);
  layer.activation = activation;
  return layer;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double shift = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - shift).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Matrix sigmoid(const Matrix& logits) {
  return logits.unaryExpr([](double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  });
}

Matrix apply_activation(Activation activation, const Matrix& pre) {
  switch (activation) {
    case Activation::kIdentity: return pre;
    case Activation::kRelu: return pre.cwiseMax(0.0);
    case Activation::kSoftmax: return softmax_rows(pre);
    case Activation::kSigmoid: return sigmoid(pre);
  }
  return pre;
}

LayerGrad LayerGrad::zeros_like(const DenseLayer& layer) {
  return {Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
          RowVector::Zero(layer.bias.size())};
}

LayerGrad& LayerGrad::operator+=(const LayerGrad& other) {
  weight += other.weight;
  bias += other.bias;
  return *this;
}

LayerGrad& LayerGrad::operator*=(double scale) {
  weight *= scale;
  bias *= scale;
  return *this;
}

Matrix forward(std::span<const DenseLayer> layers, const Matrix& input, ForwardCache* cache) {
  if (cache) cache->layers.clear();
  Matrix h = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    if (h.cols() != layer.in_dim()) {
      throw ArgumentError("layer " + std::to_string(i) + " expects " +
                          std::to_string(layer.in_dim()) + " input columns, got " +
                          std::to_string(h.cols()));
    }
    Matrix pre = h * layer.weight;
    pre.rowwise() += layer.bias;
    Matrix post = apply_activation(layer.activation, pre);
    if (cache) cache->layers.push_back({std::move(h), std::move(pre), post});
    h = std::move(post);
  }
  return h;
}

Matrix backward(std::span<const DenseLayer> layers, const ForwardCache& cache,
                const Matrix& output_grad, std::vector<LayerGrad>& grads) {
  if (cache.layers.size() != layers.size()) {
    throw ContractError("forward cache has " + std::to_string(cache.layers.size()) +
                        " layers, network has " + std::to_string(layers.size()));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& c = cache.layers[i];
    if (c.input.cols() != layers[i].in_dim() || c.pre.cols() != layers[i].out_dim() ||
        c.post.cols() != layers[i].out_dim() || c.pre.rows() != c.input.rows()) {
      throw ContractError("forward cache does not match layer " + std::to_string(i));
    }
  }
  if (layers.empty()) return output_grad;
  const auto& last = cache.layers.back().post;
  if (output_grad.rows() != last.rows() || output_grad.cols() != last.cols()) {
    throw ContractError("output gradient shape does not match the cached forward pass");
  }

  grads.resize(layers.size());
  Matrix g = output_grad;
  for (std::size_t step = layers.size(); step-- > 0;) {
    const auto& layer = layers[step];
    const auto& c = cache.layers[step];
    Matrix g_pre;
    switch (layer.activation) {
      case Activation::kIdentity:
        g_pre = std::move(g);
        break;
      case Activation::kRelu:
        g_pre = (c.pre.array() > 0.0).select(g, 0.0);
        break;
      case Activation::kSigmoid:
        g_pre = g.array() * c.post.array() * (1.0 - c.post.array());
        break;
      case Activation::kSoftmax: {
        const Eigen::VectorXd dot = (g.array() * c.post.array()).rowwise().sum();
        g_pre = c.post.array() * (g.colwise() - dot).array();
        break;
      }
    }
    grads[step].weight = c.input.transpose() * g_pre;
    grads[step].bias = g_pre.colwise().sum();
    g = g_pre * layer.weight.transpose();
  }
  return g;
}

SgdMomentum::SgdMomentum(double learning_rate, double momentum, double l2_weight)
    : learning_rate_(learning_rate), momentum_(momentum), l2_weight_(l2_weight) {
  if (!(learning_rate > 0)) throw ArgumentError("learning rate must be > 0");
  if (!(momentum >= 0 && momentum < 1)) throw ArgumentError("momentum must be in [0, 1)");
  if (!(l2_weight >= 0)) throw ArgumentError("L2 weight must be >= 0");
}

void SgdMomentum::set_learning_rate(double learning_rate) {
  if (!(learning_rate > 0)) throw ArgumentError("learning rate must be > 0");
  learning_rate_ = learning_rate;
}

void SgdMomentum::step(std::span<DenseLayer* const> layers,
                       std::span<const LayerGrad* const> grads) {
  if (layers.size() != grads.size()) {
    throw ArgumentError("optimizer got " + std::to_string(layers.size()) + " layers and " +
                        std::to_string(grads.size()) + " gradients");
  }
  if (velocity_.empty()) {
    for (const auto* layer : layers) velocity_.push_back(LayerGrad::zeros_like(*layer));
  }
  if (velocity_.size() != layers.size()) {
    throw ArgumentError("optimizer parameter list changed between steps");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = *layers[i];
    const auto& grad = *grads[i];
    if (grad.weight.rows() != layer.weight.rows() || grad.weight.cols() != layer.weight.cols() ||
        grad.bias.size() != layer.bias.size() ||
        velocity_[i].weight.rows() != layer.weight.rows() ||
        velocity_[i].weight.cols() != layer.weight.cols()) {
      throw ArgumentError("gradient shape mismatch for parameter " + std::to_string(i));
    }
    if (!grad.weight.allFinite() || !grad.bias.allFinite()) {
      throw NumericError("non-finite gradient for parameter " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& layer = *layers[i];
    auto& v = velocity_[i];
    v.weight = momentum_ * v.weight + grads[i]->weight + l2_weight_ * layer.weight;
    v.bias = momentum_ * v.bias + grads[i]->bias;
    layer.weight -= learning_rate_ * v.weight;
    layer.bias -= learning_rate_ * v.bias;
  }
}

}  // namespace acdne::nn
