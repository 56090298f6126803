#include "acdne/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "acdne/errors.hpp"

namespace acdne {

namespace {

using nn::Activation;
using nn::DenseLayer;
using nn::LayerGrad;

constexpr double kProbabilityFloor = 1e-12;
constexpr Eigen::Index kPredictChunk = 512;

// Copy of `layers` whose last activation is replaced by identity, so the
// forward pass ends at the logits.
std::vector<DenseLayer> logit_head(std::span<const DenseLayer> layers) {
  std::vector<DenseLayer> out(layers.begin(), layers.end());
  if (!out.empty()) out.back().activation = Activation::kIdentity;
  return out;
}

std::vector<DenseLayer> logit_head(const DenseLayer& layer) {
  return logit_head(std::span<const DenseLayer>(&layer, 1));
}

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  const double shift = row.maxCoeff();
  return shift + std::log((row.array() - shift).exp().sum());
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols() && top.rows() > 0 && bottom.rows() > 0) {
    throw ArgumentError("cannot stack matrices of different widths");
  }
  Matrix out(top.rows() + bottom.rows(), std::max(top.cols(), bottom.cols()));
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (field.empty()) continue;
    int v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      throw ParseError("checkpoint", 0, "bad integer list '" + text + "'");
    }
    out.push_back(v);
  }
  return out;
}

template <typename T>
T parse_meta_number(const nn::Checkpoint& ckpt, std::string_view key) {
  const auto text = ckpt.get_meta(key);
  if (!text) throw ValidationError("checkpoint lacks meta '" + std::string(key) + "'");
  T v{};
  auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
  if (ec != std::errc() || ptr != text->data() + text->size()) {
    throw ValidationError("checkpoint meta '" + std::string(key) + "' is not a number");
  }
  return v;
}

void check_finite(double value, std::string_view what, const MiniBatch& batch) {
  if (std::isfinite(value)) return;
  std::ostringstream msg;
  msg << what << " is not finite (batch source nodes:";
  for (std::size_t i = 0; i < std::min<std::size_t>(batch.source_idx.size(), 8); ++i) {
    msg << ' ' << batch.source_idx[i];
  }
  msg << " ...; target nodes:";
  for (std::size_t i = 0; i < std::min<std::size_t>(batch.target_idx.size(), 8); ++i) {
    msg << ' ' << batch.target_idx[i];
  }
  msg << " ...)";
  throw NumericError(msg.str());
}

}  // namespace

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::kFull: return "full";
    case Variant::kNoFe1: return "no-fe1";
    case Variant::kNoFe2: return "no-fe2";
    case Variant::kNoPairwise: return "no-pairwise";
    case Variant::kNoClassifier: return "no-classifier";
    case Variant::kNoDiscriminator: return "no-discriminator";
  }
  return "full";
}

Variant parse_variant(std::string_view text) {
  for (auto v : {Variant::kFull, Variant::kNoFe1, Variant::kNoFe2, Variant::kNoPairwise,
                 Variant::kNoClassifier, Variant::kNoDiscriminator}) {
    if (to_string(v) == text) return v;
  }
  throw ArgumentError("unknown model variant '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ArgumentError(msg); };
  if (steps < 1) fail("steps (K) must be >= 1");
  if (extractor_dims.empty()) fail("at least one feature-extractor layer is required");
  for (int d : extractor_dims) {
    if (d < 1) fail("feature-extractor dims must be >= 1");
  }
  if (embedding_dim < 1) fail("embedding dim must be >= 1");
  for (int d : discriminator_dims) {
    if (d < 1) fail("discriminator dims must be >= 1");
  }
  if (!(pairwise_weight >= 0)) fail("pairwise weight must be >= 0");
  if (!(initial_lr > 0)) fail("initial learning rate must be > 0");
  if (!(momentum >= 0 && momentum < 1)) fail("momentum must be in [0, 1)");
  if (!(l2_weight >= 0)) fail("L2 weight must be >= 0");
  if (batch_size < 2 || batch_size % 2 != 0) fail("batch size must be even and >= 2");
  if (epochs < 0) fail("epochs must be >= 0");
  if (!(lambda_max >= 0)) fail("lambda max must be >= 0");
  if (!(multilabel_threshold > 0 && multilabel_threshold < 1)) {
    fail("multilabel threshold must be in (0, 1)");
  }
}

int ModelParams::attribute_dim() const {
  if (!fe1.empty()) return fe1.front().in_dim();
  if (!fe2.empty()) return fe2.front().in_dim();
  return 0;
}

std::vector<DenseLayer*> ModelParams::layers() {
  std::vector<DenseLayer*> out;
  for (auto& l : fe1) out.push_back(&l);
  for (auto& l : fe2) out.push_back(&l);
  out.push_back(&concat);
  out.push_back(&classifier);
  for (auto& l : discriminator) out.push_back(&l);
  return out;
}

std::vector<const DenseLayer*> ModelParams::layers() const {
  auto mut = const_cast<ModelParams*>(this)->layers();
  return {mut.begin(), mut.end()};
}

std::vector<std::string> ModelParams::layer_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < fe1.size(); ++i) out.push_back("fe1." + std::to_string(i));
  for (std::size_t i = 0; i < fe2.size(); ++i) out.push_back("fe2." + std::to_string(i));
  out.emplace_back("concat");
  out.emplace_back("classifier");
  for (std::size_t i = 0; i < discriminator.size(); ++i) {
    out.push_back("discriminator." + std::to_string(i));
  }
  return out;
}

ModelParams init_params(int attribute_dim, int class_count, const TrainConfig& config,
                        std::mt19937_64& rng) {
  config.validate();
  if (attribute_dim < 1) throw ArgumentError("attribute dim must be >= 1");
  if (class_count < 1) throw ArgumentError("class count must be >= 1");
  ModelParams p;
  p.label_mode = config.label_mode;
  auto extractor = [&](std::vector<DenseLayer>& layers) {
    int in = attribute_dim;
    for (int out : config.extractor_dims) {
      layers.push_back(nn::make_layer(in, out, Activation::kRelu, rng));
      in = out;
    }
  };
  if (config.variant != Variant::kNoFe1) extractor(p.fe1);
  if (config.variant != Variant::kNoFe2) extractor(p.fe2);
  const int branches = (p.fe1.empty() ? 0 : 1) + (p.fe2.empty() ? 0 : 1);
  p.concat = nn::make_layer(branches * config.extractor_dims.back(), config.embedding_dim,
                            Activation::kRelu, rng);
  p.classifier = nn::make_layer(
      config.embedding_dim, class_count,
      config.label_mode == LabelMode::kMulticlass ? Activation::kSoftmax : Activation::kSigmoid,
      rng);
  int in = config.embedding_dim;
  for (int out : config.discriminator_dims) {
    p.discriminator.push_back(nn::make_layer(in, out, Activation::kRelu, rng));
    in = out;
  }
  p.discriminator.push_back(nn::make_layer(in, 2, Activation::kSoftmax, rng));
  return p;
}

ModelGradients ModelGradients::zeros_like(const ModelParams& params) {
  ModelGradients g;
  for (const auto& l : params.fe1) g.fe1.push_back(LayerGrad::zeros_like(l));
  for (const auto& l : params.fe2) g.fe2.push_back(LayerGrad::zeros_like(l));
  g.concat = LayerGrad::zeros_like(params.concat);
  g.classifier = LayerGrad::zeros_like(params.classifier);
  for (const auto& l : params.discriminator) g.discriminator.push_back(LayerGrad::zeros_like(l));
  return g;
}

std::vector<LayerGrad*> ModelGradients::all() {
  std::vector<LayerGrad*> out;
  for (auto& g : fe1) out.push_back(&g);
  for (auto& g : fe2) out.push_back(&g);
  out.push_back(&concat);
  out.push_back(&classifier);
  for (auto& g : discriminator) out.push_back(&g);
  return out;
}

std::vector<const LayerGrad*> ModelGradients::all() const {
  auto mut = const_cast<ModelGradients*>(this)->all();
  return {mut.begin(), mut.end()};
}

Matrix embed(const ModelParams& params, const Matrix& x, const Matrix& n, EmbedCache* cache) {
  if (x.rows() != n.rows()) {
    throw ArgumentError("attribute and neighbour inputs have different row counts");
  }
  const int w = params.attribute_dim();
  if (x.cols() != w || n.cols() != w) {
    throw ArgumentError("model expects " + std::to_string(w) + " attribute columns, got " +
                        std::to_string(x.cols()) + "/" + std::to_string(n.cols()));
  }
  Matrix h1;
  Matrix h2;
  if (!params.fe1.empty()) h1 = nn::forward(params.fe1, x, cache ? &cache->fe1 : nullptr);
  if (!params.fe2.empty()) h2 = nn::forward(params.fe2, n, cache ? &cache->fe2 : nullptr);
  Matrix joined(x.rows(), h1.cols() + h2.cols());
  joined.leftCols(h1.cols()) = h1;
  joined.rightCols(h2.cols()) = h2;
  if (cache) cache->fe1_width = static_cast<int>(h1.cols());
  return nn::forward(std::span<const DenseLayer>(&params.concat, 1), joined,
                     cache ? &cache->concat : nullptr);
}

void embed_backward(const ModelParams& params, const EmbedCache& cache, const Matrix& grad_e,
                    ModelGradients& grads) {
  std::vector<LayerGrad> concat_grad;
  const Matrix g_joined = nn::backward(std::span<const DenseLayer>(&params.concat, 1),
                                       cache.concat, grad_e, concat_grad);
  grads.concat = std::move(concat_grad.front());
  if (!params.fe1.empty()) {
    nn::backward(params.fe1, cache.fe1, g_joined.leftCols(cache.fe1_width), grads.fe1);
  }
  if (!params.fe2.empty()) {
    nn::backward(params.fe2, cache.fe2, g_joined.rightCols(g_joined.cols() - cache.fe1_width),
                 grads.fe2);
  }
}

PairwiseLoss loss_pairwise(const Matrix& e_source, const Matrix& a_source, const Matrix& e_target,
                           const Matrix& a_target) {
  PairwiseLoss out;
  auto side = [](const Matrix& e, const Matrix& a, Matrix& grad) -> double {
    const Eigen::Index m = e.rows();
    if (a.rows() != m || a.cols() != m) {
      throw ArgumentError("proximity block must be " + std::to_string(m) + "x" +
                          std::to_string(m));
    }
    if ((a.array() < 0).any()) throw ValidationError("proximity entries must be nonnegative");
    grad = Matrix::Zero(m, e.cols());
    if (m == 0) return 0.0;
    double sum = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        if (i == j || a(i, j) == 0.0) continue;
        sum += a(i, j) * (e.row(i) - e.row(j)).squaredNorm();
      }
    }
    // d/de_i of sum_ij a_ij |e_i - e_j|^2 = 2 ((S 1)_i e_i - (S E)_i), S = A + A^T.
    Matrix s = a + a.transpose();
    s.diagonal().setZero();
    const Eigen::VectorXd degree = s.rowwise().sum();
    grad = (2.0 / m) * (degree.asDiagonal() * e - s * e);
    return sum / m;
  };
  out.value = side(e_source, a_source, out.grad_source) + side(e_target, a_target, out.grad_target);
  return out;
}

LossValue loss_classification(const Matrix& logits, const Matrix& labels, LabelMode mode) {
  if (logits.rows() != labels.rows() || logits.cols() != labels.cols()) {
    throw ValidationError("logits are " + std::to_string(logits.rows()) + "x" +
                          std::to_string(logits.cols()) + " but labels are " +
                          std::to_string(labels.rows()) + "x" + std::to_string(labels.cols()));
  }
  const Eigen::Index m = logits.rows();
  LossValue out;
  out.grad = Matrix::Zero(logits.rows(), logits.cols());
  if (m == 0) return out;
  double total = 0;
  if (mode == LabelMode::kMulticlass) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double mass = labels.row(i).sum();
      if (mass != 1.0) {
        throw ValidationError("multiclass label row " + std::to_string(i) + " is not one-hot");
      }
      const double lse = log_sum_exp(logits.row(i));
      total += lse - labels.row(i).dot(logits.row(i));
      out.grad.row(i) = (logits.row(i).array() - lse).exp().matrix() - labels.row(i);
    }
  } else {
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index k = 0; k < logits.cols(); ++k) {
        const double z = logits(i, k);
        const double y = labels(i, k);
        total += softplus(z) - y * z;
        const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        out.grad(i, k) = p - y;
      }
    }
  }
  out.value = total / m;
  out.grad /= static_cast<double>(m);
  return out;
}

LossValue loss_domain(const Matrix& logits, std::span<const int> domain_labels) {
  if (logits.cols() != 2) throw ArgumentError("domain logits must have two columns");
  if (static_cast<std::size_t>(logits.rows()) != domain_labels.size()) {
    throw ArgumentError("domain label count does not match logits");
  }
  LossValue out;
  out.grad = Matrix::Zero(logits.rows(), 2);
  const Eigen::Index m = logits.rows();
  if (m == 0) return out;
  double total = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const int d = domain_labels[i];
    if (d != 0 && d != 1) throw ArgumentError("domain labels must be 0 or 1");
    const double lse = log_sum_exp(logits.row(i));
    total += lse - logits(i, d);
    out.grad.row(i) = (logits.row(i).array() - lse).exp().matrix();
    out.grad(i, d) -= 1.0;
  }
  out.value = total / m;
  out.grad /= static_cast<double>(m);
  return out;
}

double loss_domain_from_probabilities(std::span<const double> target_probability,
                                      std::span<const int> domain_labels) {
  if (target_probability.size() != domain_labels.size()) {
    throw ArgumentError("domain label count does not match probabilities");
  }
  if (target_probability.empty()) return 0.0;
  double total = 0;
  for (std::size_t i = 0; i < target_probability.size(); ++i) {
    const double p = std::clamp(target_probability[i], kProbabilityFloor, 1.0 - kProbabilityFloor);
    const int d = domain_labels[i];
    if (d != 0 && d != 1) throw ArgumentError("domain labels must be 0 or 1");
    total -= (1 - d) * std::log(1 - p) + d * std::log(p);
  }
  return total / static_cast<double>(target_probability.size());
}

double domain_accuracy(const Matrix& logits, std::span<const int> domain_labels) {
  if (logits.rows() == 0) return 0.0;
  int correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int predicted = logits(i, 1) > logits(i, 0) ? 1 : 0;
    correct += predicted == domain_labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

double schedule_lambda(double progress) {
  if (!(progress >= 0 && progress <= 1)) throw ArgumentError("progress must lie in [0, 1]");
  return 2.0 / (1.0 + std::exp(-10.0 * progress)) - 1.0;
}

double schedule_lr(double initial_lr, double progress) {
  if (!(initial_lr > 0)) throw ArgumentError("initial learning rate must be > 0");
  if (!(progress >= 0 && progress <= 1)) throw ArgumentError("progress must lie in [0, 1]");
  return initial_lr / std::pow(1.0 + 10.0 * progress, 0.75);
}

ObjectiveTerms terms_for(Variant variant) {
  ObjectiveTerms t;
  t.pairwise = variant != Variant::kNoPairwise;
  t.classification = variant != Variant::kNoClassifier;
  t.domain = variant != Variant::kNoDiscriminator;
  return t;
}

GradientResult compute_gradients(const ModelParams& params, const MiniBatch& batch,
                                 double pairwise_weight, double lambda,
                                 const ObjectiveTerms& terms) {
  if (!(lambda >= 0)) throw ArgumentError("lambda must be >= 0");
  if (!(pairwise_weight >= 0)) throw ArgumentError("pairwise weight must be >= 0");
  const Eigen::Index ms = batch.xs.rows();
  const Eigen::Index mt = batch.xt.rows();

  EmbedCache cache;
  const Matrix e = embed(params, stack_rows(batch.xs, batch.xt), stack_rows(batch.ns, batch.nt),
                         &cache);
  const Matrix e_source = e.topRows(ms);
  const Matrix e_target = e.bottomRows(mt);

  GradientResult result;
  result.grads = ModelGradients::zeros_like(params);
  Matrix grad_e = Matrix::Zero(e.rows(), e.cols());

  // Node classifier on the source half.
  const auto classifier = logit_head(params.classifier);
  nn::ForwardCache classifier_cache;
  const Matrix class_logits = nn::forward(classifier, e_source, &classifier_cache);
  const LossValue ly = loss_classification(class_logits, batch.ys, params.label_mode);
  result.losses.classification = ly.value;
  check_finite(ly.value, "classification loss", batch);
  if (terms.classification) {
    std::vector<LayerGrad> g;
    grad_e.topRows(ms) += nn::backward(classifier, classifier_cache, ly.grad, g);
    result.grads.classifier = std::move(g.front());
  }

  const PairwiseLoss lp = loss_pairwise(e_source, batch.a_ss, e_target, batch.a_tt);
  result.losses.pairwise = lp.value;
  check_finite(lp.value, "pairwise loss", batch);
  if (terms.pairwise && pairwise_weight > 0) {
    grad_e.topRows(ms) += pairwise_weight * lp.grad_source;
    grad_e.bottomRows(mt) += pairwise_weight * lp.grad_target;
  }

  const auto discriminator = logit_head(params.discriminator);
  nn::ForwardCache disc_cache;
  const Matrix domain_logits = nn::forward(discriminator, e, &disc_cache);
  const LossValue ld = loss_domain(domain_logits, batch.domain_labels);
  result.losses.domain = ld.value;
  result.losses.domain_accuracy = domain_accuracy(domain_logits, batch.domain_labels);
  check_finite(ld.value, "domain loss", batch);
  if (terms.domain) {
    const Matrix grad_e_domain =
        nn::backward(discriminator, disc_cache, ld.grad, result.grads.discriminator);
    // Gradient reversal: identity forward, -lambda backward.
    grad_e += -lambda * grad_e_domain;
  }

  embed_backward(params, cache, grad_e, result.grads);
  return result;
}

BatchLosses evaluate_losses(const ModelParams& params, const MiniBatch& batch) {
  const Eigen::Index ms = batch.xs.rows();
  const Eigen::Index mt = batch.xt.rows();
  const Matrix e = embed(params, stack_rows(batch.xs, batch.xt), stack_rows(batch.ns, batch.nt));
  BatchLosses out;
  const Matrix class_logits = nn::forward(logit_head(params.classifier), e.topRows(ms), nullptr);
  out.classification = loss_classification(class_logits, batch.ys, params.label_mode).value;
  out.pairwise = loss_pairwise(e.topRows(ms), batch.a_ss, e.bottomRows(mt), batch.a_tt).value;
  const Matrix domain_logits = nn::forward(logit_head(params.discriminator), e, nullptr);
  out.domain = loss_domain(domain_logits, batch.domain_labels).value;
  out.domain_accuracy = domain_accuracy(domain_logits, batch.domain_labels);
  return out;
}

Matrix embed_all(const ModelParams& params, const SparseMatrix& attributes,
                 const SparseMatrix& neighbors) {
  if (attributes.rows() != neighbors.rows()) {
    throw ArgumentError("attribute and neighbour matrices have different row counts");
  }
  if (attributes.cols() != params.attribute_dim() || neighbors.cols() != params.attribute_dim()) {
    throw ArgumentError("network has " + std::to_string(attributes.cols()) +
                        " attribute columns, model expects " +
                        std::to_string(params.attribute_dim()));
  }
  const Eigen::Index n = attributes.rows();
  Matrix out(n, params.embedding_dim());
  for (Eigen::Index start = 0; start < n; start += kPredictChunk) {
    const Eigen::Index len = std::min(kPredictChunk, n - start);
    const Matrix x = Matrix(attributes.middleRows(start, len));
    const Matrix nb = Matrix(neighbors.middleRows(start, len));
    out.middleRows(start, len) = embed(params, x, nb);
  }
  return out;
}

Matrix predict_probabilities(const ModelParams& params, const SparseMatrix& attributes,
                             const SparseMatrix& neighbors) {
  const Matrix e = embed_all(params, attributes, neighbors);
  return nn::forward(std::span<const DenseLayer>(&params.classifier, 1), e, nullptr);
}

Matrix decide_labels(const Matrix& probabilities, LabelMode mode, double threshold) {
  Matrix out = Matrix::Zero(probabilities.rows(), probabilities.cols());
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    if (mode == LabelMode::kMulticlass) {
      if (probabilities.cols() == 0) continue;
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < probabilities.cols(); ++k) {
        if (probabilities(i, k) > probabilities(i, best)) best = k;
      }
      out(i, best) = 1.0;
    } else {
      for (Eigen::Index k = 0; k < probabilities.cols(); ++k) {
        out(i, k) = probabilities(i, k) >= threshold ? 1.0 : 0.0;
      }
    }
  }
  return out;
}

Matrix predict(const ModelParams& params, const SparseMatrix& attributes,
               const SparseMatrix& neighbors, double threshold) {
  return decide_labels(predict_probabilities(params, attributes, neighbors), params.label_mode,
                       threshold);
}

std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& c) {
  return {
      {"steps", std::to_string(c.steps)},
      {"extractor_dims", join_ints(c.extractor_dims)},
      {"embedding_dim", std::to_string(c.embedding_dim)},
      {"discriminator_dims", join_ints(c.discriminator_dims)},
      {"pairwise_weight", nn::format_double(c.pairwise_weight)},
      {"initial_lr", nn::format_double(c.initial_lr)},
      {"momentum", nn::format_double(c.momentum)},
      {"l2_weight", nn::format_double(c.l2_weight)},
      {"batch_size", std::to_string(c.batch_size)},
      {"epochs", std::to_string(c.epochs)},
      {"seed", std::to_string(c.seed)},
      {"lambda_max", nn::format_double(c.lambda_max)},
      {"multilabel_threshold", nn::format_double(c.multilabel_threshold)},
      {"label_mode", std::string(to_string(c.label_mode))},
      {"variant", std::string(to_string(c.variant))},
  };
}

nn::Checkpoint to_checkpoint(const ModelParams& params, const TrainConfig& config,
                             const std::vector<std::string>& vocabulary) {
  nn::Checkpoint ckpt;
  for (auto& [k, v] : config_entries(config)) ckpt.set_meta(k, v);
  ckpt.set_meta("attribute_dim", std::to_string(params.attribute_dim()));
  ckpt.set_meta("class_count", std::to_string(params.class_count()));
  ckpt.vocabulary = vocabulary;
  const auto names = params.layer_names();
  const auto layers = params.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    ckpt.tensors.push_back({names[i] + ".weight", layers[i]->weight});
    ckpt.tensors.push_back({names[i] + ".bias", layers[i]->bias});
  }
  return ckpt;
}

LoadedModel from_checkpoint(const nn::Checkpoint& ckpt) {
  LoadedModel out;
  auto& c = out.config;
  auto text = [&](std::string_view key) {
    auto v = ckpt.get_meta(key);
    if (!v) throw ValidationError("checkpoint lacks meta '" + std::string(key) + "'");
    return *v;
  };
  c.steps = parse_meta_number<int>(ckpt, "steps");
  c.extractor_dims = parse_ints(text("extractor_dims"));
  c.embedding_dim = parse_meta_number<int>(ckpt, "embedding_dim");
  c.discriminator_dims = parse_ints(text("discriminator_dims"));
  c.pairwise_weight = parse_meta_number<double>(ckpt, "pairwise_weight");
  c.initial_lr = parse_meta_number<double>(ckpt, "initial_lr");
  c.momentum = parse_meta_number<double>(ckpt, "momentum");
  c.l2_weight = parse_meta_number<double>(ckpt, "l2_weight");
  c.batch_size = parse_meta_number<int>(ckpt, "batch_size");
  c.epochs = parse_meta_number<int>(ckpt, "epochs");
  c.seed = parse_meta_number<std::uint64_t>(ckpt, "seed");
  c.lambda_max = parse_meta_number<double>(ckpt, "lambda_max");
  c.multilabel_threshold = parse_meta_number<double>(ckpt, "multilabel_threshold");
  c.label_mode = parse_label_mode(text("label_mode"));
  c.variant = parse_variant(text("variant"));
  c.validate();

  // Build the architecture, then overwrite every tensor from the file.
  std::mt19937_64 rng(0);
  out.params = init_params(parse_meta_number<int>(ckpt, "attribute_dim"),
                           parse_meta_number<int>(ckpt, "class_count"), c, rng);
  const auto names = out.params.layer_names();
  auto layers = out.params.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto* w = ckpt.find(names[i] + ".weight");
    const auto* b = ckpt.find(names[i] + ".bias");
    if (!w || !b) throw ValidationError("checkpoint lacks tensors for layer " + names[i]);
    if (w->values.rows() != layers[i]->weight.rows() ||
        w->values.cols() != layers[i]->weight.cols() || b->values.rows() != 1 ||
        b->values.cols() != layers[i]->bias.size()) {
      throw ValidationError("checkpoint tensor shape mismatch for layer " + names[i]);
    }
    layers[i]->weight = w->values;
    layers[i]->bias = b->values.row(0);
  }
  if (ckpt.tensors.size() != 2 * layers.size()) {
    throw ValidationError("checkpoint has unexpected extra tensors");
  }
  out.vocabulary = ckpt.vocabulary;
  return out;
}

}  // namespace acdne
