#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acdne/checkpoint.hpp"
#include "acdne/graph.hpp"
#include "acdne/nn.hpp"

namespace acdne {

// Ablations of the full model. kNoPairwise, kNoClassifier and
// kNoDiscriminator drop one objective term; kNoFe1/kNoFe2 drop one
// feature extractor so the concatenation layer sees a single branch.
enum class Variant { kFull, kNoFe1, kNoFe2, kNoPairwise, kNoClassifier, kNoDiscriminator };

std::string_view to_string(Variant variant);
Variant parse_variant(std::string_view text);

struct TrainConfig {
  int steps = 3;  // K of the PPMI proximity
  std::vector<int> extractor_dims{512, 128};
  int embedding_dim = 128;
  std::vector<int> discriminator_dims{128, 128};
  double pairwise_weight = 0.1;
  double initial_lr = 0.02;
  double momentum = 0.9;
  double l2_weight = 1e-3;
  int batch_size = 100;  // half source, half target
  int epochs = 100;
  std::uint64_t seed = 0;
  // Multiplies the lambda ramp; 0 disables the reversed domain gradient.
  double lambda_max = 1.0;
  double multilabel_threshold = 0.5;
  LabelMode label_mode = LabelMode::kMulticlass;
  Variant variant = Variant::kFull;

  void validate() const;
};

// theta_e = {fe1, fe2, concat}, theta_y = {classifier}, theta_d = {discriminator}.
struct ModelParams {
  std::vector<nn::DenseLayer> fe1;  // empty under kNoFe1
  std::vector<nn::DenseLayer> fe2;  // empty under kNoFe2
  nn::DenseLayer concat;
  nn::DenseLayer classifier;
  std::vector<nn::DenseLayer> discriminator;
  LabelMode label_mode = LabelMode::kMulticlass;

  int attribute_dim() const;
  int embedding_dim() const { return concat.out_dim(); }
  int class_count() const { return classifier.out_dim(); }

  // Every layer in a fixed order: fe1, fe2, concat, classifier, discriminator.
  std::vector<nn::DenseLayer*> layers();
  std::vector<const nn::DenseLayer*> layers() const;
  std::vector<std::string> layer_names() const;
};

ModelParams init_params(int attribute_dim, int class_count, const TrainConfig& config,
                        std::mt19937_64& rng);

struct ModelGradients {
  std::vector<nn::LayerGrad> fe1;
  std::vector<nn::LayerGrad> fe2;
  nn::LayerGrad concat;
  nn::LayerGrad classifier;
  std::vector<nn::LayerGrad> discriminator;

  static ModelGradients zeros_like(const ModelParams& params);
  // Same order as ModelParams::layers().
  std::vector<const nn::LayerGrad*> all() const;
  std::vector<nn::LayerGrad*> all();
};

struct EmbedCache {
  nn::ForwardCache fe1;
  nn::ForwardCache fe2;
  nn::ForwardCache concat;
  int fe1_width = 0;
};

// E = ReLU([FE1(x), FE2(n)] W_c + b_c).
Matrix embed(const ModelParams& params, const Matrix& x, const Matrix& n,
             EmbedCache* cache = nullptr);

// Backpropagates d(loss)/dE into the theta_e entries of `grads`
// (fe1, fe2, concat), overwriting them.
void embed_backward(const ModelParams& params, const EmbedCache& cache, const Matrix& grad_e,
                    ModelGradients& grads);

struct LossValue {
  double value = 0;
  Matrix grad;  // d(value)/d(input)
};

struct PairwiseLoss {
  double value = 0;
  Matrix grad_source;
  Matrix grad_target;
};

// (1/m_s) sum_ij a_ij |e_i - e_j|^2 + (1/m_t) sum_ij a_ij |e_i - e_j|^2 over
// ordered pairs, m_* being the number of rows on each side. An empty side
// contributes zero.
PairwiseLoss loss_pairwise(const Matrix& e_source, const Matrix& a_source, const Matrix& e_target,
                           const Matrix& a_target);

// Batch-mean softmax (multiclass) or one-vs-rest sigmoid (multilabel)
// cross-entropy, evaluated from logits. grad is w.r.t. the logits.
LossValue loss_classification(const Matrix& logits, const Matrix& labels, LabelMode mode);

// Batch-mean binary cross-entropy of the 2-way softmax over `logits`
// (column 1 = probability of target). grad is w.r.t. the logits.
LossValue loss_domain(const Matrix& logits, std::span<const int> domain_labels);

// Same loss from probabilities of "target", clamped to [1e-12, 1 - 1e-12].
double loss_domain_from_probabilities(std::span<const double> target_probability,
                                      std::span<const int> domain_labels);

double domain_accuracy(const Matrix& logits, std::span<const int> domain_labels);

// 2 / (1 + exp(-10 p)) - 1
double schedule_lambda(double progress);
// mu0 / (1 + 10 p)^0.75
double schedule_lr(double initial_lr, double progress);

struct MiniBatch {
  std::vector<int> source_idx;
  std::vector<int> target_idx;
  Matrix xs, ns, xt, nt;
  Matrix ys;
  Matrix a_ss, a_tt;  // batch-local proximity blocks
  std::vector<int> domain_labels;  // 0 for source rows, then 1 for target rows
};

struct ObjectiveTerms {
  bool classification = true;
  bool pairwise = true;
  bool domain = true;
};

ObjectiveTerms terms_for(Variant variant);

struct BatchLosses {
  double classification = 0;
  double pairwise = 0;
  double domain = 0;
  double domain_accuracy = 0;
};

struct GradientResult {
  ModelGradients grads;
  BatchLosses losses;
};

// theta_y <- dL_y; theta_d <- dL_d (never scaled by lambda);
// theta_e <- dL_y + p dL_p - lambda dL_d, the last term produced by a
// gradient-reversal step on dL_d/dE. Disabled terms contribute nothing.
GradientResult compute_gradients(const ModelParams& params, const MiniBatch& batch,
                                 double pairwise_weight, double lambda,
                                 const ObjectiveTerms& terms = {});

// Forward-only evaluation of the three losses on a batch.
BatchLosses evaluate_losses(const ModelParams& params, const MiniBatch& batch);

// Per-row class probabilities / embeddings over a whole network, chunked.
Matrix embed_all(const ModelParams& params, const SparseMatrix& attributes,
                 const SparseMatrix& neighbors);
Matrix predict_probabilities(const ModelParams& params, const SparseMatrix& attributes,
                             const SparseMatrix& neighbors);

// Multiclass: one-hot argmax, ties to the lowest index. Multilabel: p >= threshold.
Matrix decide_labels(const Matrix& probabilities, LabelMode mode, double threshold = 0.5);

Matrix predict(const ModelParams& params, const SparseMatrix& attributes,
               const SparseMatrix& neighbors, double threshold = 0.5);

// Checkpoint round trip: config goes to meta records, tensors as
// <layer>.weight / <layer>.bias.
nn::Checkpoint to_checkpoint(const ModelParams& params, const TrainConfig& config,
                             const std::vector<std::string>& vocabulary);

struct LoadedModel {
  ModelParams params;
  TrainConfig config;
  std::vector<std::string> vocabulary;
};

LoadedModel from_checkpoint(const nn::Checkpoint& checkpoint);

// Flat key/value view of a config, used by checkpoints and run manifests.
std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& config);

}  // namespace acdne
