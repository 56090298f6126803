#include "acdne/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "acdne/errors.hpp"
#include "oracles.hpp"

namespace acdne {
namespace {

using testing::GradCheck;
using testing::signed_objective;
using testing::toy_batch;

TrainConfig toy_config(Variant variant = Variant::kFull) {
  TrainConfig cfg;
  cfg.extractor_dims = {4, 3};
  cfg.embedding_dim = 3;
  cfg.discriminator_dims = {3};
  cfg.variant = variant;
  return cfg;
}

// Small random biases keep ReLUs away from their kink at zero input.
ModelParams toy_params(int width, int classes, const TrainConfig& cfg, std::mt19937_64& rng,
                       LabelMode mode = LabelMode::kMulticlass) {
  TrainConfig c = cfg;
  c.label_mode = mode;
  ModelParams p = init_params(width, classes, c, rng);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto* layer : p.layers()) {
    for (Eigen::Index i = 0; i < layer->bias.size(); ++i) layer->bias(i) = u(rng);
  }
  return p;
}

void expect_same(const nn::LayerGrad& a, const nn::LayerGrad& b, double tol) {
  ASSERT_EQ(a.weight.rows(), b.weight.rows());
  ASSERT_EQ(a.weight.cols(), b.weight.cols());
  EXPECT_LE((a.weight - b.weight).cwiseAbs().maxCoeff(), tol);
  EXPECT_LE((a.bias - b.bias).cwiseAbs().maxCoeff(), tol);
}

std::vector<const nn::LayerGrad*> theta_e(const ModelGradients& g) {
  std::vector<const nn::LayerGrad*> out;
  for (const auto& l : g.fe1) out.push_back(&l);
  for (const auto& l : g.fe2) out.push_back(&l);
  out.push_back(&g.concat);
  return out;
}

TEST(Embed, ZeroInputsAndBiasesGiveZero) {
  std::mt19937_64 rng(1);
  const ModelParams p = init_params(6, 2, toy_config(), rng);
  EXPECT_EQ(embed(p, Matrix::Zero(3, 6), Matrix::Zero(3, 6)).cwiseAbs().sum(), 0.0);
}

TEST(Embed, IdenticalRowsGiveIdenticalEmbeddings) {
  std::mt19937_64 rng(2);
  const ModelParams p = toy_params(5, 2, toy_config(), rng);
  Matrix x = Matrix::Random(1, 5).cwiseAbs();
  Matrix n = Matrix::Random(1, 5).cwiseAbs();
  const Matrix e = embed(p, x.replicate(2, 1), n.replicate(2, 1));
  EXPECT_TRUE(e.row(0) == e.row(1));
}

TEST(Embed, HandComputedOneNodeNetwork) {
  TrainConfig cfg;
  cfg.extractor_dims = {2, 2};
  cfg.embedding_dim = 2;
  cfg.discriminator_dims = {};
  std::mt19937_64 rng(0);
  ModelParams p = init_params(2, 2, cfg, rng);
  auto set = [](nn::DenseLayer& l, std::initializer_list<double> w, std::initializer_list<double> b) {
    auto wi = w.begin();
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = *wi++;
    }
    auto bi = b.begin();
    for (Eigen::Index c = 0; c < l.bias.size(); ++c) l.bias(c) = *bi++;
  };
  set(p.fe1[0], {1, -1, 2, 0.5}, {0, 0.1});
  set(p.fe1[1], {1, 0, -1, 1}, {0.2, 0});
  set(p.fe2[0], {0.5, 0.5, -0.5, 1}, {0, 0});
  set(p.fe2[1], {1, 1, 1, -1}, {0, 0.3});
  set(p.concat, {1, 0, 0, 1, -1, 1, 0.5, -0.5}, {0, 0.1});
  Matrix x(1, 2);
  x << 1, 2;
  Matrix n(1, 2);
  n << 0.5, 1;
  // FE1: relu([1+4, -1+1+0.1]) = [5, 0.1]; relu([5-0.1+0.2, 0.1]) = [5.1, 0.1]
  // FE2: relu([0.25-0.5, 0.25+1]) = [0, 1.25]; relu([1.25, -1.25+0.3]) = [1.25, 0]
  // concat [5.1, 0.1, 1.25, 0] -> relu([5.1-1.25, 0.1+1.25+0.1]) = [3.85, 1.45]
  const Matrix e = embed(p, x, n);
  EXPECT_NEAR(e(0, 0), 3.85, 1e-12);
  EXPECT_NEAR(e(0, 1), 1.45, 1e-12);
}

TEST(Embed, WidthMismatchThrows) {
  std::mt19937_64 rng(1);
  const ModelParams p = init_params(6, 2, toy_config(), rng);
  EXPECT_THROW(embed(p, Matrix::Zero(2, 5), Matrix::Zero(2, 5)), ArgumentError);
  EXPECT_THROW(embed(p, Matrix::Zero(2, 6), Matrix::Zero(3, 6)), ArgumentError);
}

TEST(PairwiseLoss, IdenticalEmbeddingsGiveExactlyZero) {
  const Matrix e = Matrix::Constant(4, 3, 0.7);
  const Matrix a = Matrix::Ones(4, 4) - Matrix::Identity(4, 4);
  EXPECT_EQ(loss_pairwise(e, a, e, a).value, 0.0);
}

TEST(PairwiseLoss, TwoNodeExample) {
  Matrix e(2, 2);
  e << 1, 0, 0, 1;
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  EXPECT_DOUBLE_EQ(loss_pairwise(e, a, Matrix(0, 2), Matrix(0, 0)).value, 2.0);
}

TEST(PairwiseLoss, LinearInProximity) {
  std::mt19937_64 rng(3);
  auto batch = toy_batch(5, 4, 2, LabelMode::kMulticlass, rng);
  const Matrix es = Matrix::Random(5, 3);
  const Matrix et = Matrix::Random(5, 3);
  const double once = loss_pairwise(es, batch.a_ss, et, batch.a_tt).value;
  const double twice = loss_pairwise(es, 2 * batch.a_ss, et, 2 * batch.a_tt).value;
  EXPECT_NEAR(twice, 2 * once, 1e-12 * std::abs(once));
}

TEST(PairwiseLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  auto batch = toy_batch(5, 4, 2, LabelMode::kMulticlass, rng);
  batch.a_ss(0, 1) += 0.5;  // asymmetric on purpose
  Matrix es = Matrix::Random(5, 3);
  Matrix et = Matrix::Random(5, 3);
  const auto lp = loss_pairwise(es, batch.a_ss, et, batch.a_tt);
  GradCheck check;
  auto f = [&]() { return loss_pairwise(es, batch.a_ss, et, batch.a_tt).value; };
  testing::check_tensor(es, lp.grad_source, f, check);
  testing::check_tensor(et, lp.grad_target, f, check);
  EXPECT_LT(check.max_relative_error, 1e-6);
}

TEST(PairwiseLoss, NegativeProximityRejected) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 1) = -1;
  EXPECT_THROW(loss_pairwise(Matrix::Zero(2, 2), a, Matrix(0, 2), Matrix(0, 0)), ValidationError);
}

TEST(ClassificationLoss, UniformSoftmaxOverFiveClassesIsLog5) {
  Matrix y = Matrix::Zero(4, 5);
  for (int i = 0; i < 4; ++i) y(i, i) = 1;
  const auto l = loss_classification(Matrix::Constant(4, 5, 0.3), y, LabelMode::kMulticlass);
  EXPECT_NEAR(l.value, std::log(5.0), 1e-9);
}

TEST(ClassificationLoss, ConfidentCorrectPredictionIsNearZero) {
  Matrix y = Matrix::Zero(2, 3);
  y(0, 1) = y(1, 2) = 1;
  const auto l = loss_classification(y * 60.0, y, LabelMode::kMulticlass);
  EXPECT_LT(l.value, 1e-10);
}

TEST(ClassificationLoss, MultilabelAtHalfIsThreeLog2) {
  Matrix y(2, 3);
  y << 1, 0, 1, 0, 0, 1;
  const auto l = loss_classification(Matrix::Zero(2, 3), y, LabelMode::kMultilabel);
  EXPECT_NEAR(l.value, 3 * std::log(2.0), 1e-12);
}

TEST(ClassificationLoss, ExtremeLogitsStayFinite) {
  Matrix y = Matrix::Zero(1, 2);
  y(0, 0) = 1;
  Matrix z(1, 2);
  z << -800, 800;
  EXPECT_NEAR(loss_classification(z, y, LabelMode::kMulticlass).value, 1600, 1e-9);
  EXPECT_NEAR(loss_classification(z, y, LabelMode::kMultilabel).value, 1600, 1e-9);
}

TEST(ClassificationLoss, RejectsShapeAndOneHotViolations) {
  EXPECT_THROW(loss_classification(Matrix::Zero(2, 3), Matrix::Zero(2, 2), LabelMode::kMulticlass),
               ValidationError);
  EXPECT_THROW(loss_classification(Matrix::Zero(1, 3), Matrix::Ones(1, 3), LabelMode::kMulticlass),
               ValidationError);
}

TEST(DomainLoss, ChanceLevelIsLog2) {
  const std::vector<int> d{0, 0, 1, 1, 1};
  EXPECT_NEAR(loss_domain(Matrix::Constant(5, 2, -0.4), d).value, std::log(2.0), 1e-9);
  const std::vector<double> half(5, 0.5);
  EXPECT_NEAR(loss_domain_from_probabilities(half, d), std::log(2.0), 1e-12);
}

TEST(DomainLoss, PerfectDiscriminationIsNearZeroUnderClamping) {
  const std::vector<int> d{0, 1, 1};
  const std::vector<double> p{0.0, 1.0, 1.0};
  EXPECT_LT(loss_domain_from_probabilities(p, d), 1e-10);
}

TEST(DomainLoss, SwappingLabelsAndProbabilitiesIsInvariant) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<int> d;
  std::vector<double> p;
  std::vector<int> d_swapped;
  std::vector<double> p_swapped;
  for (int i = 0; i < 20; ++i) {
    d.push_back(i % 3 == 0);
    p.push_back(u(rng));
    d_swapped.push_back(1 - d.back());
    p_swapped.push_back(1 - p.back());
  }
  EXPECT_NEAR(loss_domain_from_probabilities(p, d),
              loss_domain_from_probabilities(p_swapped, d_swapped), 1e-12);
}

TEST(DomainLoss, LogitAndProbabilityFormsAgree) {
  std::mt19937_64 rng(9);
  const Matrix z = Matrix::Random(6, 2) * 3;
  const std::vector<int> d{0, 1, 0, 1, 1, 0};
  const Matrix prob = nn::softmax_rows(z);
  std::vector<double> target(prob.col(1).data(), prob.col(1).data() + 6);
  EXPECT_NEAR(loss_domain(z, d).value, loss_domain_from_probabilities(target, d), 1e-12);
}

TEST(Schedules, ClosedFormValues) {
  EXPECT_EQ(schedule_lambda(0.0), 0.0);
  EXPECT_NEAR(schedule_lambda(1.0), 0.999909, 1e-6);
  EXPECT_NEAR(schedule_lambda(0.5), 0.986614, 1e-6);
  EXPECT_EQ(schedule_lr(0.02, 0.0), 0.02);
  EXPECT_NEAR(schedule_lr(0.01, 1.0), 0.001656, 1e-6);
  EXPECT_THROW(schedule_lambda(1.5), ArgumentError);
  EXPECT_THROW(schedule_lambda(-0.1), ArgumentError);
  EXPECT_THROW(schedule_lr(0.0, 0.5), ArgumentError);
}

TEST(Schedules, LambdaRisesAndLearningRateFalls) {
  for (int i = 1; i <= 100; ++i) {
    EXPECT_GT(schedule_lambda(i / 100.0), schedule_lambda((i - 1) / 100.0));
    EXPECT_LT(schedule_lr(0.02, i / 100.0), schedule_lr(0.02, (i - 1) / 100.0));
  }
}

// theta_e and theta_y against L_y + p L_p - lambda L_d; theta_d against L_d.
TEST(ComputeGradients, MatchFiniteDifferencesOfTheSignedObjective) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> width(2, 6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GradCheck check;
  for (int trial = 0; trial < 25; ++trial) {
    const int w = width(rng);
    const auto mode = trial % 4 == 3 ? LabelMode::kMultilabel : LabelMode::kMulticlass;
    ModelParams params = toy_params(w, 2, toy_config(), rng, mode);
    const MiniBatch batch = toy_batch(3, w, 2, mode, rng);
    const double p = 0.1 + u(rng);
    const double lambda = u(rng);
    const auto result = compute_gradients(params, batch, p, lambda);
    auto composite = [&]() { return signed_objective(params, batch, p, lambda); };
    auto domain = [&]() { return evaluate_losses(params, batch).domain; };
    for (std::size_t i = 0; i < params.fe1.size(); ++i) {
      testing::check_layer(params.fe1[i], result.grads.fe1[i], composite, check);
      testing::check_layer(params.fe2[i], result.grads.fe2[i], composite, check);
    }
    testing::check_layer(params.concat, result.grads.concat, composite, check);
    testing::check_layer(params.classifier, result.grads.classifier, composite, check);
    for (std::size_t i = 0; i < params.discriminator.size(); ++i) {
      testing::check_layer(params.discriminator[i], result.grads.discriminator[i], domain, check);
    }
  }
  EXPECT_LT(check.max_relative_error, 1e-4) << check.checked << " entries checked";
}

TEST(ComputeGradients, ReversalIsMinusLambdaTimesPlainBackprop) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const int w = 3 + trial % 4;
    const ModelParams params = toy_params(w, 2, toy_config(), rng);
    const MiniBatch batch = toy_batch(3, w, 2, LabelMode::kMulticlass, rng);
    const double lambda = 0.1 + 0.2 * trial;

    // Plain backprop of L_d through discriminator and embedding.
    EmbedCache cache;
    Matrix xs(6, w);
    xs << batch.xs, batch.xt;
    Matrix ns(6, w);
    ns << batch.ns, batch.nt;
    const Matrix e = embed(params, xs, ns, &cache);
    std::vector<nn::DenseLayer> disc = params.discriminator;
    disc.back().activation = nn::Activation::kIdentity;
    nn::ForwardCache dcache;
    const Matrix logits = nn::forward(disc, e, &dcache);
    std::vector<nn::LayerGrad> dgrads;
    const Matrix grad_e = nn::backward(disc, dcache, loss_domain(logits, batch.domain_labels).grad,
                                       dgrads);
    ModelGradients plain = ModelGradients::zeros_like(params);
    embed_backward(params, cache, grad_e, plain);

    const ObjectiveTerms domain_only{false, false, true};
    const auto reversed = compute_gradients(params, batch, 0.5, lambda, domain_only);
    const auto a = theta_e(reversed.grads);
    const auto b = theta_e(plain);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_LE((a[i]->weight + lambda * b[i]->weight).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LE((a[i]->bias + lambda * b[i]->bias).cwiseAbs().maxCoeff(), 1e-12);
    }
    // The discriminator's own gradient is not scaled by lambda.
    for (std::size_t i = 0; i < dgrads.size(); ++i) {
      expect_same(reversed.grads.discriminator[i], dgrads[i], 1e-15);
    }
  }
}

TEST(ComputeGradients, ZeroLambdaMatchesNoDiscriminator) {
  std::mt19937_64 rng(13);
  const ModelParams params = toy_params(5, 2, toy_config(), rng);
  const MiniBatch batch = toy_batch(4, 5, 2, LabelMode::kMulticlass, rng);
  const auto with_zero = compute_gradients(params, batch, 0.1, 0.0);
  const auto without = compute_gradients(params, batch, 0.1, 0.7, terms_for(Variant::kNoDiscriminator));
  const auto a = theta_e(with_zero.grads);
  const auto b = theta_e(without.grads);
  for (std::size_t i = 0; i < a.size(); ++i) expect_same(*a[i], *b[i], 0.0);
  for (const auto& g : without.grads.discriminator) EXPECT_EQ(g.weight.cwiseAbs().sum(), 0.0);
}

TEST(ComputeGradients, AblationsDropTheirTerm) {
  std::mt19937_64 rng(14);
  const ModelParams params = toy_params(5, 2, toy_config(), rng);
  const MiniBatch batch = toy_batch(4, 5, 2, LabelMode::kMulticlass, rng);
  const auto no_pair = compute_gradients(params, batch, 0.3, 0.5, terms_for(Variant::kNoPairwise));
  const auto zero_p = compute_gradients(params, batch, 0.0, 0.5);
  const auto a = theta_e(no_pair.grads);
  const auto b = theta_e(zero_p.grads);
  for (std::size_t i = 0; i < a.size(); ++i) expect_same(*a[i], *b[i], 0.0);

  const auto no_cls = compute_gradients(params, batch, 0.3, 0.5, terms_for(Variant::kNoClassifier));
  EXPECT_EQ(no_cls.grads.classifier.weight.cwiseAbs().sum(), 0.0);
  EXPECT_GT(no_cls.losses.classification, 0.0);  // still reported
}

TEST(ComputeGradients, SingleBranchVariantsOmitTheirExtractor) {
  std::mt19937_64 rng(15);
  for (auto v : {Variant::kNoFe1, Variant::kNoFe2}) {
    ModelParams params = toy_params(4, 2, toy_config(v), rng);
    EXPECT_EQ(params.concat.in_dim(), 3);
    EXPECT_EQ(params.fe1.empty(), v == Variant::kNoFe1);
    EXPECT_EQ(params.fe2.empty(), v == Variant::kNoFe2);
    const MiniBatch batch = toy_batch(3, 4, 2, LabelMode::kMulticlass, rng);
    const auto result = compute_gradients(params, batch, 0.2, 0.4);
    GradCheck check;
    auto composite = [&]() { return signed_objective(params, batch, 0.2, 0.4); };
    testing::check_layer(params.concat, result.grads.concat, composite, check);
    auto& branch = v == Variant::kNoFe1 ? params.fe2 : params.fe1;
    auto& grads = v == Variant::kNoFe1 ? result.grads.fe2 : result.grads.fe1;
    for (std::size_t i = 0; i < branch.size(); ++i) {
      testing::check_layer(branch[i], grads[i], composite, check);
    }
    EXPECT_LT(check.max_relative_error, 1e-4);
  }
}

TEST(ComputeGradients, PermutingTheBatchPermutesEmbeddings) {
  std::mt19937_64 rng(16);
  const ModelParams params = toy_params(5, 2, toy_config(), rng);
  const MiniBatch batch = toy_batch(4, 5, 2, LabelMode::kMulticlass, rng);
  std::vector<int> perm{2, 0, 3, 1};
  MiniBatch shuffled = batch;
  for (int i = 0; i < 4; ++i) {
    shuffled.xs.row(i) = batch.xs.row(perm[i]);
    shuffled.ns.row(i) = batch.ns.row(perm[i]);
    shuffled.ys.row(i) = batch.ys.row(perm[i]);
    for (int j = 0; j < 4; ++j) shuffled.a_ss(i, j) = batch.a_ss(perm[i], perm[j]);
  }
  const Matrix e = embed(params, batch.xs, batch.ns);
  const Matrix es = embed(params, shuffled.xs, shuffled.ns);
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(es.row(i) == e.row(perm[i]));
  const auto a = evaluate_losses(params, batch);
  const auto b = evaluate_losses(params, shuffled);
  EXPECT_NEAR(a.classification, b.classification, 1e-12);
  EXPECT_NEAR(a.pairwise, b.pairwise, 1e-12);
  EXPECT_NEAR(a.domain, b.domain, 1e-12);
}

TEST(ComputeGradients, NonFiniteInputIsANumericError) {
  std::mt19937_64 rng(17);
  const ModelParams params = toy_params(4, 2, toy_config(), rng);
  MiniBatch batch = toy_batch(3, 4, 2, LabelMode::kMulticlass, rng);
  batch.xs(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(compute_gradients(params, batch, 0.1, 0.1), NumericError);
  EXPECT_THROW(compute_gradients(params, toy_batch(3, 4, 2, LabelMode::kMulticlass, rng), 0.1, -1),
               ArgumentError);
}

TEST(DecideLabels, ArgmaxTiesGoToLowestIndex) {
  Matrix p(3, 3);
  p << 0.2, 0.5, 0.3, 0.4, 0.4, 0.2, 0.1, 0.1, 0.8;
  Matrix expected(3, 3);
  expected << 0, 1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_TRUE(decide_labels(p, LabelMode::kMulticlass) == expected);
}

TEST(DecideLabels, MultilabelThreshold) {
  Matrix p(1, 4);
  p << 0.5, 0.49, 0.9, 0.1;
  Matrix expected(1, 4);
  expected << 1, 0, 1, 0;
  EXPECT_TRUE(decide_labels(p, LabelMode::kMultilabel, 0.5) == expected);
  expected << 0, 0, 1, 0;
  EXPECT_TRUE(decide_labels(p, LabelMode::kMultilabel, 0.6) == expected);
}

TEST(Variants, NamesRoundTrip) {
  for (auto v : {Variant::kFull, Variant::kNoFe1, Variant::kNoFe2, Variant::kNoPairwise,
                 Variant::kNoClassifier, Variant::kNoDiscriminator}) {
    EXPECT_EQ(parse_variant(to_string(v)), v);
  }
  EXPECT_THROW(parse_variant("bogus"), ArgumentError);
}

TEST(TrainConfig, ValidationRejectsBadValues) {
  TrainConfig c;
  c.batch_size = 99;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = {};
  c.steps = 0;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = {};
  c.initial_lr = 0;
  EXPECT_THROW(c.validate(), ArgumentError);
  EXPECT_NO_THROW(TrainConfig{}.validate());
}

}  // namespace
}  // namespace acdne
