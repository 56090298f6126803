#include "acdne/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

namespace acdne {

namespace {

// Seeds for the initialisation and sampling streams are derived from the
// user seed so the two never share state.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Matrix dense_rows(const SparseMatrix& m, const std::vector<int>& rows) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (SparseMatrix::InnerIterator it(m, rows[r]); it; ++it) {
      out(static_cast<Eigen::Index>(r), it.col()) = it.value();
    }
  }
  return out;
}

Matrix proximity_block(const ProximityMatrix& prox, const std::vector<int>& nodes) {
  const auto m = static_cast<Eigen::Index>(nodes.size());
  std::unordered_map<int, std::vector<Eigen::Index>> position;
  for (Eigen::Index i = 0; i < m; ++i) position[nodes[i]].push_back(i);
  Matrix block = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (SparseMatrix::InnerIterator it(prox.values, nodes[i]); it; ++it) {
      auto found = position.find(static_cast<int>(it.col()));
      if (found == position.end()) continue;
      for (Eigen::Index j : found->second) {
        if (j != i) block(i, j) = it.value();
      }
    }
  }
  return block;
}

}  // namespace

PreparedNetwork prepare_network(const AttributedNetwork& network, int steps) {
  PreparedNetwork out;
  out.attributes = network.attributes;
  out.proximity = ppmi_matrix(network, steps);
  out.neighbors = neighbor_aggregate(out.proximity, network.attributes);
  out.labels = network.labels;
  return out;
}

PreparedPair prepare_pair(const NetworkPair& pair, int steps) {
  pair.validate();
  return {prepare_network(pair.source, steps), prepare_network(pair.target, steps)};
}

BatchSampler::BatchSampler(int source_nodes, int target_nodes, int batch_size, std::uint64_t seed)
    : half_(batch_size / 2), rng_(seed) {
  if (batch_size < 2 || batch_size % 2 != 0) {
    throw ArgumentError("batch size must be even and >= 2, got " + std::to_string(batch_size));
  }
  if (source_nodes < 1 || target_nodes < 1) {
    throw ArgumentError("both networks must have at least one node");
  }
  const int larger = std::max(source_nodes, target_nodes);
  batches_per_epoch_ = (larger + half_ - 1) / half_;
  source_.order.resize(source_nodes);
  target_.order.resize(target_nodes);
  for (int i = 0; i < source_nodes; ++i) source_.order[i] = i;
  for (int i = 0; i < target_nodes; ++i) target_.order[i] = i;
  start_epoch();
}

void BatchSampler::start_epoch() {
  for (auto* s : {&source_, &target_}) {
    std::shuffle(s->order.begin(), s->order.end(), rng_);
    s->cursor = 0;
  }
}

std::vector<int> BatchSampler::draw(Stream& stream, int count) {
  std::vector<int> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    if (stream.cursor == stream.order.size()) {
      std::shuffle(stream.order.begin(), stream.order.end(), rng_);
      stream.cursor = 0;
    }
    out.push_back(stream.order[stream.cursor++]);
  }
  return out;
}

BatchIndices BatchSampler::next() { return {draw(source_, half_), draw(target_, half_)}; }

MiniBatch make_batch(const PreparedPair& pair, const BatchIndices& indices) {
  if (!pair.source.labels) throw ValidationError("source network must be labeled");
  MiniBatch b;
  b.source_idx = indices.source;
  b.target_idx = indices.target;
  b.xs = dense_rows(pair.source.attributes, indices.source);
  b.ns = dense_rows(pair.source.neighbors, indices.source);
  b.xt = dense_rows(pair.target.attributes, indices.target);
  b.nt = dense_rows(pair.target.neighbors, indices.target);
  b.ys.resize(static_cast<Eigen::Index>(indices.source.size()), pair.source.labels->cols());
  for (std::size_t r = 0; r < indices.source.size(); ++r) {
    b.ys.row(static_cast<Eigen::Index>(r)) = pair.source.labels->row(indices.source[r]);
  }
  b.a_ss = proximity_block(pair.source.proximity, indices.source);
  b.a_tt = proximity_block(pair.target.proximity, indices.target);
  b.domain_labels.assign(indices.source.size(), 0);
  b.domain_labels.insert(b.domain_labels.end(), indices.target.size(), 1);
  return b;
}

ModelParams initial_params(const PreparedPair& pair, const TrainConfig& config) {
  if (!pair.source.labels) throw ValidationError("source network must be labeled");
  std::mt19937_64 init_rng(derive_seed(config.seed, 1));
  return init_params(static_cast<int>(pair.source.attributes.cols()),
                     static_cast<int>(pair.source.labels->cols()), config, init_rng);
}

TrainResult train(const PreparedPair& pair, const TrainConfig& config) {
  config.validate();
  if (!pair.source.labels) throw ValidationError("source network must be labeled");
  if (config.label_mode == LabelMode::kMulticlass) {
    for (Eigen::Index i = 0; i < pair.source.labels->rows(); ++i) {
      if (pair.source.labels->row(i).sum() != 1.0) {
        throw ValidationError("source node " + std::to_string(i) +
                              " has no label; the source network must be fully labeled");
      }
    }
  }
  if (pair.source.attributes.cols() != pair.target.attributes.cols()) {
    throw ValidationError("source and target attribute widths differ; align them first");
  }

  TrainResult result;
  result.params = initial_params(pair, config);
  if (config.epochs == 0) return result;

  BatchSampler sampler(pair.source.node_count(), pair.target.node_count(), config.batch_size,
                       derive_seed(config.seed, 2));
  nn::SgdMomentum optimizer(config.initial_lr, config.momentum, config.l2_weight);
  const ObjectiveTerms terms = terms_for(config.variant);
  const double lambda_scale = config.variant == Variant::kNoDiscriminator ? 0.0 : config.lambda_max;
  const long total_batches = static_cast<long>(config.epochs) * sampler.batches_per_epoch();
  long completed = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (epoch > 1) sampler.start_epoch();
    EpochLog entry;
    entry.epoch = epoch;
    for (int b = 0; b < sampler.batches_per_epoch(); ++b) {
      const double progress = static_cast<double>(completed) / static_cast<double>(total_batches);
      const double lambda = lambda_scale * schedule_lambda(progress);
      const double lr = schedule_lr(config.initial_lr, progress);
      const MiniBatch batch = make_batch(pair, sampler.next());

      GradientResult step;
      try {
        step = compute_gradients(result.params, batch, config.pairwise_weight, lambda, terms);
        optimizer.set_learning_rate(lr);
        auto layers = result.params.layers();
        const auto grads = step.grads.all();
        optimizer.step(layers, grads);
      } catch (const NumericError& e) {
        throw TrainingDiverged("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                                   ": " + e.what(),
                               result.params, result.log);
      }
      entry.classification_loss += step.losses.classification;
      entry.pairwise_loss += step.losses.pairwise;
      entry.domain_loss += step.losses.domain;
      entry.domain_accuracy += step.losses.domain_accuracy;
      entry.learning_rate = lr;
      entry.lambda = lambda;
      ++completed;
    }
    const double n = sampler.batches_per_epoch();
    entry.classification_loss /= n;
    entry.pairwise_loss /= n;
    entry.domain_loss /= n;
    entry.domain_accuracy /= n;
    result.log.push_back(entry);
  }
  return result;
}

TrainResult train(const NetworkPair& pair, const TrainConfig& config) {
  config.validate();
  return train(prepare_pair(pair, config.steps), config);
}

void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,L_y,L_p,L_d,mu,lambda\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << nn::format_double(e.classification_loss) << ','
        << nn::format_double(e.pairwise_loss) << ',' << nn::format_double(e.domain_loss) << ','
        << nn::format_double(e.learning_rate) << ',' << nn::format_double(e.lambda) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace acdne
