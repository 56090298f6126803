#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <vector>

#include "acdne/errors.hpp"
#include "acdne/graph.hpp"
#include "acdne/model.hpp"
#include "acdne/proximity.hpp"

namespace acdne {

// A network with its derived PPMI proximities and neighbour features.
struct PreparedNetwork {
  SparseMatrix attributes;
  SparseMatrix neighbors;
  ProximityMatrix proximity;
  std::optional<Matrix> labels;

  int node_count() const { return static_cast<int>(attributes.rows()); }
};

PreparedNetwork prepare_network(const AttributedNetwork& network, int steps);

struct PreparedPair {
  PreparedNetwork source;
  PreparedNetwork target;
};

PreparedPair prepare_pair(const NetworkPair& pair, int steps);

struct BatchIndices {
  std::vector<int> source;
  std::vector<int> target;
};

// Draws batch_size/2 nodes per network from shuffled permutations. A
// permutation that runs out is reshuffled and drawing continues, so the
// smaller network wraps around; an epoch is one pass over the larger one.
class BatchSampler {
 public:
  BatchSampler(int source_nodes, int target_nodes, int batch_size, std::uint64_t seed);

  int batches_per_epoch() const { return batches_per_epoch_; }
  // Both permutations are reshuffled at the start of every epoch.
  void start_epoch();
  BatchIndices next();

 private:
  struct Stream {
    std::vector<int> order;
    std::size_t cursor = 0;
  };
  std::vector<int> draw(Stream& stream, int count);

  int half_;
  int batches_per_epoch_;
  std::mt19937_64 rng_;
  Stream source_;
  Stream target_;
};

MiniBatch make_batch(const PreparedPair& pair, const BatchIndices& indices);

struct EpochLog {
  int epoch = 0;
  double classification_loss = 0;
  double pairwise_loss = 0;
  double domain_loss = 0;
  double learning_rate = 0;
  double lambda = 0;
  double domain_accuracy = 0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

// Raised when a loss or gradient turns non-finite. `last_good` holds the
// parameters before the failing batch.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, ModelParams last_good, std::vector<EpochLog> log)
      : NumericError(what),
        last_good_(std::make_shared<ModelParams>(std::move(last_good))),
        log_(std::make_shared<std::vector<EpochLog>>(std::move(log))) {}
  const ModelParams& last_good() const { return *last_good_; }
  const std::vector<EpochLog>& log() const { return *log_; }

 private:
  std::shared_ptr<ModelParams> last_good_;
  std::shared_ptr<std::vector<EpochLog>> log_;
};

ModelParams initial_params(const PreparedPair& pair, const TrainConfig& config);

TrainResult train(const PreparedPair& pair, const TrainConfig& config);
TrainResult train(const NetworkPair& pair, const TrainConfig& config);

// CSV: epoch,L_y,L_p,L_d,mu,lambda
void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace acdne
