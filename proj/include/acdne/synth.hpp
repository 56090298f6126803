#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>

#include "acdne/graph.hpp"

namespace acdne {

// Two stochastic-block-model graphs with class-conditioned binary
// attributes. Attribute columns are split into one block per class; a node
// of class k switches on each column of block k with probability `signal`
// and every other column with probability `background`.
struct SynthSpec {
  int n_source = 500;
  int n_target = 500;
  int classes = 3;
  int attribute_dim = 200;
  double p_in = 0.05;
  double p_out = 0.005;
  // Edge-structure shift for the target; unset means same as the source.
  std::optional<double> target_p_in;
  std::optional<double> target_p_out;
  double signal = 0.3;
  double background = 0.02;
  // Fraction of target ones and zeros flipped after generation.
  double flip_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

AttributedNetwork generate_network(int nodes, int classes, int attribute_dim, double p_in,
                                   double p_out, double signal, double background,
                                   std::mt19937_64& rng);

NetworkPair generate_pair(const SynthSpec& spec);

// Flips floor(flip_rate * nnz) ones to zero and floor(flip_rate * zeros)
// zeros to one, each set chosen uniformly without replacement. `attributes`
// must be binary.
SparseMatrix perturb_attributes(const SparseMatrix& attributes, double flip_rate,
                                std::mt19937_64& rng);

// source.{edges,attrs,labels} and target.{edges,attrs,labels} under `dir`.
void write_pair(const NetworkPair& pair, const std::filesystem::path& dir);

}  // namespace acdne
