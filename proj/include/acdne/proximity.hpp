#pragma once

#include <filesystem>

#include "acdne/graph.hpp"

namespace acdne {

// K-step positive PMI between nodes of one undirected graph. Only strictly
// positive off-diagonal entries are stored.
struct ProximityMatrix {
  int steps = 0;
  SparseMatrix values;

  int size() const { return static_cast<int>(values.rows()); }
  double operator()(int i, int j) const { return values.coeff(i, j); }
};

// Co-occurrence counts come from random walks of length 1..steps started at
// every edge endpoint: J = (1/K) sum_k Adj (D^-1 Adj)^(k-1), which is
// symmetric for undirected graphs. The diagonal is dropped before the
// marginals are taken; a_ij = max(0, ln(J_ij * sum(J) / (row_i * col_j))).
// Nodes without edges get an empty row.
ProximityMatrix ppmi_matrix(const SparseMatrix& adjacency, int steps);
ProximityMatrix ppmi_matrix(const AttributedNetwork& network, int steps);

// Row i is the proximity-weighted mean of the attribute rows of i's
// neighbours (weights a_ij / sum_g a_ig); zero when i has no neighbour.
SparseMatrix neighbor_aggregate(const ProximityMatrix& proximity, const SparseMatrix& attributes);

// Debug export: `i<TAB>j<TAB>a_ij` per stored entry.
void write_proximity(const ProximityMatrix& proximity, const std::filesystem::path& path);

}  // namespace acdne
