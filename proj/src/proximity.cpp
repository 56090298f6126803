#include "acdne/proximity.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <vector>

#include "acdne/errors.hpp"

namespace acdne {

namespace {

constexpr double kDropBelow = 1e-12;

}  // namespace

ProximityMatrix ppmi_matrix(const SparseMatrix& adjacency, int steps) {
  if (steps < 1) throw ArgumentError("PPMI step count must be >= 1, got " + std::to_string(steps));
  if (adjacency.rows() != adjacency.cols()) throw ArgumentError("adjacency must be square");
  const Eigen::Index n = adjacency.rows();

  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < adjacency.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(adjacency, i); it; ++it) degree(i) += it.value();
  }
  SparseMatrix transition = adjacency;
  for (Eigen::Index i = 0; i < transition.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(transition, i); it; ++it) it.valueRef() /= degree(i);
  }

  SparseMatrix walk = adjacency;
  SparseMatrix joint = walk;
  for (int k = 2; k <= steps; ++k) {
    walk = (walk * transition).pruned();
    joint += walk;
  }
  joint /= static_cast<double>(steps);
  joint.prune([](Eigen::Index row, Eigen::Index col, double) { return row != col; });

  Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd col_sum = Eigen::VectorXd::Zero(n);
  double total = 0;
  for (Eigen::Index i = 0; i < joint.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(joint, i); it; ++it) {
      row_sum(i) += it.value();
      col_sum(it.col()) += it.value();
      total += it.value();
    }
  }

  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index i = 0; i < joint.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(joint, i); it; ++it) {
      if (it.value() <= 0) continue;
      const double pmi = std::log(it.value() * total / (row_sum(i) * col_sum(it.col())));
      if (pmi > kDropBelow) entries.emplace_back(i, it.col(), pmi);
    }
  }
  ProximityMatrix out;
  out.steps = steps;
  out.values.resize(n, n);
  out.values.setFromTriplets(entries.begin(), entries.end());
  return out;
}

ProximityMatrix ppmi_matrix(const AttributedNetwork& network, int steps) {
  return ppmi_matrix(network.adjacency, steps);
}

SparseMatrix neighbor_aggregate(const ProximityMatrix& proximity, const SparseMatrix& attributes) {
  if (proximity.size() != attributes.rows()) {
    throw ArgumentError("proximity has " + std::to_string(proximity.size()) +
                        " nodes but attribute matrix has " + std::to_string(attributes.rows()) +
                        " rows");
  }
  SparseMatrix weights = proximity.values;
  for (Eigen::Index i = 0; i < weights.outerSize(); ++i) {
    double mass = 0;
    for (SparseMatrix::InnerIterator it(weights, i); it; ++it) {
      if (it.col() != i) mass += it.value();
    }
    for (SparseMatrix::InnerIterator it(weights, i); it; ++it) {
      it.valueRef() = (it.col() != i && mass > 0) ? it.value() / mass : 0.0;
    }
  }
  SparseMatrix neighbours = weights * attributes;
  return neighbours;
}

void write_proximity(const ProximityMatrix& proximity, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < proximity.values.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(proximity.values, i); it; ++it) {
      out << i << '\t' << it.col() << '\t' << it.value() << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace acdne
