#pragma once

// Test-only reference implementations. Nothing here calls the library code
// paths it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "acdne/model.hpp"

namespace acdne::testing {

inline Matrix random_undirected(int n, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution edge(density);
  Matrix adj = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (edge(rng)) adj(i, j) = adj(j, i) = 1.0;
    }
  }
  return adj;
}

inline SparseMatrix to_sparse(const Matrix& dense) { return dense.sparseView(); }

// Walk co-occurrence J = D * (1/K) sum_{k=1..K} T^k with the diagonal removed.
inline Matrix dense_cooccurrence(const Matrix& adj, int steps) {
  const Eigen::Index n = adj.rows();
  const Eigen::VectorXd degree = adj.rowwise().sum();
  Matrix transition = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (degree(i) > 0) transition.row(i) = adj.row(i) / degree(i);
  }
  Matrix power = Matrix::Identity(n, n);
  Matrix average = Matrix::Zero(n, n);
  for (int k = 0; k < steps; ++k) {
    power = power * transition;
    average += power;
  }
  average /= steps;
  Matrix joint = degree.asDiagonal() * average;
  joint.diagonal().setZero();
  return joint;
}

// Dense PPMI from the co-occurrence above:
// a_ij = max(0, ln(J_ij * sum(J) / (rowsum_i * colsum_j))).
inline Matrix dense_ppmi(const Matrix& adj, int steps) {
  const Eigen::Index n = adj.rows();
  const Matrix joint = dense_cooccurrence(adj, steps);
  const double total = joint.sum();
  const Eigen::VectorXd rows = joint.rowwise().sum();
  const Eigen::RowVectorXd cols = joint.colwise().sum();
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j || joint(i, j) <= 0) continue;
      out(i, j) = std::max(0.0, std::log(joint(i, j) * total / (rows(i) * cols(j))));
    }
  }
  return out;
}

struct GradCheck {
  double max_relative_error = 0;
  std::size_t checked = 0;
};

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

// Central differences of `objective` w.r.t. every entry of `param`,
// compared against `analytic`.
inline void check_tensor(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& analytic,
                         const std::function<double()>& objective, GradCheck& result,
                         double step = 1e-5) {
  for (Eigen::Index r = 0; r < param.rows(); ++r) {
    for (Eigen::Index c = 0; c < param.cols(); ++c) {
      const double saved = param(r, c);
      param(r, c) = saved + step;
      const double up = objective();
      param(r, c) = saved - step;
      const double down = objective();
      param(r, c) = saved;
      const double numeric = (up - down) / (2 * step);
      result.max_relative_error =
          std::max(result.max_relative_error, relative_error(analytic(r, c), numeric));
      ++result.checked;
    }
  }
}

inline void check_layer(nn::DenseLayer& layer, const nn::LayerGrad& grad,
                        const std::function<double()>& objective, GradCheck& result) {
  check_tensor(layer.weight, grad.weight, objective, result);
  Eigen::MatrixXd bias = layer.bias;
  Eigen::MatrixXd bias_grad = grad.bias;
  // Perturb through a proxy row and copy it back before every evaluation.
  auto proxy_objective = [&]() {
    layer.bias = bias.row(0);
    return objective();
  };
  check_tensor(bias, bias_grad, proxy_objective, result);
  layer.bias = bias.row(0);
}

// A small random batch with symmetric nonnegative proximity blocks.
inline MiniBatch toy_batch(int half, int width, int classes, LabelMode mode, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, classes - 1);
  MiniBatch b;
  auto features = [&](Matrix& m) {
    m.resize(half, width);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng) < 0.6 ? u(rng) : 0.0;
  };
  features(b.xs);
  features(b.ns);
  features(b.xt);
  features(b.nt);
  b.ys = Matrix::Zero(half, classes);
  for (int i = 0; i < half; ++i) {
    if (mode == LabelMode::kMulticlass) {
      b.ys(i, pick(rng)) = 1.0;
    } else {
      for (int k = 0; k < classes; ++k) b.ys(i, k) = u(rng) < 0.5 ? 1.0 : 0.0;
    }
  }
  auto block = [&](Matrix& a) {
    a = Matrix::Zero(half, half);
    for (int i = 0; i < half; ++i) {
      for (int j = i + 1; j < half; ++j) {
        if (u(rng) < 0.5) a(i, j) = a(j, i) = u(rng) * 2.0;
      }
    }
  };
  block(b.a_ss);
  block(b.a_tt);
  for (int i = 0; i < half; ++i) b.source_idx.push_back(i);
  for (int i = 0; i < half; ++i) b.target_idx.push_back(i);
  b.domain_labels.assign(half, 0);
  b.domain_labels.insert(b.domain_labels.end(), half, 1);
  return b;
}

// Training objective of the embedding/classifier side: L_y + p L_p - lambda L_d.
inline double signed_objective(const ModelParams& params, const MiniBatch& batch,
                               double pairwise_weight, double lambda) {
  const auto l = evaluate_losses(params, batch);
  return l.classification + pairwise_weight * l.pairwise - lambda * l.domain;
}

}  // namespace acdne::testing
