#include "acdne/proximity.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "acdne/errors.hpp"
#include "oracles.hpp"

namespace acdne {
namespace {

using testing::dense_cooccurrence;
using testing::dense_ppmi;
using testing::random_undirected;
using testing::to_sparse;

TEST(Ppmi, SingleIsolatedNodeIsEmpty) {
  const auto prox = ppmi_matrix(to_sparse(Matrix::Zero(1, 1)), 3);
  EXPECT_EQ(prox.size(), 1);
  EXPECT_EQ(prox.values.nonZeros(), 0);
}

TEST(Ppmi, SingleEdgeIsLogTwo) {
  Matrix adj(2, 2);
  adj << 0, 1, 1, 0;
  const auto prox = ppmi_matrix(to_sparse(adj), 1);
  EXPECT_NEAR(prox(0, 1), std::log(2.0), 1e-15);
  EXPECT_NEAR(prox(1, 0), std::log(2.0), 1e-15);
  EXPECT_EQ(prox(0, 0), 0.0);
}

TEST(Ppmi, TwoStepReachOnPath) {
  Matrix adj(3, 3);
  adj << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  const auto prox = ppmi_matrix(to_sparse(adj), 2);
  EXPECT_GT(prox(0, 2), 0.0);
  EXPECT_LT(prox(0, 2), prox(0, 1));
  // Hand evaluation: J = [[0,1/2,1/4],[1/2,0,1/2],[1/4,1/2,0]] after removing the diagonal.
  EXPECT_NEAR(prox(0, 1), std::log(0.5 * 2.5 / (0.75 * 1.0)), 1e-14);
  EXPECT_NEAR(prox(0, 2), std::log(0.25 * 2.5 / (0.75 * 0.75)), 1e-14);
}

TEST(Ppmi, RejectsZeroSteps) {
  EXPECT_THROW(ppmi_matrix(to_sparse(Matrix::Zero(2, 2)), 0), ArgumentError);
}

TEST(Ppmi, MatchesDenseOracleAndIsSymmetric) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> size(1, 30);
  std::uniform_real_distribution<double> density(0.05, 0.6);
  for (int trial = 0; trial < 40; ++trial) {
    const Matrix adj = random_undirected(size(rng), density(rng), rng);
    for (int k = 1; k <= 4; ++k) {
      const Matrix got = Matrix(ppmi_matrix(to_sparse(adj), k).values);
      const Matrix want = dense_ppmi(adj, k);
      ASSERT_LE((got - want).cwiseAbs().maxCoeff(), 1e-9) << "trial " << trial << " K=" << k;
      const double scale = std::max(1.0, got.cwiseAbs().maxCoeff());
      ASSERT_LE((got - got.transpose()).cwiseAbs().maxCoeff(), 1e-9 * scale);
      EXPECT_EQ(got.diagonal().cwiseAbs().sum(), 0.0);
      EXPECT_GE(got.minCoeff(), 0.0);
    }
  }
}

TEST(Ppmi, NoProximityBeyondKSteps) {
  // Path 0-1-2-3-4: node 0 cannot reach 3 within two steps.
  Matrix adj = Matrix::Zero(5, 5);
  for (int i = 0; i < 4; ++i) adj(i, i + 1) = adj(i + 1, i) = 1;
  const auto prox = ppmi_matrix(to_sparse(adj), 2);
  EXPECT_EQ(prox(0, 3), 0.0);
  EXPECT_EQ(prox(0, 4), 0.0);
}

TEST(Ppmi, InvariantToGlobalScaleOfCooccurrence) {
  // Summing instead of averaging the K walk matrices scales J by K; the
  // PMI ratio cancels it. Checked through the oracle with a scaled joint.
  std::mt19937_64 rng(5);
  const Matrix adj = random_undirected(15, 0.3, rng);
  const Matrix base = dense_ppmi(adj, 3);
  const Matrix scaled_adj = adj * 7.0;  // scales D and T-invariant: J scales by 7
  EXPECT_LE((dense_ppmi(scaled_adj, 3) - base).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((Matrix(ppmi_matrix(to_sparse(scaled_adj), 3).values) - base).cwiseAbs().maxCoeff(),
            1e-12);
}

// Walk reach only grows with K. The PPMI entry itself can still drop to 0
// when the larger walk spreads mass so that the ratio falls to <= 1; such
// cases are expected and must agree with the oracle.
TEST(Ppmi, ReachIsMonotoneInK) {
  std::mt19937_64 rng(17);
  int clipped = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix adj = random_undirected(12, 0.25, rng);
    const Matrix k1 = dense_ppmi(adj, 1);
    const Matrix joint2 = dense_cooccurrence(adj, 2);
    const Matrix k2 = dense_ppmi(adj, 2);
    const Matrix got2 = Matrix(ppmi_matrix(to_sparse(adj), 2).values);
    for (int i = 0; i < 12; ++i) {
      for (int j = 0; j < 12; ++j) {
        if (k1(i, j) <= 0) continue;
        EXPECT_GT(joint2(i, j), 0.0) << "trial " << trial << " (" << i << "," << j << ")";
        EXPECT_NEAR(got2(i, j), k2(i, j), 1e-9);
        if (k2(i, j) == 0.0) {
          ++clipped;
          const double ratio = joint2(i, j) * joint2.sum() /
                               (joint2.row(i).sum() * joint2.col(j).sum());
          EXPECT_LE(ratio, 1.0 + 1e-12);
        }
      }
    }
  }
  // The seed is chosen so this run includes clipped entries.
  EXPECT_GT(clipped, 0);
}

TEST(NeighborAggregate, SingleNeighborCopiesItsRow) {
  Matrix adj(2, 2);
  adj << 0, 1, 1, 0;
  Matrix x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  const Matrix n = Matrix(neighbor_aggregate(ppmi_matrix(to_sparse(adj), 1), x.sparseView()));
  EXPECT_TRUE(n.row(0).isApprox(x.row(1)));
  EXPECT_TRUE(n.row(1).isApprox(x.row(0)));
}

TEST(NeighborAggregate, WeightedAverage) {
  ProximityMatrix prox;
  prox.steps = 1;
  Matrix a = Matrix::Zero(3, 3);
  a(0, 1) = 2;
  a(0, 2) = 1;
  prox.values = a.sparseView();
  Matrix x(3, 2);
  x << 9, 9, 1, 0, 0, 1;
  const Matrix n = Matrix(neighbor_aggregate(prox, x.sparseView()));
  EXPECT_NEAR(n(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(n(0, 1), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(n.row(1).squaredNorm(), 0.0);
  EXPECT_EQ(n.row(2).squaredNorm(), 0.0);
}

TEST(NeighborAggregate, ZeroAttributesGiveZero) {
  std::mt19937_64 rng(2);
  const Matrix adj = random_undirected(10, 0.4, rng);
  const auto n = neighbor_aggregate(ppmi_matrix(to_sparse(adj), 3), SparseMatrix(10, 4));
  EXPECT_EQ(n.nonZeros(), 0);
}

TEST(NeighborAggregate, WeightsSumToOne) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix adj = random_undirected(20, 0.15, rng);
    const auto prox = ppmi_matrix(to_sparse(adj), 3);
    // With all-ones attributes each row equals the sum of applied weights.
    const Matrix n = Matrix(neighbor_aggregate(prox, Matrix::Ones(20, 1).sparseView()));
    for (int i = 0; i < 20; ++i) {
      if (prox.values.row(i).nonZeros() > 0) {
        EXPECT_NEAR(n(i, 0), 1.0, 1e-12);
      } else {
        EXPECT_EQ(n(i, 0), 0.0);
      }
    }
  }
}

TEST(NeighborAggregate, DimensionMismatch) {
  const auto prox = ppmi_matrix(to_sparse(Matrix::Zero(3, 3)), 1);
  EXPECT_THROW(neighbor_aggregate(prox, SparseMatrix(4, 2)), ArgumentError);
}

}  // namespace
}  // namespace acdne
