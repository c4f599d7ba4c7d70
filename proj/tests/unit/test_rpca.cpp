#include <gtest/gtest.h>

#include <cmath>

#include "rnlmf/prox.hpp"
#include "rnlmf/rpca.hpp"
#include "test_support.hpp"

using namespace rnlmf;
using namespace rnlmf::rpca;
using rnlmf::testing::random_matrix;

namespace {

Matrix spiked_ones() {
  Matrix x = Matrix::Ones(20, 20);
  const int spikes[5][2] = {{1, 3}, {4, 17}, {9, 9}, {12, 0}, {18, 6}};
  for (const auto& s : spikes) x(s[0], s[1]) += 10.0;
  return x;
}

double rpca_value(const Matrix& l, const Matrix& s, double lambda) {
  return prox::nuclear_norm(l) + lambda * prox::l1_norm(s);
}

}  // namespace

TEST(Rpca, ZeroInput) {
  const RpcaResult r = rpca_admm(Matrix::Zero(5, 4));
  EXPECT_EQ(r.L.norm(), 0.0);
  EXPECT_EQ(r.S.norm(), 0.0);
  EXPECT_TRUE(r.converged);
}

TEST(Rpca, HugeLambdaKeepsEverythingLowRank) {
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(8, 6, rng);
  RpcaConfig cfg;
  cfg.lambda = 1e6;
  const RpcaResult r = rpca_admm(x, cfg);
  EXPECT_EQ(r.S.norm(), 0.0);
  EXPECT_LT((r.L - x).norm() / x.norm(), 1e-6);
}

TEST(Rpca, ExactRecovery) {
  const Matrix x = spiked_ones();
  RpcaConfig cfg;
  cfg.lambda = 1.0 / std::sqrt(20.0);
  const RpcaResult r = rpca_admm(x, cfg);
  const Matrix ones = Matrix::Ones(20, 20);
  EXPECT_TRUE(r.converged);
  EXPECT_LT((r.L - ones).norm() / ones.norm(), 1e-3);
  EXPECT_LT((x - r.L - r.S).norm() / x.norm(), cfg.tol);
  EXPECT_LT(r.residual, cfg.tol);
}

TEST(Rpca, ObjectiveBeatsTrivialSplits) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 5; ++t) {
    const Matrix x = random_matrix(15, 4, rng) * random_matrix(4, 12, rng) + random_matrix(15, 12, rng, 0.1);
    const double lambda = 1.0 / std::sqrt(12.0);
    RpcaConfig cfg;
    cfg.lambda = lambda;
    const RpcaResult r = rpca_admm(x, cfg);
    const double v = rpca_value(r.L, r.S, lambda);
    EXPECT_LE(v, rpca_value(x, Matrix::Zero(15, 12), lambda) + 1e-6);
    EXPECT_LE(v, rpca_value(Matrix::Zero(15, 12), x, lambda) + 1e-6);
  }
}

TEST(Rpca, NonConvergenceReturnsBestIterate) {
  const Matrix x = spiked_ones();
  RpcaConfig cfg;
  cfg.max_iters = 3;
  const RpcaResult r = rpca_admm(x, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3);
  EXPECT_NEAR(r.residual, (x - r.L - r.S).norm() / x.norm(), 1e-12);
}

TEST(Rpca, ConfigValidation) {
  RpcaConfig cfg;
  cfg.mu_growth = 1.0;
  EXPECT_THROW(rpca_admm(Matrix::Ones(2, 2), cfg), InvalidArgument);
  cfg = {};
  cfg.lambda = -1.0;
  EXPECT_THROW(rpca_admm(Matrix::Ones(2, 2), cfg), InvalidArgument);
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 0) = INFINITY;
  EXPECT_THROW(rpca_admm(bad), InvalidArgument);
}
