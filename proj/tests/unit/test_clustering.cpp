#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "rnlmf/clustering.hpp"
#include "test_support.hpp"

using namespace rnlmf;
using namespace rnlmf::clustering;
using rnlmf::testing::random_matrix;

namespace {

// labels of connected components of the graph A > 0, numbered by first vertex
Labels components(const Matrix& a) {
  const auto n = a.rows();
  Labels label(static_cast<std::size_t>(n), -1);
  int next = 0;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<Eigen::Index> stack{s};
    label[static_cast<std::size_t>(s)] = next;
    while (!stack.empty()) {
      const Eigen::Index v = stack.back();
      stack.pop_back();
      for (Eigen::Index w = 0; w < n; ++w) {
        if (a(v, w) > 0.0 && label[static_cast<std::size_t>(w)] < 0) {
          label[static_cast<std::size_t>(w)] = next;
          stack.push_back(w);
        }
      }
    }
    ++next;
  }
  return label;
}

bool same_partition(const Labels& a, const Labels& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

}  // namespace

TEST(Affinity, IdentityCodes) {
  EXPECT_LT(affinity_from_codes(Matrix::Identity(3, 3), 1.0).norm(), 1e-15);
  EXPECT_EQ(affinity_from_codes(Matrix::Zero(4, 6), 0.5).norm(), 0.0);
}

TEST(Affinity, WoodburyMatchesDirectInverse) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 5; ++t) {
    const Matrix c = random_matrix(4, 10, rng);
    const double gamma = 0.01 * (t + 1);
    const Matrix ctc = c.transpose() * c;
    Matrix direct = ((ctc + gamma * Matrix::Identity(10, 10)).inverse() * ctc).cwiseAbs();
    direct.diagonal().setZero();
    const Matrix got = affinity_from_codes(c, gamma);
    EXPECT_LT((got - direct).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(got.diagonal().norm(), 0.0);
    EXPECT_GE(got.minCoeff(), 0.0);
  }
}

TEST(Affinity, InvariantToOrthogonalRotation) {
  std::mt19937_64 rng(2);
  const Matrix c = random_matrix(5, 12, rng);
  Eigen::HouseholderQR<Matrix> qr(random_matrix(5, 5, rng));
  const Matrix q = qr.householderQ();
  EXPECT_LT((affinity_from_codes(q * c, 0.05) - affinity_from_codes(c, 0.05)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Sparsify, HandExample) {
  Matrix a = Matrix::Zero(3, 3);
  a.col(0) << 0.9, 0.3, 0.6;
  // only the first column carries weight; symmetrization halves the mirrored entries
  const Matrix out = sparsify_normalize(a, 2);
  EXPECT_NEAR(out(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(out(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(out(2, 0), (0.6 / 0.9) / 2.0, 1e-15);
  EXPECT_NEAR(out(0, 2), (0.6 / 0.9) / 2.0, 1e-15);
}

TEST(Sparsify, ColumnBeforeSymmetrization) {
  Matrix a = Matrix::Zero(3, 3);
  a.col(0) << 0.9, 0.3, 0.6;
  a.row(0) << 0.9, 0.3, 0.6;
  // a symmetric input keeps column 0 = [1, 0, 0.667] up to the mirrored part
  const Matrix out = sparsify_normalize(a, 2);
  EXPECT_NEAR(out(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(out(2, 0), (0.6 / 0.9 + 1.0) / 2.0, 1e-15);
}

TEST(Sparsify, LargeKappaOnlyNormalizes) {
  std::mt19937_64 rng(3);
  Matrix a = random_matrix(6, 6, rng).cwiseAbs();
  a.diagonal().setZero();
  Matrix want = a;
  for (int j = 0; j < 6; ++j) want.col(j) /= want.col(j).maxCoeff();
  want = 0.5 * (want + want.transpose()).eval();
  EXPECT_LT((sparsify_normalize(a, 5) - want).norm(), 1e-15);
}

TEST(Sparsify, PropertiesAndTies) {
  std::mt19937_64 rng(4);
  Matrix a = random_matrix(20, 20, rng).cwiseAbs();
  const Matrix out = sparsify_normalize(a, 4);
  EXPECT_EQ(out, out.transpose());
  EXPECT_GE(out.minCoeff(), 0.0);
  EXPECT_LE(out.maxCoeff(), 1.0);

  Matrix tie = Matrix::Zero(4, 4);
  tie.col(0) << 0.0, 0.5, 0.5, 0.5;
  const Matrix t1 = sparsify_normalize(tie, 2);
  const Matrix t2 = sparsify_normalize(tie, 2);
  EXPECT_EQ(t1, t2);
  EXPECT_GT(t1(1, 0), 0.0);
  EXPECT_GT(t1(2, 0), 0.0);
  EXPECT_EQ(t1(3, 0), 0.0);
  EXPECT_EQ(sparsify_normalize(Matrix::Zero(3, 3), 1).norm(), 0.0);
}

TEST(Spectral, TwoBlocks) {
  Matrix a = Matrix::Zero(4, 4);
  a.block(0, 0, 2, 2).setOnes();
  a.block(2, 2, 2, 2).setOnes();
  a.diagonal().setZero();
  const Labels labels = spectral_clustering(a, 2, 5, 0);
  EXPECT_EQ(labels[0], labels[1]);
  EXPECT_EQ(labels[2], labels[3]);
  EXPECT_NE(labels[0], labels[2]);
}

TEST(Spectral, SingleCluster) {
  std::mt19937_64 rng(5);
  Matrix a = random_matrix(7, 7, rng).cwiseAbs();
  a = 0.5 * (a + a.transpose()).eval();
  const Labels labels = spectral_clustering(a, 1, 3, 0);
  EXPECT_EQ(labels, Labels(7, 0));
}

TEST(Spectral, DisjointComponentsRecovered) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const std::vector<int> sizes = {5 + trial, 8, 4 + 2 * trial};
    const int n = std::accumulate(sizes.begin(), sizes.end(), 0);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix a = Matrix::Zero(n, n);
    int offset = 0;
    for (int s : sizes) {
      // random connected block: a path plus random chords
      for (int i = 0; i < s; ++i)
        for (int j = i + 1; j < s; ++j)
          if (j == i + 1 || w(rng) > 0.6) {
            const double v = w(rng);
            a(perm[static_cast<std::size_t>(offset + i)], perm[static_cast<std::size_t>(offset + j)]) = v;
            a(perm[static_cast<std::size_t>(offset + j)], perm[static_cast<std::size_t>(offset + i)]) = v;
          }
      offset += s;
    }
    const Labels truth = components(a);
    ASSERT_EQ(*std::max_element(truth.begin(), truth.end()), 2);
    const Labels got = spectral_clustering(a, 3, 10, static_cast<Seed>(trial));
    EXPECT_TRUE(same_partition(got, truth)) << "trial " << trial;
  }
}

TEST(Spectral, IsolatedVertexDoesNotBreak) {
  Matrix a = Matrix::Zero(5, 5);
  a(0, 1) = a(1, 0) = 1.0;
  a(2, 3) = a(3, 2) = 1.0;
  const Labels labels = spectral_clustering(a, 3, 10, 1);
  EXPECT_EQ(labels.size(), 5u);
  for (int l : labels) EXPECT_TRUE(l >= 0 && l < 3);
}

TEST(KMeans, SeparatedBlobs) {
  Matrix pts(9, 2);
  pts << 0, 0, 0.1, 0, 0, 0.1, 5, 5, 5.1, 5, 5, 5.1, -5, 5, -5.1, 5, -5, 5.1;
  const KMeansResult r = kmeans(pts, 3, 5, 7);
  EXPECT_TRUE(same_partition(r.labels, {0, 0, 0, 1, 1, 1, 2, 2, 2}));
  EXPECT_EQ(r.centers.rows(), 2);
  EXPECT_EQ(r.centers.cols(), 3);
  EXPECT_NEAR(r.inertia, 3 * (2 * (0.1 * 0.1) * (2.0 / 3.0)), 1e-12);
  const KMeansResult again = kmeans(pts, 3, 5, 7);
  EXPECT_EQ(again.labels, r.labels);
}

TEST(ClusteringError, Examples) {
  EXPECT_EQ(clustering_error({0, 1, 1, 2}, {0, 1, 1, 2}, 3), 0.0);
  EXPECT_EQ(clustering_error({1, 1, 0, 0}, {0, 0, 1, 1}, 2), 0.0);
  EXPECT_DOUBLE_EQ(clustering_error({0, 1, 0, 1}, {0, 0, 1, 1}, 2), 0.5);
  EXPECT_THROW(clustering_error({0, 3}, {0, 1}, 2), InvalidArgument);
  EXPECT_THROW(clustering_error({0}, {0, 1}, 2), DimensionError);
}

TEST(ClusteringError, PermutationInvariant) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> lab(0, 3);
  for (int t = 0; t < 20; ++t) {
    Labels pred(40), truth(40);
    for (auto& v : pred) v = lab(rng);
    for (auto& v : truth) v = lab(rng);
    std::vector<int> pi = {0, 1, 2, 3};
    std::shuffle(pi.begin(), pi.end(), rng);
    Labels permuted = pred;
    for (auto& v : permuted) v = pi[static_cast<std::size_t>(v)];
    EXPECT_DOUBLE_EQ(clustering_error(permuted, truth, 4), clustering_error(pred, truth, 4));
  }
}

TEST(Assignment, MatchesBruteForce) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    const int k = 1 + t % 5;
    const Matrix w = random_matrix(k, k, rng);
    const std::vector<int> got = max_weight_assignment(w);
    double got_value = 0.0;
    for (int i = 0; i < k; ++i) got_value += w(i, got[static_cast<std::size_t>(i)]);
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1e300;
    do {
      double v = 0.0;
      for (int i = 0; i < k; ++i) v += w(i, perm[static_cast<std::size_t>(i)]);
      best = std::max(best, v);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_NEAR(got_value, best, 1e-12);
    EXPECT_EQ(std::set<int>(got.begin(), got.end()).size(), static_cast<std::size_t>(k));
  }
}

TEST(ClusterCodes, UnionOfSubspaces) {
  // codes drawn from three independent 2-D subspaces of R^8
  std::mt19937_64 rng(10);
  Matrix codes(8, 60);
  Labels truth;
  for (int s = 0; s < 3; ++s) {
    const Matrix basis = random_matrix(8, 2, rng);
    for (int i = 0; i < 20; ++i) {
      codes.col(s * 20 + i) = basis * random_matrix(2, 1, rng);
      truth.push_back(s);
    }
  }
  ClusteringConfig cfg;
  cfg.k = 3;
  cfg.kappa = 5;
  const ClusteringResult res = cluster_codes(codes, cfg);
  EXPECT_EQ(clustering_error(res.labels, truth, 3), 0.0);
  EXPECT_EQ(res.affinity, res.affinity.transpose());
  EXPECT_EQ(res.affinity.diagonal().norm(), 0.0);
  EXPECT_GE(res.affinity.minCoeff(), 0.0);
}

TEST(ClusterCodes, ConfigValidation) {
  ClusteringConfig cfg;
  cfg.k = 2;
  cfg.kappa = 10;
  EXPECT_THROW(cfg.validate(10), InvalidArgument);
  cfg.kappa = 3;
  cfg.k = 11;
  EXPECT_THROW(cfg.validate(10), InvalidArgument);
  cfg.k = 2;
  cfg.gamma = 0.0;
  EXPECT_THROW(cfg.validate(10), InvalidArgument);
}
