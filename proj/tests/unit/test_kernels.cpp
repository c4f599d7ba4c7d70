#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>

#include "rnlmf/kernels.hpp"
#include "rnlmf/prox.hpp"
#include "test_support.hpp"

using namespace rnlmf;
using namespace rnlmf::kernels;
using rnlmf::testing::random_matrix;

namespace {

double sigma_oracle(const Matrix& x, double scale) {
  const auto n = x.cols();
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double sq = 0.0;
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double diff = x(r, i) - x(r, j);
        sq += diff * diff;
      }
      total += std::sqrt(sq);
    }
  }
  return scale * static_cast<double>(total / (static_cast<long double>(n) * static_cast<long double>(n)));
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// all exponent vectors of length vars with total degree q
void multi_indices(int vars, int q, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == vars - 1) {
    cur.push_back(q);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int a = q; a >= 0; --a) {
    cur.push_back(a);
    multi_indices(vars, q - a, cur, out);
    cur.pop_back();
  }
}

// explicit feature map of (x'y + c)^q: x augmented with sqrt(c), multinomial weights
Matrix explicit_poly_features(const Matrix& x, double c, int q) {
  const int vars = static_cast<int>(x.rows()) + 1;
  std::vector<std::vector<int>> idx;
  std::vector<int> cur;
  multi_indices(vars, q, cur, idx);
  Matrix phi(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Vector aug(vars);
    aug.head(vars - 1) = x.col(j);
    aug(vars - 1) = std::sqrt(c);
    for (std::size_t f = 0; f < idx.size(); ++f) {
      double coef = factorial(q);
      double mono = 1.0;
      for (int v = 0; v < vars; ++v) {
        coef /= factorial(idx[f][static_cast<std::size_t>(v)]);
        mono *= std::pow(aug(v), idx[f][static_cast<std::size_t>(v)]);
      }
      phi(static_cast<Eigen::Index>(f), j) = std::sqrt(coef) * mono;
    }
  }
  return phi;
}

}  // namespace

TEST(KernelMatrix, RbfSelfSimilarityIsOne) {
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(5, 1, rng, 10.0);
  const Matrix k = kernel_matrix(x, x, KernelSpec::rbf(0.3));
  ASSERT_EQ(k.rows(), 1);
  EXPECT_EQ(k(0, 0), 1.0);
}

TEST(KernelMatrix, RbfAtDistanceSigma) {
  Matrix a(2, 1), b(2, 1);
  a << 0.0, 0.0;
  b << 3.0, 4.0;
  const Matrix k = kernel_matrix(a, b, KernelSpec::rbf(5.0));
  EXPECT_NEAR(k(0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(k(0, 0), 0.3678794, 1e-7);
}

TEST(KernelMatrix, PolynomialExample) {
  Matrix a(2, 1), b(2, 1);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  EXPECT_DOUBLE_EQ(kernel_matrix(a, b, KernelSpec::polynomial(1.0, 2))(0, 0), 1.0);
}

TEST(KernelMatrix, EntriesMatchPointwiseKernel) {
  std::mt19937_64 rng(2);
  const Matrix a = random_matrix(4, 6, rng);
  const Matrix b = random_matrix(4, 3, rng);
  for (const KernelSpec spec : {KernelSpec::rbf(1.7), KernelSpec::polynomial(0.5, 3)}) {
    const Matrix k = kernel_matrix(a, b, spec);
    ASSERT_EQ(k.rows(), 6);
    ASSERT_EQ(k.cols(), 3);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(k(i, j), kernel(a.col(i), b.col(j), spec), 1e-14);
  }
}

TEST(KernelMatrix, SymmetricForSameInput) {
  std::mt19937_64 rng(3);
  const Matrix a = random_matrix(7, 40, rng);
  for (const KernelSpec spec : {KernelSpec::rbf(2.0), KernelSpec::polynomial(1.0, 2)}) {
    const Matrix k = kernel_matrix(a, a, spec);
    EXPECT_LE((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    const Matrix g = gram_matrix(a, spec);
    EXPECT_EQ((g - g.transpose()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(KernelMatrix, RbfGramIsPsd) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = random_matrix(6, 50, rng);
    const Matrix g = gram_matrix(a, KernelSpec::rbf(0.5 + trial));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-8);
  }
}

TEST(KernelMatrix, Errors) {
  const Matrix a = Matrix::Ones(3, 2);
  const Matrix b = Matrix::Ones(4, 2);
  EXPECT_THROW(kernel_matrix(a, b, KernelSpec::rbf(1.0)), DimensionError);
  EXPECT_THROW(kernel_matrix(a, a, KernelSpec::rbf(0.0)), InvalidArgument);
  EXPECT_THROW(kernel_matrix(a, a, KernelSpec::rbf(-1.0)), InvalidArgument);
  EXPECT_THROW(kernel_matrix(a, a, KernelSpec::polynomial(-1.0, 2)), InvalidArgument);
  EXPECT_THROW(kernel_matrix(a, a, KernelSpec::polynomial(1.0, -1)), InvalidArgument);
}

TEST(KernelMatrix, IndependentOfThreadCount) {
  std::mt19937_64 rng(5);
  const Matrix a = random_matrix(10, 120, rng);
  const Matrix b = random_matrix(10, 90, rng);
  const char* old = std::getenv("RNLMF_THREADS");
  const std::string saved = old ? old : "";
  setenv("RNLMF_THREADS", "1", 1);
  const Matrix one = kernel_matrix(a, b, KernelSpec::rbf(3.0));
  setenv("RNLMF_THREADS", "4", 1);
  const Matrix four = kernel_matrix(a, b, KernelSpec::rbf(3.0));
  if (old) setenv("RNLMF_THREADS", saved.c_str(), 1); else unsetenv("RNLMF_THREADS");
  EXPECT_EQ((one - four).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SigmaHeuristic, TwoColumns) {
  Matrix x(1, 2);
  x << 0.0, 2.0;
  EXPECT_DOUBLE_EQ(sigma_heuristic(x, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(sigma_heuristic(x, 3.0), 3.0);
}

TEST(SigmaHeuristic, IdenticalColumnsThrow) {
  const Matrix x = Matrix::Constant(3, 4, 2.5);
  EXPECT_THROW(sigma_heuristic(x, 1.0), InvalidArgument);
  EXPECT_THROW(sigma_heuristic(Matrix(3, 0), 1.0), InvalidArgument);
}

TEST(SigmaHeuristic, MatchesDoubleLoop) {
  std::mt19937_64 rng(6);
  const Matrix x = random_matrix(30, 100, rng);
  const double got = sigma_heuristic(x, 1.0);
  const double want = sigma_oracle(x, 1.0);
  EXPECT_LT(std::abs(got - want) / want, 1e-12);
}

TEST(SigmaHeuristic, SampledBranchIsCloseAndSeeded) {
  std::mt19937_64 rng(7);
  const Matrix x = random_matrix(3, 3200, rng);  // n^2 > 1e7
  const double a = sigma_heuristic(x, 1.0, 11);
  const double b = sigma_heuristic(x, 1.0, 11);
  EXPECT_EQ(a, b);
  Matrix sub = x.leftCols(400);
  const double exact = sigma_oracle(sub, 1.0);
  EXPECT_LT(std::abs(a - exact) / exact, 0.05);
}

TEST(FeatureNuclearNorm, UnitFeatureTimesTwo) {
  Matrix d(3, 1);
  d << 0.3, -1.0, 2.0;
  Matrix c(1, 1);
  c << 2.0;
  EXPECT_NEAR(feature_nuclear_norm(d, c, KernelSpec::rbf(1.3)), 2.0, 1e-12);
}

TEST(FeatureNuclearNorm, ZeroCodes) {
  std::mt19937_64 rng(8);
  const Matrix d = random_matrix(4, 3, rng);
  EXPECT_EQ(feature_nuclear_norm(d, Matrix::Zero(3, 5), KernelSpec::rbf(1.0)), 0.0);
}

TEST(FeatureNuclearNorm, MatchesExplicitPolynomialFeatures) {
  std::mt19937_64 rng(9);
  for (int m = 1; m <= 5; ++m) {
    for (int q = 1; q <= 3; ++q) {
      for (int n : {2, 7}) {  // both eigen routes
        const Matrix d = random_matrix(m, 4, rng);
        const Matrix c = random_matrix(4, n, rng);
        const double offset = 0.7;
        const Matrix phi = explicit_poly_features(d, offset, q);
        const Matrix gram_check = phi.transpose() * phi;
        ASSERT_LT((gram_check - kernel_matrix(d, d, KernelSpec::polynomial(offset, q))).norm(),
                  1e-9 * (1.0 + gram_check.norm()));
        const double want = prox::nuclear_norm(phi * c);
        const double got = feature_nuclear_norm(d, c, KernelSpec::polynomial(offset, q));
        EXPECT_NEAR(got, want, 1e-7 * (1.0 + want)) << "m=" << m << " q=" << q << " n=" << n;
      }
    }
  }
}

TEST(FeatureNuclearNorm, DimensionMismatch) {
  EXPECT_THROW(feature_nuclear_norm(Matrix::Ones(2, 3), Matrix::Ones(4, 2), KernelSpec::rbf(1.0)), DimensionError);
}

TEST(FeatureNuclearNorm, TraceBoundAndAmGm) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> unif(0.01, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + trial % 4;
    const int d = 1 + trial % 5;
    const int n = 1 + trial % 9;
    const Matrix dict = random_matrix(m, d, rng);
    const Matrix codes = random_matrix(d, n, rng);
    const KernelSpec spec = KernelSpec::rbf(unif(rng));
    const double nuc = feature_nuclear_norm(dict, codes, spec);
    EXPECT_GE(codes.norm(), nuc / std::sqrt(static_cast<double>(d)) - 1e-9);
    const double lc = unif(rng);
    const double ld = unif(rng);
    const double lhs = 0.5 * ld * feature_frobenius_sq(dict, spec) + 0.5 * lc * codes.squaredNorm();
    EXPECT_GE(lhs, std::sqrt(lc * ld) * nuc - 1e-9);
  }
}

TEST(FeatureFrobenius, RbfIsAtomCount) {
  std::mt19937_64 rng(11);
  EXPECT_DOUBLE_EQ(feature_frobenius_sq(random_matrix(3, 7, rng), KernelSpec::rbf(0.2)), 7.0);
}

TEST(SeriesCheck, ZeroVectors) {
  Vector z = Vector::Zero(2);
  const SeriesCheckReport r = series_truncation_check(z, z, 1.5, 0.0, 0);
  EXPECT_DOUBLE_EQ(r.lhs, 1.0);
  EXPECT_DOUBLE_EQ(r.truncated_sum, 1.0);
  EXPECT_DOUBLE_EQ(r.remainder, 0.0);
}

TEST(SeriesCheck, HighOrderConverges) {
  Vector x(1);
  x << 1.0;
  const SeriesCheckReport r = series_truncation_check(x, x, 2.0, 0.0, 30);
  EXPECT_LT(std::abs(r.remainder), 1e-12);
  EXPECT_NEAR(r.truncated_sum, 1.0, 1e-12);
}

TEST(SeriesCheck, BoundHoldsOnExample) {
  Vector x(1), y(1);
  x << 1.0;
  y << -1.0;
  const SeriesCheckReport r = series_truncation_check(x, y, 3.0, 0.5, 8);
  ASSERT_TRUE(r.bound_applies);
  EXPECT_LE(std::abs(r.remainder), r.bound);
  EXPECT_DOUBLE_EQ(r.kappa1, 1.0);
  EXPECT_DOUBLE_EQ(r.kappa2, 1.0);
  EXPECT_NEAR(r.lhs, r.truncated_sum + r.remainder, 1e-14);
}

TEST(SeriesCheck, LhsIsRbfAtScaledWidth) {
  Vector x(2), y(2);
  x << 0.3, -0.2;
  y << -0.5, 0.4;
  const double sigma = 1.1;
  const SeriesCheckReport r = series_truncation_check(x, y, sigma, 0.2, 5);
  EXPECT_NEAR(r.lhs, kernel(x, y, KernelSpec::rbf(std::sqrt(2.0) * sigma)), 1e-15);
}

TEST(SeriesCheck, RemainderShrinksWithOrder) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  std::uniform_real_distribution<double> offs(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector x(1), y(1);
    x << unif(rng);
    y << unif(rng);
    const double c = offs(rng);
    const double kappa2 = std::max(x.squaredNorm(), y.squaredNorm());
    const double sigma = std::sqrt(kappa2 + c) * (1.05 + offs(rng));
    double previous = std::numeric_limits<double>::infinity();
    for (int q = 0; q <= 20; ++q) {
      const SeriesCheckReport r = series_truncation_check(x, y, sigma, c, q);
      ASSERT_TRUE(r.bound_applies);
      EXPECT_LE(std::abs(r.remainder), r.bound * (1.0 + 1e-12) + 1e-300);
      if (std::abs(r.remainder) > 1e-15) {
        EXPECT_LE(std::abs(r.remainder), previous);
      }
      previous = std::abs(r.remainder);
    }
  }
}
