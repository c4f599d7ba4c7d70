#include "rnlmf/kernels.hpp"

#include <cmath>
#include <random>

namespace rnlmf::kernels {

namespace {

double squared_distance(const double* x, const double* y, Eigen::Index m) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double diff = x[k] - y[k];
    acc += diff * diff;
  }
  return acc;
}

double dot(const double* x, const double* y, Eigen::Index m) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) acc += x[k] * y[k];
  return acc;
}

double evaluate(const double* x, const double* y, Eigen::Index m, const KernelSpec& spec) {
  if (spec.family == KernelFamily::Rbf) {
    return std::exp(-squared_distance(x, y, m) / (spec.sigma * spec.sigma));
  }
  return std::pow(dot(x, y, m) + spec.c, spec.q);
}

}  // namespace

void KernelSpec::validate() const {
  if (family == KernelFamily::Rbf) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw InvalidArgument("RBF kernel requires a finite sigma > 0");
    }
  } else {
    if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidArgument("polynomial kernel requires c >= 0");
    if (q < 0) throw InvalidArgument("polynomial kernel requires q >= 0");
  }
}

double kernel(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
              const KernelSpec& spec) {
  spec.validate();
  if (x.size() != y.size()) throw DimensionError("kernel: vectors differ in length");
  return evaluate(x.data(), y.data(), x.size(), spec);
}

Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelSpec& spec) {
  spec.validate();
  if (a.rows() != b.rows()) {
    throw DimensionError("kernel_matrix: inputs have " + std::to_string(a.rows()) + " and " +
                         std::to_string(b.rows()) + " rows");
  }
  const Eigen::Index m = a.rows();
  Matrix out(a.cols(), b.cols());
  // One output column per task; no cross-entry reduction, so the result does not
  // depend on the thread count.
  parallel_for(
      static_cast<std::size_t>(b.cols()),
      [&](std::size_t jj) {
        const auto j = static_cast<Eigen::Index>(jj);
        const double* y = b.col(j).data();
        if (spec.family == KernelFamily::Rbf) {
          for (Eigen::Index i = 0; i < a.cols(); ++i) out(i, j) = squared_distance(a.col(i).data(), y, m);
          out.col(j) = (-out.col(j).array() / (spec.sigma * spec.sigma)).exp();
          return;
        }
        for (Eigen::Index i = 0; i < a.cols(); ++i) out(i, j) = evaluate(a.col(i).data(), y, m, spec);
      },
      64);
  return out;
}

Matrix gram_matrix(const Matrix& a, const KernelSpec& spec) {
  spec.validate();
  const Eigen::Index n = a.cols();
  const Eigen::Index m = a.rows();
  Matrix out(n, n);
  parallel_for(
      static_cast<std::size_t>(n),
      [&](std::size_t jj) {
        const auto j = static_cast<Eigen::Index>(jj);
        if (spec.family == KernelFamily::Rbf) {
          for (Eigen::Index i = 0; i <= j; ++i) out(i, j) = squared_distance(a.col(i).data(), a.col(j).data(), m);
          out.col(j).head(j + 1) = (-out.col(j).head(j + 1).array() / (spec.sigma * spec.sigma)).exp();
          return;
        }
        for (Eigen::Index i = 0; i <= j; ++i) out(i, j) = evaluate(a.col(i).data(), a.col(j).data(), m, spec);
      },
      64);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) out(i, j) = out(j, i);
  return out;
}

double sigma_heuristic(const Matrix& xhat, double scale, Seed seed) {
  if (xhat.cols() == 0 || xhat.rows() == 0) throw InvalidArgument("sigma_heuristic: empty matrix");
  if (!(scale > 0.0)) throw InvalidArgument("sigma_heuristic: scale must be positive");
  const Eigen::Index n = xhat.cols();
  const Eigen::Index m = xhat.rows();
  const double pairs = static_cast<double>(n) * static_cast<double>(n);

  double mean_distance = 0.0;
  if (pairs <= kSigmaExactPairLimit) {
    // Per-row partial sums reduced in a fixed order keep the result thread-count independent.
    std::vector<double> row_sums(static_cast<std::size_t>(n), 0.0);
    parallel_for(
        static_cast<std::size_t>(n),
        [&](std::size_t ii) {
          const auto i = static_cast<Eigen::Index>(ii);
          double acc = 0.0;
          for (Eigen::Index j = i + 1; j < n; ++j) {
            acc += std::sqrt(squared_distance(xhat.col(i).data(), xhat.col(j).data(), m));
          }
          row_sums[ii] = acc;
        },
        16);
    double total = 0.0;
    for (double s : row_sums) total += s;
    mean_distance = 2.0 * total / pairs;
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    double total = 0.0;
    for (std::size_t s = 0; s < kSigmaSamplePairs; ++s) {
      const Eigen::Index i = pick(rng);
      const Eigen::Index j = pick(rng);
      total += std::sqrt(squared_distance(xhat.col(i).data(), xhat.col(j).data(), m));
    }
    mean_distance = total / static_cast<double>(kSigmaSamplePairs);
  }

  const double sigma = scale * mean_distance;
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("sigma_heuristic: columns are identical, sigma would be zero");
  }
  return sigma;
}

double feature_nuclear_norm(const Matrix& dict, const Matrix& codes, const KernelSpec& spec) {
  if (dict.cols() != codes.rows()) {
    throw DimensionError("feature_nuclear_norm: dictionary has " + std::to_string(dict.cols()) +
                         " atoms but codes have " + std::to_string(codes.rows()) + " rows");
  }
  const Matrix gram = gram_matrix(dict, spec);
  Matrix inner;
  if (codes.cols() <= dict.cols()) {
    inner = codes.transpose() * gram * codes;
  } else {
    // Same nonzero spectrum as C' K C, but d x d: with K = R'R, use (RC)(RC)'.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Matrix factor = root.asDiagonal() * eig.eigenvectors().transpose() * codes;
    inner = factor * factor.transpose();
  }
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(inner, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("feature_nuclear_norm: eigensolver failed");
  return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

double feature_frobenius_sq(const Matrix& dict, const KernelSpec& spec) {
  return gram_matrix(dict, spec).trace();
}

SeriesCheckReport series_truncation_check(const Vector& x, const Vector& y, double sigma, double c,
                                          int q) {
  if (x.size() != y.size()) throw DimensionError("series_truncation_check: vectors differ in length");
  if (!(sigma > 0.0)) throw InvalidArgument("series_truncation_check: sigma must be positive");
  if (c < 0.0) throw InvalidArgument("series_truncation_check: c must be nonnegative");
  if (q < 0) throw InvalidArgument("series_truncation_check: q must be nonnegative");

  const double s2 = sigma * sigma;
  const double xx = x.squaredNorm();
  const double yy = y.squaredNorm();
  const double ratio = (x.dot(y) + c) / s2;
  const double scale = std::exp(-(xx + yy + 2.0 * c) / (2.0 * s2));

  SeriesCheckReport report;
  report.lhs = std::exp(-(x - y).squaredNorm() / (2.0 * s2));
  report.kappa1 = 1.0;
  report.kappa2 = std::max(xx, yy);
  report.bound_applies = s2 > report.kappa2 + c;

  double term = 1.0;
  double head = 1.0;
  for (int u = 1; u <= q; ++u) {
    term *= ratio / u;
    head += term;
  }
  report.truncated_sum = scale * head;

  // Summing the tail directly keeps tiny remainders above the cancellation floor
  // of lhs - truncated_sum.
  double tail = 0.0;
  for (long u = q + 1; u < q + 100000L; ++u) {
    term *= ratio / static_cast<double>(u);
    tail += term;
    if (term == 0.0 || (static_cast<double>(u) > std::abs(ratio) &&
                        std::abs(term) <= 1e-18 * std::abs(tail))) {
      break;
    }
  }
  report.remainder = scale * tail;

  double bound = 3.0 * report.kappa1 * std::exp(-c / s2);
  const double growth = (report.kappa2 + c) / s2;
  for (int u = 1; u <= q; ++u) bound *= growth / u;
  report.bound = bound;
  return report;
}

}  // namespace rnlmf::kernels
