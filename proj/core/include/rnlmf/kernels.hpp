#pragma once

#include "rnlmf/common.hpp"

namespace rnlmf::kernels {

enum class KernelFamily { Rbf, Polynomial };

/// RBF: k(x, y) = exp(-|x - y|^2 / sigma^2).
/// Polynomial: k(x, y) = (x'y + c)^q.
struct KernelSpec {
  KernelFamily family = KernelFamily::Rbf;
  double sigma = 1.0;
  double c = 0.0;
  int q = 1;

  static KernelSpec rbf(double sigma) { return {KernelFamily::Rbf, sigma, 0.0, 1}; }
  static KernelSpec polynomial(double c, int q) { return {KernelFamily::Polynomial, 1.0, c, q}; }

  /// Throws InvalidArgument unless sigma > 0 (RBF) or c >= 0, q >= 0 (polynomial).
  void validate() const;
};

double kernel(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
              const KernelSpec& spec);

/// Entry (i, j) is the kernel between column i of a and column j of b.
/// RBF distances are accumulated coordinate-wise, so k(x, x) is exactly 1.
Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelSpec& spec);

/// Exactly symmetric variant for kernel_matrix(a, a, spec).
Matrix gram_matrix(const Matrix& a, const KernelSpec& spec);

/// Above this many ordered pairs the heuristic switches to seeded sampling.
inline constexpr double kSigmaExactPairLimit = 1e7;
inline constexpr std::size_t kSigmaSamplePairs = 1'000'000;

/// scale * n^-2 * sum over all ordered column pairs (i, j), diagonal included,
/// of |x_i - x_j|. Throws InvalidArgument when the result is not positive.
double sigma_heuristic(const Matrix& xhat, double scale = 1.0, Seed seed = 0);

/// Nuclear norm of phi(D) C, from the eigenvalues of C' K(D, D) C
/// (negative round-off eigenvalues clamped to zero).
double feature_nuclear_norm(const Matrix& dict, const Matrix& codes, const KernelSpec& spec);

/// Squared Frobenius norm of phi(D): the trace of K(D, D).
double feature_frobenius_sq(const Matrix& dict, const KernelSpec& spec);

struct SeriesCheckReport {
  double lhs = 0.0;            ///< Gaussian kernel value
  double truncated_sum = 0.0;  ///< scaled polynomial series up to degree q
  double remainder = 0.0;      ///< lhs - truncated_sum, evaluated as the series tail
  double bound = 0.0;          ///< tail bound, meaningful when bound_applies
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  bool bound_applies = false;  ///< sigma^2 > kappa2 + c
};

/// Expands the Gaussian kernel exp(-|x - y|^2 / (2 sigma^2)) as
///   s * sum_u (x'y + c)^u / (sigma^(2u) u!),  s = exp(-(|x|^2 + |y|^2 + 2c) / (2 sigma^2)),
/// truncates after degree q and reports the remainder against the bound
///   3 kappa1 exp(-c / sigma^2) / q! * ((kappa2 + c) / sigma^2)^q
/// for a single sample x with a single atom y and unit code (kappa1 = 1).
///
/// The identity holds for the 2 sigma^2 width, which is the library RBF with
/// width sqrt(2) * sigma; lhs is reported for that kernel.
SeriesCheckReport series_truncation_check(const Vector& x, const Vector& y, double sigma, double c,
                                          int q);

}  // namespace rnlmf::kernels
