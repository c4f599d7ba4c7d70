#pragma once

#include <optional>

#include "rnlmf/common.hpp"

namespace rnlmf::prox {

/// Elementwise shrinkage sign(v) * max(|v| - u, 0). Exactly zero when |v| <= u.
double soft_threshold(double v, double u);
Matrix soft_threshold(const Matrix& v, double u);

/// Singular value thresholding: U * shrink(S, u) * V' from a full SVD.
Matrix svt(const Matrix& m, double u);

/// Shrinks each column's Euclidean norm by u, zeroing columns with norm <= u.
Matrix column_soft_threshold(const Matrix& m, double u);

double l1_norm(const Matrix& m);
double l21_norm(const Matrix& m);
double nuclear_norm(const Matrix& m);

/// Cholesky factor of K + lambda I, reusable across right-hand sides.
class RidgeFactor {
 public:
  RidgeFactor(const Matrix& k, double lambda);
  [[nodiscard]] Matrix solve(const Matrix& b) const;
  [[nodiscard]] Eigen::Index size() const { return llt_.rows(); }

 private:
  Eigen::LLT<Matrix> llt_;
};

/// Solves (K + lambda I) C = B. K symmetric PSD, lambda > 0.
Matrix ridge_solve(const Matrix& k, const Matrix& b, double lambda);

/// Largest eigenvalue magnitude of a symmetric matrix by power iteration from a
/// seeded random start.
double spectral_norm_power(const Matrix& sym, int iterations = 50, Seed seed = 0);

}  // namespace rnlmf::prox
