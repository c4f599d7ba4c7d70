#pragma once

#include "rnlmf/common.hpp"

namespace rnlmf::datagen {

/// Union of random polynomial manifolds: each manifold maps z ~ U(-1, 1)^r
/// through all monomials of degree 1..p and a standard normal m x D_feat matrix.
struct SynthSpec {
  int k = 3;
  int r = 3;
  int p = 3;
  int m = 30;
  int samples_per_manifold = 300;
  bool shuffle = false;
  Seed seed = 0;

  void validate() const;
  /// C(r + p, p) - 1.
  [[nodiscard]] int feature_dim() const;
};

enum class NoiseKind { SparseGaussian, ColumnGaussian, SaltPepper, BlockOcclusion };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::SparseGaussian;
  double rho = 0.3;            ///< entry fraction (sparse) or column fraction (others)
  double sigma_e_ratio = 1.0;  ///< noise std over data std, Gaussian kinds
  double density = 0.25;       ///< salt-and-pepper entries per corrupted column
  int image_h = 0;
  int image_w = 0;
  double block_scale = 0.25;
  Seed seed = 0;

  void validate(Eigen::Index m) const;
};

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct Dataset {
  Matrix X;
  Labels labels;
};

struct Corrupted {
  Matrix Xhat;
  Matrix E;  ///< Xhat - X
  Mask mask;  ///< touched entries
};

/// All monomials of total degree 1..p in graded lexicographic order.
Vector poly_features(const Vector& z, int p);

Dataset gen_union_polynomial(const SynthSpec& spec);

/// Population standard deviation of all entries.
double entry_std(const Matrix& x);

/// round(rho m n) entries chosen without replacement receive N(0, (ratio * std(X))^2).
Corrupted inject_sparse_gaussian(const Matrix& x, double rho, double sigma_e_ratio, Seed seed);

/// round(rho n) columns chosen without replacement receive N(0, (ratio * std(X))^2) everywhere.
Corrupted inject_columnwise(const Matrix& x, double rho, Seed seed, double sigma_e_ratio = 1.0);

/// On round(fraction n) columns, round(density m) entries become min(X) or max(X).
Corrupted inject_salt_pepper(const Matrix& x, double density, double fraction_of_columns, Seed seed);

/// Treats columns as column-major image_h x image_w images and paints one
/// round(scale h) x round(scale w) block at a random position with max(X).
Corrupted inject_block_occlusion(const Matrix& x, int image_h, int image_w, double fraction_of_columns,
                                 double block_scale, Seed seed);

/// Dispatches on spec.kind.
Corrupted inject(const Matrix& x, const NoiseSpec& spec);

/// |X - est|_F / |X|_F.
double rmse(const Matrix& truth, const Matrix& estimate);
/// |X - est|_1 / |X|_1, entrywise.
double mae(const Matrix& truth, const Matrix& estimate);

/// Round half away from zero of fraction * total.
Eigen::Index fraction_count(double fraction, Eigen::Index total);

}  // namespace rnlmf::datagen
