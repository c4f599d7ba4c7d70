#pragma once

#include "rnlmf/common.hpp"

namespace rnlmf::clustering {

struct ClusteringConfig {
  int k = 2;
  int kappa = 10;  ///< entries kept per affinity column
  double gamma = 0.01;
  int kmeans_restarts = 20;
  Seed seed = 0;

  void validate(Eigen::Index n) const;
};

struct ClusteringResult {
  Labels labels;
  Matrix affinity;  ///< symmetric, nonnegative, zero diagonal
};

/// |(C'C + gamma I)^-1 C'C| with a zero diagonal, computed through the d x d
/// Woodbury form |gamma^-1 C' (I + gamma^-1 C C')^-1 C|.
Matrix affinity_from_codes(const Matrix& codes, double gamma);

/// Keeps the kappa largest entries per column (ties: lower row index first),
/// scales each nonzero column by its maximum and symmetrizes.
Matrix sparsify_normalize(const Matrix& affinity, int kappa);

/// Normalized-Laplacian spectral embedding, unit-norm rows, restarted k-means.
Labels spectral_clustering(const Matrix& affinity, int k, int restarts, Seed seed);

struct KMeansResult {
  Labels labels;
  Matrix centers;  ///< dim x k
  double inertia = 0.0;
};

/// k-means++ seeding and Lloyd iterations on the rows of points; best of
/// restarts by inertia (ties go to the earlier restart).
KMeansResult kmeans(const Matrix& points, int k, int restarts, Seed seed, int max_iters = 100);

/// Fraction misassigned under the best one-to-one label matching.
double clustering_error(const Labels& predicted, const Labels& truth, int k);

/// Maximum-weight perfect matching on a square weight matrix; returns
/// assignment[row] = column.
std::vector<int> max_weight_assignment(const Matrix& weights);

/// Full pipeline on codes from a fitted model.
ClusteringResult cluster_codes(const Matrix& codes, const ClusteringConfig& config);

}  // namespace rnlmf::clustering
