#include "rnlmf/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace rnlmf::clustering {

namespace {

constexpr double kIsolatedDegree = 1e-12;

Seed restart_seed(Seed master, int restart) {
  return master + 0x9E3779B97F4A7C15ULL * static_cast<Seed>(restart + 1);
}

struct LloydOutcome {
  Labels labels;
  Matrix centers;
  double inertia = 0.0;
};

// points: n x dim (one point per row).
LloydOutcome lloyd_once(const Matrix& points, int k, Seed seed, int max_iters) {
  const Eigen::Index n = points.rows();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Matrix centers(points.cols(), k);
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.col(0) = points.row(first(rng)).transpose();
  Vector nearest = Vector::Constant(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      nearest(i) = std::min(nearest(i), (points.row(i).transpose() - centers.col(c - 1)).squaredNorm());
    }
    const double total = nearest.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += nearest(i);
        if (acc >= target && nearest(i) > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centers.col(c) = points.row(pick).transpose();
  }

  Labels labels(static_cast<std::size_t>(n), -1);
  double inertia = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double dist = (points.row(i).transpose() - centers.col(c)).squaredNorm();
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      inertia += best_d;
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;

    Matrix sums = Matrix::Zero(points.cols(), k);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = labels[static_cast<std::size_t>(i)];
      sums.col(c) += points.row(i).transpose();
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.col(c) = sums.col(c) / counts[static_cast<std::size_t>(c)];
      } else {
        // Reseed an empty cluster at the point farthest from its center.
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double dist =
              (points.row(i).transpose() - centers.col(labels[static_cast<std::size_t>(i)])).squaredNorm();
          if (dist > far_d) {
            far_d = dist;
            far = i;
          }
        }
        centers.col(c) = points.row(far).transpose();
      }
    }
  }
  return {std::move(labels), std::move(centers), inertia};
}

}  // namespace

void ClusteringConfig::validate(Eigen::Index n) const {
  if (k < 1) throw InvalidArgument("k must be positive");
  if (k > n) throw InvalidArgument("k must not exceed the number of samples");
  if (kappa < 1) throw InvalidArgument("kappa must be positive");
  if (kappa >= n) throw InvalidArgument("kappa must be smaller than the number of samples");
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (kmeans_restarts < 1) throw InvalidArgument("kmeans_restarts must be positive");
}

Matrix affinity_from_codes(const Matrix& codes, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("affinity_from_codes: gamma must be positive");
  const Eigen::Index d = codes.rows();
  Matrix inner = Matrix::Identity(d, d) + (codes * codes.transpose()) / gamma;
  Eigen::LLT<Matrix> llt(inner);
  if (llt.info() != Eigen::Success) throw NumericError("affinity_from_codes: factorization failed");
  Matrix a = (codes.transpose() * llt.solve(codes)) / gamma;
  a = a.cwiseAbs();
  a.diagonal().setZero();
  return a;
}

Matrix sparsify_normalize(const Matrix& affinity, int kappa) {
  if (affinity.rows() != affinity.cols()) throw DimensionError("sparsify_normalize: affinity must be square");
  if (kappa < 1) throw InvalidArgument("sparsify_normalize: kappa must be positive");
  const Eigen::Index n = affinity.rows();
  const auto keep = static_cast<Eigen::Index>(std::min<Eigen::Index>(kappa, n));
  Matrix out = Matrix::Zero(n, n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return affinity(a, j) > affinity(b, j); });
    for (Eigen::Index r = 0; r < keep; ++r) {
      const Eigen::Index i = order[static_cast<std::size_t>(r)];
      out(i, j) = affinity(i, j);
    }
    const double peak = out.col(j).maxCoeff();
    if (peak > 0.0) out.col(j) /= peak;
  }
  return 0.5 * (out + out.transpose());
}

Labels spectral_clustering(const Matrix& affinity, int k, int restarts, Seed seed) {
  if (affinity.rows() != affinity.cols()) throw DimensionError("spectral_clustering: affinity must be square");
  const Eigen::Index n = affinity.rows();
  if (k < 1 || k > n) throw InvalidArgument("spectral_clustering: k must lie in [1, n]");
  if (k == 1) return Labels(static_cast<std::size_t>(n), 0);

  Vector inv_sqrt_degree = affinity.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double deg = inv_sqrt_degree(i) > 0.0 ? inv_sqrt_degree(i) : kIsolatedDegree;
    inv_sqrt_degree(i) = 1.0 / std::sqrt(deg);
  }
  Matrix laplacian = -(inv_sqrt_degree.asDiagonal() * affinity * inv_sqrt_degree.asDiagonal());
  laplacian.diagonal().array() += 1.0;
  laplacian = 0.5 * (laplacian + laplacian.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(laplacian);
  if (eig.info() != Eigen::Success) throw NumericError("spectral_clustering: eigendecomposition failed");
  Matrix embedding = eig.eigenvectors().leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }
  return kmeans(embedding, k, restarts, seed).labels;
}

KMeansResult kmeans(const Matrix& points, int k, int restarts, Seed seed, int max_iters) {
  if (k < 1 || k > points.rows()) throw InvalidArgument("kmeans: k must lie in [1, n]");
  if (restarts < 1) throw InvalidArgument("kmeans: restarts must be positive");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    LloydOutcome run = lloyd_once(points, k, restart_seed(seed, r), max_iters);
    if (run.inertia < best.inertia) {
      best.labels = std::move(run.labels);
      best.centers = std::move(run.centers);
      best.inertia = run.inertia;
    }
  }
  return best;
}

std::vector<int> max_weight_assignment(const Matrix& weights) {
  if (weights.rows() != weights.cols()) throw DimensionError("max_weight_assignment: matrix must be square");
  const int n = static_cast<int>(weights.rows());
  if (n == 0) return {};
  const double top = weights.maxCoeff();
  // Shortest augmenting path (Hungarian) on cost = top - weight, 1-based potentials.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = (top - weights(i0 - 1, j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) assignment[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  return assignment;
}

double clustering_error(const Labels& predicted, const Labels& truth, int k) {
  if (predicted.size() != truth.size()) throw DimensionError("clustering_error: label vectors differ in length");
  if (k < 1) throw InvalidArgument("clustering_error: k must be positive");
  if (predicted.empty()) return 0.0;
  Matrix confusion = Matrix::Zero(k, k);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int p = predicted[i];
    const int t = truth[i];
    if (p < 0 || p >= k || t < 0 || t >= k) {
      throw InvalidArgument("clustering_error: label out of range at position " + std::to_string(i));
    }
    confusion(p, t) += 1.0;
  }
  const std::vector<int> match = max_weight_assignment(confusion);
  double hits = 0.0;
  for (int p = 0; p < k; ++p) hits += confusion(p, match[static_cast<std::size_t>(p)]);
  return 1.0 - hits / static_cast<double>(predicted.size());
}

ClusteringResult cluster_codes(const Matrix& codes, const ClusteringConfig& config) {
  config.validate(codes.cols());
  ClusteringResult result;
  result.affinity = sparsify_normalize(affinity_from_codes(codes, config.gamma), config.kappa);
  result.labels = spectral_clustering(result.affinity, config.k, config.kmeans_restarts, config.seed);
  return result;
}

}  // namespace rnlmf::clustering
