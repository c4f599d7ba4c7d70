#include "rnlmf/datagen.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace rnlmf::datagen {

namespace {

// Exponent tuples of total degree `degree` over `vars` variables, lexicographically
// descending (z1^t first).
void exponents_of_degree(int vars, int degree, std::vector<int>& current,
                         std::vector<std::vector<int>>& out) {
  const int pos = static_cast<int>(current.size());
  if (pos == vars - 1) {
    current.push_back(degree);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int e = degree; e >= 0; --e) {
    current.push_back(e);
    exponents_of_degree(vars, degree - e, current, out);
    current.pop_back();
  }
}

/// First `count` entries of a uniformly shuffled [0, total).
std::vector<Eigen::Index> sample_without_replacement(Eigen::Index total, Eigen::Index count,
                                                     std::mt19937_64& rng) {
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(total));
  std::iota(pool.begin(), pool.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, total - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

void require_fraction(double f, const char* what) {
  if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument(std::string(what) + " must lie in [0, 1]");
}

Corrupted clean_copy(const Matrix& x) {
  return {x, Matrix::Zero(x.rows(), x.cols()), Mask::Constant(x.rows(), x.cols(), false)};
}

}  // namespace

void SynthSpec::validate() const {
  if (k < 1 || r < 1 || p < 1 || m < 1 || samples_per_manifold < 1) {
    throw InvalidArgument("synthetic spec: k, r, p, m and samples_per_manifold must be positive");
  }
}

int SynthSpec::feature_dim() const {
  // C(r + p, p) - 1
  double binom = 1.0;
  for (int i = 1; i <= p; ++i) binom = binom * (r + i) / i;
  return static_cast<int>(std::lround(binom)) - 1;
}

void NoiseSpec::validate(Eigen::Index m) const {
  require_fraction(rho, "rho");
  if (kind == NoiseKind::SparseGaussian || kind == NoiseKind::ColumnGaussian) {
    if (!(sigma_e_ratio > 0.0)) throw InvalidArgument("sigma_e_ratio must be positive");
  }
  if (kind == NoiseKind::SaltPepper) require_fraction(density, "density");
  if (kind == NoiseKind::BlockOcclusion) {
    if (image_h < 1 || image_w < 1) throw InvalidArgument("occlusion needs positive image_h and image_w");
    if (static_cast<Eigen::Index>(image_h) * image_w != m) {
      throw DimensionError("occlusion: image_h * image_w must equal the row count");
    }
  }
}

Eigen::Index fraction_count(double fraction, Eigen::Index total) {
  return static_cast<Eigen::Index>(std::llround(fraction * static_cast<double>(total)));
}

Vector poly_features(const Vector& z, int p) {
  if (p < 1) throw InvalidArgument("poly_features: p must be >= 1");
  const int vars = static_cast<int>(z.size());
  std::vector<double> values;
  for (int degree = 1; degree <= p; ++degree) {
    std::vector<std::vector<int>> exps;
    std::vector<int> current;
    if (vars > 0) exponents_of_degree(vars, degree, current, exps);
    for (const auto& e : exps) {
      double v = 1.0;
      for (int i = 0; i < vars; ++i)
        for (int t = 0; t < e[static_cast<std::size_t>(i)]; ++t) v *= z(i);
      values.push_back(v);
    }
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Dataset gen_union_polynomial(const SynthSpec& spec) {
  spec.validate();
  const int feat = spec.feature_dim();
  const Eigen::Index n = static_cast<Eigen::Index>(spec.k) * spec.samples_per_manifold;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  Dataset out;
  out.X.resize(spec.m, n);
  out.labels.resize(static_cast<std::size_t>(n));
  Eigen::Index col = 0;
  Vector z(spec.r);
  for (int j = 0; j < spec.k; ++j) {
    Matrix gamma(spec.m, feat);
    for (Eigen::Index c = 0; c < feat; ++c)
      for (Eigen::Index r = 0; r < spec.m; ++r) gamma(r, c) = normal(rng);
    for (int s = 0; s < spec.samples_per_manifold; ++s, ++col) {
      for (int i = 0; i < spec.r; ++i) z(i) = uniform(rng);
      out.X.col(col) = gamma * poly_features(z, spec.p);
      out.labels[static_cast<std::size_t>(col)] = j;
    }
  }

  if (spec.shuffle) {
    for (Eigen::Index i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<Eigen::Index> pick(0, i);
      const Eigen::Index other = pick(rng);
      if (other == i) continue;
      out.X.col(i).swap(out.X.col(other));
      std::swap(out.labels[static_cast<std::size_t>(i)], out.labels[static_cast<std::size_t>(other)]);
    }
  }
  return out;
}

double entry_std(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  const double mean = x.mean();
  return std::sqrt((x.array() - mean).square().sum() / static_cast<double>(x.size()));
}

Corrupted inject_sparse_gaussian(const Matrix& x, double rho, double sigma_e_ratio, Seed seed) {
  require_fraction(rho, "rho");
  if (!(sigma_e_ratio > 0.0)) throw InvalidArgument("sigma_e_ratio must be positive");
  Corrupted out = clean_copy(x);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma_e_ratio * entry_std(x));
  const Eigen::Index count = fraction_count(rho, x.size());
  for (Eigen::Index flat : sample_without_replacement(x.size(), count, rng)) {
    const Eigen::Index r = flat % x.rows();
    const Eigen::Index c = flat / x.rows();
    out.E(r, c) = noise(rng);
    out.mask(r, c) = true;
  }
  out.Xhat = x + out.E;
  out.E = out.Xhat - x;
  return out;
}

Corrupted inject_columnwise(const Matrix& x, double rho, Seed seed, double sigma_e_ratio) {
  require_fraction(rho, "rho");
  if (!(sigma_e_ratio > 0.0)) throw InvalidArgument("sigma_e_ratio must be positive");
  Corrupted out = clean_copy(x);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma_e_ratio * entry_std(x));
  const Eigen::Index count = fraction_count(rho, x.cols());
  for (Eigen::Index c : sample_without_replacement(x.cols(), count, rng)) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) out.E(r, c) = noise(rng);
    out.mask.col(c).setConstant(true);
  }
  out.Xhat = x + out.E;
  out.E = out.Xhat - x;
  return out;
}

Corrupted inject_salt_pepper(const Matrix& x, double density, double fraction_of_columns, Seed seed) {
  require_fraction(density, "density");
  require_fraction(fraction_of_columns, "fraction_of_columns");
  Corrupted out = clean_copy(x);
  if (x.size() == 0) return out;
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  const Eigen::Index per_column = fraction_count(density, x.rows());
  for (Eigen::Index c : sample_without_replacement(x.cols(), fraction_count(fraction_of_columns, x.cols()), rng)) {
    for (Eigen::Index r : sample_without_replacement(x.rows(), per_column, rng)) {
      out.Xhat(r, c) = coin(rng) ? hi : lo;
      out.mask(r, c) = true;
    }
  }
  out.E = out.Xhat - x;
  return out;
}

Corrupted inject_block_occlusion(const Matrix& x, int image_h, int image_w, double fraction_of_columns,
                                 double block_scale, Seed seed) {
  require_fraction(fraction_of_columns, "fraction_of_columns");
  require_fraction(block_scale, "block_scale");
  if (image_h < 1 || image_w < 1) throw InvalidArgument("occlusion needs positive image_h and image_w");
  if (static_cast<Eigen::Index>(image_h) * image_w != x.rows()) {
    throw DimensionError("occlusion: image_h * image_w = " + std::to_string(image_h * image_w) +
                         " but the data has " + std::to_string(x.rows()) + " rows");
  }
  Corrupted out = clean_copy(x);
  if (x.size() == 0) return out;
  const double hi = x.maxCoeff();
  const int bh = static_cast<int>(std::lround(block_scale * image_h));
  const int bw = static_cast<int>(std::lround(block_scale * image_w));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> top(0, image_h - bh);
  std::uniform_int_distribution<int> left(0, image_w - bw);
  for (Eigen::Index c : sample_without_replacement(x.cols(), fraction_count(fraction_of_columns, x.cols()), rng)) {
    const int r0 = top(rng);
    const int c0 = left(rng);
    for (int pc = c0; pc < c0 + bw; ++pc) {
      for (int pr = r0; pr < r0 + bh; ++pr) {
        const Eigen::Index idx = pr + static_cast<Eigen::Index>(pc) * image_h;
        out.Xhat(idx, c) = hi;
        out.mask(idx, c) = true;
      }
    }
  }
  out.E = out.Xhat - x;
  return out;
}

Corrupted inject(const Matrix& x, const NoiseSpec& spec) {
  spec.validate(x.rows());
  switch (spec.kind) {
    case NoiseKind::SparseGaussian: return inject_sparse_gaussian(x, spec.rho, spec.sigma_e_ratio, spec.seed);
    case NoiseKind::ColumnGaussian: return inject_columnwise(x, spec.rho, spec.seed, spec.sigma_e_ratio);
    case NoiseKind::SaltPepper: return inject_salt_pepper(x, spec.density, spec.rho, spec.seed);
    case NoiseKind::BlockOcclusion:
      return inject_block_occlusion(x, spec.image_h, spec.image_w, spec.rho, spec.block_scale, spec.seed);
  }
  return clean_copy(x);
}

double rmse(const Matrix& truth, const Matrix& estimate) {
  require_same_shape(truth, estimate, "rmse");
  const double denom = truth.norm();
  if (!(denom > 0.0)) throw InvalidArgument("rmse: reference matrix has zero norm");
  return (truth - estimate).norm() / denom;
}

double mae(const Matrix& truth, const Matrix& estimate) {
  require_same_shape(truth, estimate, "mae");
  const double denom = truth.cwiseAbs().sum();
  if (!(denom > 0.0)) throw InvalidArgument("mae: reference matrix has zero norm");
  return (truth - estimate).cwiseAbs().sum() / denom;
}

}  // namespace rnlmf::datagen
