#include "rnlmf/prox.hpp"

#include <cmath>
#include <random>

namespace rnlmf::prox {

namespace {

void require_nonnegative(double u, const char* what) {
  if (!(u >= 0.0)) throw InvalidArgument(std::string(what) + ": threshold must be >= 0");
}

}  // namespace

double soft_threshold(double v, double u) {
  require_nonnegative(u, "soft_threshold");
  const double mag = std::abs(v) - u;
  if (mag <= 0.0) return 0.0;
  return v > 0.0 ? mag : -mag;
}

Matrix soft_threshold(const Matrix& v, double u) {
  require_nonnegative(u, "soft_threshold");
  return v.unaryExpr([u](double x) {
    const double mag = std::abs(x) - u;
    if (mag <= 0.0) return 0.0;
    return x > 0.0 ? mag : -mag;
  });
}

Matrix svt(const Matrix& m, double u) {
  require_nonnegative(u, "svt");
  if (m.size() == 0) return m;
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("svt: SVD failed");
  const Vector shrunk = (svd.singularValues().array() - u).cwiseMax(0.0).matrix();
  return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

Matrix column_soft_threshold(const Matrix& m, double u) {
  require_nonnegative(u, "column_soft_threshold");
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double norm = m.col(j).norm();
    if (norm > u) out.col(j) = ((norm - u) / norm) * m.col(j);
  }
  return out;
}

double l1_norm(const Matrix& m) { return m.cwiseAbs().sum(); }

double l21_norm(const Matrix& m) { return m.colwise().norm().sum(); }

double nuclear_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

RidgeFactor::RidgeFactor(const Matrix& k, double lambda) {
  if (k.rows() != k.cols()) throw DimensionError("ridge_solve: K must be square");
  if (!(lambda > 0.0)) throw InvalidArgument("ridge_solve: lambda must be positive");
  Matrix shifted = k;
  shifted.diagonal().array() += lambda;
  llt_.compute(shifted);
  if (llt_.info() != Eigen::Success) {
    throw NumericError("ridge_solve: K + lambda I is not positive definite");
  }
}

Matrix RidgeFactor::solve(const Matrix& b) const {
  if (b.rows() != llt_.rows()) throw DimensionError("ridge_solve: right-hand side row count mismatch");
  return llt_.solve(b);
}

Matrix ridge_solve(const Matrix& k, const Matrix& b, double lambda) {
  return RidgeFactor(k, lambda).solve(b);
}

double spectral_norm_power(const Matrix& sym, int iterations, Seed seed) {
  if (sym.rows() != sym.cols()) throw DimensionError("spectral_norm_power: matrix must be square");
  if (sym.rows() == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector v(sym.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector w = sym * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    estimate = norm;
    v = w / norm;
  }
  return estimate;
}

}  // namespace rnlmf::prox
