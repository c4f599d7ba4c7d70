#include "rnlmf/rpca.hpp"

#include <cmath>
#include <limits>

#include "rnlmf/prox.hpp"

namespace rnlmf::rpca {

void RpcaConfig::validate() const {
  if (lambda && !(*lambda > 0.0)) throw InvalidArgument("rpca: lambda must be positive");
  if (mu0 && !(*mu0 > 0.0)) throw InvalidArgument("rpca: mu0 must be positive");
  if (!(mu_growth > 1.0)) throw InvalidArgument("rpca: mu_growth must exceed 1");
  if (!(mu_max_factor >= 1.0)) throw InvalidArgument("rpca: mu_max_factor must be >= 1");
  if (max_iters < 1) throw InvalidArgument("rpca: max_iters must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("rpca: tol must be positive");
}

RpcaResult rpca_admm(const Matrix& xhat, const RpcaConfig& config) {
  config.validate();
  if (!xhat.allFinite()) throw InvalidArgument("rpca: data contains non-finite values");
  RpcaResult out;
  out.L = Matrix::Zero(xhat.rows(), xhat.cols());
  out.S = Matrix::Zero(xhat.rows(), xhat.cols());
  const double data_norm = xhat.norm();
  if (xhat.size() == 0 || data_norm == 0.0) {
    out.converged = true;
    return out;
  }

  const double lambda = config.lambda.value_or(1.0 / std::sqrt(static_cast<double>(xhat.cols())));
  Eigen::BDCSVD<Matrix> top(xhat);
  const double spectral = top.singularValues()(0);
  const double linf = xhat.cwiseAbs().maxCoeff();
  double mu = config.mu0.value_or(1.25 / spectral);
  const double mu_max = mu * config.mu_max_factor;

  Matrix y = xhat / std::max(spectral, linf / lambda);
  double best_residual = std::numeric_limits<double>::infinity();
  Matrix best_l = out.L;
  Matrix best_s = out.S;

  for (int it = 1; it <= config.max_iters; ++it) {
    out.L = prox::svt(xhat - out.S + y / mu, 1.0 / mu);
    out.S = prox::soft_threshold(xhat - out.L + y / mu, lambda / mu);
    const Matrix gap = xhat - out.L - out.S;
    y += mu * gap;
    mu = std::min(mu * config.mu_growth, mu_max);

    const double residual = gap.norm() / data_norm;
    out.iterations = it;
    if (residual < best_residual) {
      best_residual = residual;
      best_l = out.L;
      best_s = out.S;
    }
    if (residual < config.tol) {
      out.converged = true;
      out.residual = residual;
      return out;
    }
  }
  out.L = std::move(best_l);
  out.S = std::move(best_s);
  out.residual = best_residual;
  return out;
}

}  // namespace rnlmf::rpca
