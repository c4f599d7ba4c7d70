#pragma once

#include <optional>

#include "rnlmf/common.hpp"

namespace rnlmf::rpca {

/// min |L|_* + lambda |S|_1  s.t.  L + S = Xhat, by inexact augmented Lagrangian.
struct RpcaConfig {
  std::optional<double> lambda;  ///< default 1 / sqrt(cols)
  std::optional<double> mu0;     ///< default 1.25 / |Xhat|_2
  double mu_growth = 1.5;
  double mu_max_factor = 1e7;  ///< mu is capped at mu0 * mu_max_factor
  int max_iters = 500;
  double tol = 1e-7;  ///< |Xhat - L - S|_F / |Xhat|_F

  void validate() const;
};

struct RpcaResult {
  Matrix L;
  Matrix S;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

RpcaResult rpca_admm(const Matrix& xhat, const RpcaConfig& config = {});

}  // namespace rnlmf::rpca
