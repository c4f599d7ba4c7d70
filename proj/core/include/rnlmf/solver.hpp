#pragma once

#include <functional>
#include <optional>
#include <string>

#include "rnlmf/common.hpp"

namespace rnlmf {

/// Regularizer on the codes: 1/2 |C|_F^2, |C|_1 or |C|_*.
enum class PenaltyC { FrobSq, L1, Nuclear };
/// Regularizer on the noise: 1/2 |E|_F^2, |E|_1 or |E|_{2,1}.
enum class PenaltyE { FrobSq, L1, L21 };

std::string to_string(PenaltyC p);
std::string to_string(PenaltyE p);
PenaltyC parse_penalty_c(const std::string& name);
PenaltyE parse_penalty_e(const std::string& name);

/// Solver hyperparameters. The kernel is Gaussian RBF with width resolved from the
/// data (sigma_scale times the mean pairwise distance) unless sigma is set.
struct RnlmfConfig {
  int d = 0;  ///< dictionary atoms, must be set
  double lambda_C = 5e-3;
  double lambda_E = 1e-3;
  PenaltyC penalty_C = PenaltyC::FrobSq;
  PenaltyE penalty_E = PenaltyE::L1;
  double sigma_scale = 1.0;
  std::optional<double> sigma;  ///< explicit kernel width, bypasses the heuristic
  double eta = 0.5;             ///< momentum on the dictionary step
  double tau_D = 1.0;
  double mu = 0.0;
  double xi = 1.0;
  int max_iters = 300;
  double tol = 1e-8;  ///< relative objective change
  bool strict_descent = false;
  Seed seed = 0;
  bool use_scaled_D_step = false;
  /// Use FrobSq on C for this many iterations before switching to penalty_C.
  std::optional<int> switch_penalty_after;

  void validate() const;
};

struct StepDiff {
  double dC = 0.0;
  double dD = 0.0;
  double dE = 0.0;
};

struct FitTrace {
  std::vector<double> objective;  ///< J after each full iteration
  std::vector<StepDiff> step_diffs;
  int iterations_run = 0;
  bool converged = false;
  /// Blocks whose strict-descent retries were exhausted (step rejected).
  int rejected_steps = 0;
};

struct RnlmfModel {
  Matrix D;
  Matrix C;
  Matrix E;
  Matrix X_clean;  ///< Xhat - E
  double sigma = 0.0;
  RnlmfConfig config;
  FitTrace trace;
};

/// Per-iteration scratch state. The bar quantities hold the diagonals of the
/// corresponding diagonal matrices (column sums of their sources).
struct IterationWorkspace {
  Matrix W1;      ///< n x d: -C' .* K(Xhat - E, D)
  Vector W1bar;   ///< d
  Matrix W2;      ///< d x d: 0.5 C C' .* K(D, D)
  Vector W2bar;   ///< d
  Matrix W3;      ///< d x n: -C .* K(D, Xhat - E)
  Vector W3bar;   ///< n
  Matrix H;       ///< d x d Hessian surrogate
  Matrix Delta;   ///< m x d momentum buffer
  double tau_C = 0.0;
  double tau_E = 0.0;
  double mu_used = 0.0;  ///< shift applied to H in the last dictionary step
};

/// J = n/2 - Tr(C' K(D, Xhat - E)) + 1/2 Tr(C' K(D, D) C) + lambda_C R(C) + lambda_E R(E).
double objective(const Matrix& D, const Matrix& C, const Matrix& E, const Matrix& xhat, double sigma,
                 double lambda_C, double lambda_E, PenaltyC penalty_C, PenaltyE penalty_E);

/// The smooth part L of the objective alone.
double factorization_loss(const Matrix& D, const Matrix& C, const Matrix& E, const Matrix& xhat,
                          double sigma);

struct DGradient {
  Matrix gradient;  ///< m x d
  Matrix H;         ///< d x d
};

/// Exact gradient of L in D and the Hessian surrogate built from W1, W2.
DGradient grad_D(const Matrix& D, const Matrix& C, const Matrix& E, const Matrix& xhat, double sigma,
                 IterationWorkspace* ws = nullptr);

struct EGradient {
  Matrix gradient;     ///< m x n
  double tau_E = 0.0;  ///< 0 iff C == 0; the E step must then be skipped
};

/// Exact gradient of L in E with step denominator tau_E = xi * (2 / sigma^2) * |1'W3|_inf.
EGradient grad_E(const Matrix& D, const Matrix& C, const Matrix& E, const Matrix& xhat, double sigma,
                 double xi = 1.0, IterationWorkspace* ws = nullptr);

/// Code update: ridge solve for FrobSq, one proximal gradient step with
/// tau_C = tau_C_factor * 1.01 * |K(D, D)|_2 for L1 / Nuclear.
Matrix update_C(IterationWorkspace& ws, const Matrix& D, const Matrix& E, const Matrix& xhat, double sigma,
                double lambda_C, PenaltyC penalty_C, const Matrix& C_prev, Seed power_seed = 0,
                double tau_C_factor = 1.0);

/// Relaxed Newton step on D with momentum; replaces ws.Delta.
/// tau_D defaults to config.tau_D.
Matrix update_D(IterationWorkspace& ws, const Matrix& D_prev, const Matrix& gradient, const Matrix& H,
                const RnlmfConfig& config, std::optional<double> tau_D = std::nullopt);

/// Proximal gradient step on E. Returns E_prev unchanged when tau_E <= 0.
Matrix update_E(IterationWorkspace& ws, const Matrix& E_prev, const Matrix& gradient, double tau_E,
                double lambda_E, PenaltyE penalty_E);

enum class Block { C, D, E };

struct BlockEvent {
  int iteration = 0;
  Block block = Block::C;
  const Matrix& D;
  const Matrix& C;
  const Matrix& E;
};

/// Called after every block update of fit(); for instrumentation and tests.
using FitObserver = std::function<void(const BlockEvent&)>;

/// Raised when the objective becomes non-finite; carries the trace so far.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, FitTrace trace)
      : NumericError(what), trace_(std::move(trace)) {}
  [[nodiscard]] const FitTrace& trace() const { return trace_; }

 private:
  FitTrace trace_;
};

/// Alternating minimization over C, D and E starting from C = 0, E = 0 and a
/// standard normal dictionary.
RnlmfModel fit(const Matrix& xhat, const RnlmfConfig& config, const FitObserver& observer = {});

struct OutOfSampleResult {
  Matrix X_clean;
  Matrix C;
  Matrix E;
  int iterations = 0;
  bool converged = false;
};

/// Denoises new columns with the model's dictionary and kernel width held fixed,
/// alternating code and noise updates only.
OutOfSampleResult transform(const Matrix& xhat_new, const RnlmfModel& model, int max_iters);

}  // namespace rnlmf
