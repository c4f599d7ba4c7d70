#include "rnlmf/solver.hpp"

#include <cassert>
#include <cmath>
#include <random>

#include "rnlmf/kernels.hpp"
#include "rnlmf/prox.hpp"

namespace rnlmf {

namespace {

constexpr int kMaxDescentRetries = 10;
constexpr double kAcceptSlack = 1e-12;

kernels::KernelSpec rbf(double sigma) { return kernels::KernelSpec::rbf(sigma); }

/// Derivative factor of exp(-r^2 / sigma^2) with respect to squared distance.
double grad_scale(double sigma) { return 2.0 / (sigma * sigma); }

double penalty_value(const Matrix& c, PenaltyC p) {
  switch (p) {
    case PenaltyC::FrobSq: return 0.5 * c.squaredNorm();
    case PenaltyC::L1: return prox::l1_norm(c);
    case PenaltyC::Nuclear: return prox::nuclear_norm(c);
  }
  return 0.0;
}

double penalty_value(const Matrix& e, PenaltyE p) {
  switch (p) {
    case PenaltyE::FrobSq: return 0.5 * e.squaredNorm();
    case PenaltyE::L1: return prox::l1_norm(e);
    case PenaltyE::L21: return prox::l21_norm(e);
  }
  return 0.0;
}

void check_shapes(const Matrix& D, const Matrix& C, const Matrix& E, const Matrix& xhat) {
  require_same_shape(E, xhat, "E vs Xhat");
  if (D.rows() != xhat.rows()) throw DimensionError("dictionary row count differs from data");
  if (C.rows() != D.cols()) throw DimensionError("code rows differ from dictionary atoms");
  if (C.cols() != xhat.cols()) throw DimensionError("code columns differ from data columns");
}

bool accepts(double before, double after) {
  return after <= before + kAcceptSlack * (1.0 + std::abs(before));
}

Matrix codes_gram(const Matrix& C) {
  Matrix s = Matrix::Zero(C.rows(), C.rows());
  s.selfadjointView<Eigen::Lower>().rankUpdate(C);
  return s.selfadjointView<Eigen::Lower>();
}

// kdy = K(D, y), kdd = K(D, D), cct = C C'
DGradient dict_gradient(const Matrix& D, const Matrix& C, const Matrix& y, const Matrix& kdy, const Matrix& kdd,
                        const Matrix& cct, double sigma, IterationWorkspace* ws) {
  const Matrix w1 = -C.transpose().cwiseProduct(kdy.transpose());
  const Vector w1bar = w1.colwise().sum().transpose();
  const Matrix w2 = 0.5 * cct.cwiseProduct(kdd);
  const Vector w2bar = w2.colwise().sum().transpose();

  const double g = grad_scale(sigma);
  DGradient out;
  out.gradient = g * (y * w1 - D * w1bar.asDiagonal()) + 2.0 * g * (D * w2 - D * w2bar.asDiagonal());
  out.H = 2.0 * g * w2;
  out.H.diagonal() += g * (-w1bar - 2.0 * w2bar);

  if (ws != nullptr) {
    ws->W1 = w1;
    ws->W1bar = w1bar;
    ws->W2 = w2;
    ws->W2bar = w2bar;
    ws->H = out.H;
  }
  return out;
}

EGradient noise_gradient(const Matrix& D, const Matrix& C, const Matrix& y, const Matrix& kdy, double sigma,
                         double xi, IterationWorkspace* ws) {
  const Matrix w3 = -C.cwiseProduct(kdy);
  const Vector w3bar = w3.colwise().sum().transpose();
  const double g = grad_scale(sigma);

  EGradient out;
  out.gradient = g * (y * w3bar.asDiagonal() - D * w3);
  out.tau_E = w3bar.size() == 0 ? 0.0 : xi * g * w3bar.cwiseAbs().maxCoeff();
  if (ws != nullptr) {
    ws->W3 = w3;
    ws->W3bar = w3bar;
    ws->tau_E = out.tau_E;
  }
  return out;
}

Matrix code_step(IterationWorkspace& ws, const Matrix& kdd, const Matrix& kdy, double lambda_C, PenaltyC penalty_C,
                 const Matrix& C_prev, Seed power_seed, double tau_C_factor) {
  if (penalty_C == PenaltyC::FrobSq) {
    ws.tau_C = 0.0;
    return prox::ridge_solve(kdd, kdy, lambda_C);
  }
  ws.tau_C = tau_C_factor * 1.01 * prox::spectral_norm_power(kdd, 50, power_seed);
  if (ws.tau_C <= 0.0) return C_prev;
#ifndef NDEBUG
  {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(kdd, Eigen::EigenvaluesOnly);
    assert(ws.tau_C > eig.eigenvalues().cwiseAbs().maxCoeff() && "tau_C must exceed |K(D,D)|_2");
  }
#endif
  const Matrix grad = kdd * C_prev - kdy;
  const Matrix point = C_prev - grad / ws.tau_C;
  const double threshold = lambda_C / ws.tau_C;
  return penalty_C == PenaltyC::L1 ? prox::soft_threshold(point, threshold) : prox::svt(point, threshold);
}

// Kernel blocks at the current iterate, shared by the objective and the gradients.
struct KernelCache {
  Matrix kdd;  // K(D, D)
  Matrix kdy;  // K(D, Xhat - E)
  Matrix cct;  // C C'

  double loss(const Matrix& C) const {
    const double n = static_cast<double>(C.cols());
    const double value = 0.5 * n - C.cwiseProduct(kdy).sum() + 0.5 * kdd.cwiseProduct(cct).sum();
    if (!std::isfinite(value)) throw NumericError("objective: non-finite value");
    return value;
  }
};

}  // namespace

std::string to_string(PenaltyC p) {
  switch (p) {
    case PenaltyC::FrobSq: return "frob";
    case PenaltyC::L1: return "l1";
    case PenaltyC::Nuclear: return "nuclear";
  }
  return "?";
}

std::string to_string(PenaltyE p) {
  switch (p) {
    case PenaltyE::FrobSq: return "frob";
    case PenaltyE::L1: return "l1";
    case PenaltyE::L21: return "l21";
  }
  return "?";
}

PenaltyC parse_penalty_c(const std::string& name) {
  if (name == "frob") return PenaltyC::FrobSq;
  if (name == "l1") return PenaltyC::L1;
  if (name == "nuclear") return PenaltyC::Nuclear;
  throw InvalidArgument("unknown code penalty '" + name + "' (expected frob|l1|nuclear)");
}

PenaltyE parse_penalty_e(const std::string& name) {
  if (name == "frob") return PenaltyE::FrobSq;
  if (name == "l1") return PenaltyE::L1;
  if (name == "l21") return PenaltyE::L21;
  throw InvalidArgument("unknown noise penalty '" + name + "' (expected frob|l1|l21)");
}

void RnlmfConfig::validate() const {
  if (d < 1) throw InvalidArgument("d must be a positive integer");
  if (!(lambda_C > 0.0)) throw InvalidArgument("lambda_C must be positive");
  if (!(lambda_E > 0.0)) throw InvalidArgument("lambda_E must be positive");
  if (!(sigma_scale > 0.0)) throw InvalidArgument("sigma_scale must be positive");
  if (sigma && !(*sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (!(eta >= 0.0 && eta < 1.0)) throw InvalidArgument("eta must lie in [0, 1)");
  if (!(tau_D >= 1.0)) throw InvalidArgument("tau_D must be >= 1");
  if (!(mu >= 0.0)) throw InvalidArgument("mu must be >= 0");
  if (!(xi >= 1.0)) throw InvalidArgument("xi must be >= 1");
  if (max_iters < 1) throw InvalidArgument("max_iters must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  if (switch_penalty_after && *switch_penalty_after < 0) {
    throw InvalidArgument("switch_penalty_after must be >= 0");
  }
}

double factorization_loss(const Matrix& D, const Matrix& C, const Matrix& E, const Matrix& xhat,
                          double sigma) {
  check_shapes(D, C, E, xhat);
  const auto spec = rbf(sigma);
  const Matrix kdy = kernels::kernel_matrix(D, xhat - E, spec);
  const Matrix kdd = kernels::gram_matrix(D, spec);
  // Tr(K(Y, Y)) = n for the Gaussian kernel.
  const double n = static_cast<double>(xhat.cols());
  const double cross = C.cwiseProduct(kdy).sum();
  const double quad = C.cwiseProduct(kdd * C).sum();
  const double loss = 0.5 * n - cross + 0.5 * quad;
  if (!std::isfinite(loss)) throw NumericError("objective: non-finite value");
  return loss;
}

double objective(const Matrix& D, const Matrix& C, const Matrix& E, const Matrix& xhat, double sigma,
                 double lambda_C, double lambda_E, PenaltyC penalty_C, PenaltyE penalty_E) {
  const double j = factorization_loss(D, C, E, xhat, sigma) + lambda_C * penalty_value(C, penalty_C) +
                   lambda_E * penalty_value(E, penalty_E);
  if (!std::isfinite(j)) throw NumericError("objective: non-finite value");
  return j;
}

DGradient grad_D(const Matrix& D, const Matrix& C, const Matrix& E, const Matrix& xhat, double sigma,
                 IterationWorkspace* ws) {
  check_shapes(D, C, E, xhat);
  const auto spec = rbf(sigma);
  const Matrix y = xhat - E;
  return dict_gradient(D, C, y, kernels::kernel_matrix(D, y, spec), kernels::gram_matrix(D, spec), codes_gram(C),
                       sigma, ws);
}

EGradient grad_E(const Matrix& D, const Matrix& C, const Matrix& E, const Matrix& xhat, double sigma,
                 double xi, IterationWorkspace* ws) {
  check_shapes(D, C, E, xhat);
  const Matrix y = xhat - E;
  return noise_gradient(D, C, y, kernels::kernel_matrix(D, y, rbf(sigma)), sigma, xi, ws);
}

Matrix update_C(IterationWorkspace& ws, const Matrix& D, const Matrix& E, const Matrix& xhat, double sigma,
                double lambda_C, PenaltyC penalty_C, const Matrix& C_prev, Seed power_seed,
                double tau_C_factor) {
  require_same_shape(E, xhat, "update_C");
  if (D.rows() != xhat.rows()) throw DimensionError("update_C: dictionary row count differs from data");
  if (penalty_C != PenaltyC::FrobSq && (C_prev.rows() != D.cols() || C_prev.cols() != xhat.cols())) {
    throw DimensionError("update_C: previous codes have the wrong shape");
  }
  const auto spec = rbf(sigma);
  return code_step(ws, kernels::gram_matrix(D, spec), kernels::kernel_matrix(D, xhat - E, spec), lambda_C,
                   penalty_C, C_prev, power_seed, tau_C_factor);
}

Matrix update_D(IterationWorkspace& ws, const Matrix& D_prev, const Matrix& gradient, const Matrix& H,
                const RnlmfConfig& config, std::optional<double> tau_D) {
  require_same_shape(gradient, D_prev, "update_D");
  if (H.rows() != D_prev.cols() || H.cols() != D_prev.cols()) throw DimensionError("update_D: H must be d x d");
  const double step_tau = tau_D.value_or(config.tau_D);
  if (ws.Delta.rows() != D_prev.rows() || ws.Delta.cols() != D_prev.cols()) {
    ws.Delta = Matrix::Zero(D_prev.rows(), D_prev.cols());
  }

  const Matrix sym = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericError("update_D: eigendecomposition of H failed");
  const Vector& lambdas = eig.eigenvalues();

  Matrix step;
  if (config.use_scaled_D_step) {
    const double h_norm = lambdas.size() == 0 ? 0.0 : lambdas.cwiseAbs().maxCoeff();
    ws.mu_used = 0.0;
    step = h_norm > 0.0 ? Matrix(gradient / h_norm) : Matrix::Zero(gradient.rows(), gradient.cols());
  } else {
    double mu = config.mu;
    const double lambda_min = lambdas.size() == 0 ? 0.0 : lambdas.minCoeff();
    if (lambda_min + mu <= 0.0) mu = std::abs(lambda_min) + 1e-8;
    ws.mu_used = mu;
    const Matrix& v = eig.eigenvectors();
    const Vector inv = (lambdas.array() + mu).inverse().matrix();
    step = ((gradient * v) * inv.asDiagonal()) * v.transpose();
  }

  ws.Delta = config.eta * ws.Delta + step / step_tau;
  Matrix next = D_prev - ws.Delta;
  if (!next.allFinite()) throw NumericError("update_D: non-finite dictionary step");
  return next;
}

Matrix update_E(IterationWorkspace& ws, const Matrix& E_prev, const Matrix& gradient, double tau_E,
                double lambda_E, PenaltyE penalty_E) {
  require_same_shape(gradient, E_prev, "update_E");
  ws.tau_E = tau_E;
  if (!(tau_E > 0.0)) return E_prev;
  const Matrix point = E_prev - gradient / tau_E;
  switch (penalty_E) {
    case PenaltyE::FrobSq: return (tau_E / (tau_E + lambda_E)) * point;
    case PenaltyE::L1: return prox::soft_threshold(point, lambda_E / tau_E);
    case PenaltyE::L21: return prox::column_soft_threshold(point, lambda_E / tau_E);
  }
  return point;
}

RnlmfModel fit(const Matrix& xhat, const RnlmfConfig& config, const FitObserver& observer) {
  config.validate();
  if (xhat.size() == 0) throw InvalidArgument("fit: empty data matrix");
  if (!xhat.allFinite()) throw InvalidArgument("fit: data contains non-finite values");
  if (xhat.cols() < config.d) throw InvalidArgument("fit: need at least d columns");

  const Eigen::Index m = xhat.rows();
  const Eigen::Index n = xhat.cols();
  const Eigen::Index d = config.d;

  RnlmfModel model;
  model.config = config;
  model.sigma = config.sigma ? *config.sigma : kernels::sigma_heuristic(xhat, config.sigma_scale, config.seed);
  const double sigma = model.sigma;

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal;
  Matrix D(m, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < m; ++i) D(i, j) = normal(rng);
  Matrix C = Matrix::Zero(d, n);
  Matrix E = Matrix::Zero(m, n);

  IterationWorkspace ws;
  ws.Delta = Matrix::Zero(m, d);
  FitTrace& trace = model.trace;

  auto penalty_at = [&](int t) {
    if (config.switch_penalty_after && t <= *config.switch_penalty_after) return PenaltyC::FrobSq;
    return config.penalty_C;
  };
  auto notify = [&](int t, Block b) {
    if (observer) observer(BlockEvent{t, b, D, C, E});
  };
  const auto spec = rbf(sigma);
  Matrix y = xhat;
  KernelCache kc{kernels::gram_matrix(D, spec), kernels::kernel_matrix(D, y, spec), Matrix::Zero(d, d)};
  auto evaluate = [&](PenaltyC pc) {
    const double j =
        kc.loss(C) + config.lambda_C * penalty_value(C, pc) + config.lambda_E * penalty_value(E, config.penalty_E);
    if (!std::isfinite(j)) throw NumericError("objective: non-finite value");
    return j;
  };

  double previous = 0.5 * static_cast<double>(n);  // J at C = 0, E = 0
  for (int t = 1; t <= config.max_iters; ++t) {
    const PenaltyC pc = penalty_at(t);
    const Seed power_seed = config.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<Seed>(t));
    StepDiff diff;

    double j_ref = 0.0;
    try {
      // previous already holds J for this penalty unless the schedule just switched
      if (config.strict_descent) j_ref = (t > 1 && penalty_at(t - 1) == pc) ? previous : evaluate(pc);

      // Codes.
      {
        const Matrix c_prev = C;
        const Matrix cct_prev = kc.cct;
        C = code_step(ws, kc.kdd, kc.kdy, config.lambda_C, pc, c_prev, power_seed, 1.0);
        kc.cct = codes_gram(C);
        if (config.strict_descent) {
          double j_new = evaluate(pc);
          double factor = 1.0;
          for (int retry = 0; pc != PenaltyC::FrobSq && !accepts(j_ref, j_new) && retry < kMaxDescentRetries;
               ++retry) {
            factor *= 2.0;
            C = code_step(ws, kc.kdd, kc.kdy, config.lambda_C, pc, c_prev, power_seed, factor);
            kc.cct = codes_gram(C);
            j_new = evaluate(pc);
          }
          if (accepts(j_ref, j_new)) {
            j_ref = j_new;
          } else {
            C = c_prev;
            kc.cct = cct_prev;
            ++trace.rejected_steps;
          }
        }
        diff.dC = (C - c_prev).norm();
      }
      notify(t, Block::C);

      // Dictionary.
      {
        const Matrix d_prev = D;
        const DGradient g = dict_gradient(D, C, y, kc.kdy, kc.kdd, kc.cct, sigma, &ws);
        const KernelCache kc_prev = kc;
        auto refresh = [&] {
          kc.kdd = kernels::gram_matrix(D, spec);
          kc.kdy = kernels::kernel_matrix(D, y, spec);
        };
        D = update_D(ws, d_prev, g.gradient, g.H, config);
        refresh();
        if (config.strict_descent) {
          double j_new = evaluate(pc);
          double tau = config.tau_D;
          for (int retry = 0; !accepts(j_ref, j_new) && retry < kMaxDescentRetries; ++retry) {
            tau *= 2.0;
            ws.Delta.setZero();
            D = update_D(ws, d_prev, g.gradient, g.H, config, tau);
            refresh();
            j_new = evaluate(pc);
          }
          if (accepts(j_ref, j_new)) {
            j_ref = j_new;
          } else {
            D = d_prev;
            kc = kc_prev;
            ws.Delta.setZero();
            ++trace.rejected_steps;
          }
        }
        diff.dD = (D - d_prev).norm();
      }
      notify(t, Block::D);

      // Noise. tau_E vanishes while C == 0, and the step is skipped.
      {
        const Matrix e_prev = E;
        const EGradient g = noise_gradient(D, C, y, kc.kdy, sigma, config.xi, &ws);
        if (g.tau_E > 0.0) {
          const Matrix kdy_prev = kc.kdy;
          auto refresh = [&] {
            y = xhat - E;
            kc.kdy = kernels::kernel_matrix(D, y, spec);
          };
          E = update_E(ws, e_prev, g.gradient, g.tau_E, config.lambda_E, config.penalty_E);
          refresh();
          if (config.strict_descent) {
            double j_new = evaluate(pc);
            double tau = g.tau_E;
            for (int retry = 0; !accepts(j_ref, j_new) && retry < kMaxDescentRetries; ++retry) {
              tau *= 2.0;
              E = update_E(ws, e_prev, g.gradient, tau, config.lambda_E, config.penalty_E);
              refresh();
              j_new = evaluate(pc);
            }
            if (accepts(j_ref, j_new)) {
              j_ref = j_new;
            } else {
              E = e_prev;
              y = xhat - E;
              kc.kdy = kdy_prev;
              ++trace.rejected_steps;
            }
          }
        }
        diff.dE = (E - e_prev).norm();
      }
      notify(t, Block::E);
    } catch (const NumericError& e) {
      throw DivergenceError(std::string("fit diverged at iteration ") + std::to_string(t) + ": " + e.what(),
                            trace);
    }

    double current = 0.0;
    try {
      current = config.strict_descent ? j_ref : evaluate(pc);
    } catch (const NumericError&) {
      throw DivergenceError("fit diverged at iteration " + std::to_string(t) + ": non-finite objective", trace);
    }
    trace.objective.push_back(current);
    trace.step_diffs.push_back(diff);
    trace.iterations_run = t;

    const double change = std::abs(current - previous) / (1.0 + std::abs(previous));
    previous = current;
    if (change < config.tol) {
      trace.converged = true;
      break;
    }
  }

  model.D = std::move(D);
  model.C = std::move(C);
  model.X_clean = xhat - E;
  model.E = std::move(E);
  return model;
}

OutOfSampleResult transform(const Matrix& xhat_new, const RnlmfModel& model, int max_iters) {
  if (xhat_new.rows() != model.D.rows()) {
    throw DimensionError("transform: data has " + std::to_string(xhat_new.rows()) + " rows, dictionary has " +
                         std::to_string(model.D.rows()));
  }
  if (max_iters < 1) throw InvalidArgument("transform: max_iters must be positive");
  if (!(model.sigma > 0.0)) throw InvalidArgument("transform: model has no kernel width");
  if (!xhat_new.allFinite()) throw InvalidArgument("transform: data contains non-finite values");
  const RnlmfConfig& config = model.config;
  const Matrix& D = model.D;

  OutOfSampleResult out;
  out.C = Matrix::Zero(D.cols(), xhat_new.cols());
  out.E = Matrix::Zero(xhat_new.rows(), xhat_new.cols());
  IterationWorkspace ws;
  const auto spec = rbf(model.sigma);
  const Matrix kdd = kernels::gram_matrix(D, spec);
  Matrix kdy = kernels::kernel_matrix(D, xhat_new, spec);
  double previous = 0.5 * static_cast<double>(xhat_new.cols());
  for (int t = 1; t <= max_iters; ++t) {
    const Seed power_seed = config.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<Seed>(t));
    out.C = code_step(ws, kdd, kdy, config.lambda_C, config.penalty_C, out.C, power_seed, 1.0);
    const EGradient g = noise_gradient(D, out.C, xhat_new - out.E, kdy, model.sigma, config.xi, &ws);
    out.E = update_E(ws, out.E, g.gradient, g.tau_E, config.lambda_E, config.penalty_E);
    kdy = kernels::kernel_matrix(D, xhat_new - out.E, spec);
    const KernelCache kc{kdd, kdy, codes_gram(out.C)};
    const double current = kc.loss(out.C) + config.lambda_C * penalty_value(out.C, config.penalty_C) +
                           config.lambda_E * penalty_value(out.E, config.penalty_E);
    if (!std::isfinite(current)) throw NumericError("transform: non-finite objective");
    out.iterations = t;
    const double change = std::abs(current - previous) / (1.0 + std::abs(previous));
    previous = current;
    if (change < config.tol) {
      out.converged = true;
      break;
    }
  }
  out.X_clean = xhat_new - out.E;
  return out;
}

}  // namespace rnlmf
