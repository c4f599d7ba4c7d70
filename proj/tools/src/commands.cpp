#include "rnlmf/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>

#include "rnlmf/cli/matrix_io.hpp"
#include "rnlmf/clustering.hpp"
#include "rnlmf/datagen.hpp"
#include "rnlmf/kernels.hpp"
#include "rnlmf/rpca.hpp"
#include "rnlmf/solver.hpp"

namespace rnlmf::cli {

namespace fs = std::filesystem;

namespace {

Seed mix_seed(Seed base, Seed salt) {
  // splitmix64 finalizer
  Seed z = base + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

/// key: value lines in insertion order.
class Summary {
 public:
  void add(const std::string& key, const std::string& value) { lines_ += key + ": " + value + "\n"; }
  void add(const std::string& key, double value) { add(key, format_double(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }
  [[nodiscard]] const std::string& text() const { return lines_; }

 private:
  std::string lines_;
};

std::vector<double> parse_grid(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string(what) + ": not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw InvalidArgument(std::string(what) + " is empty");
  return out;
}

/// Options shared by every command that fits a model.
struct FitOptions {
  std::optional<int> d;
  int k_hint = 3;
  double lambda_c = 5e-3;
  double lambda_e = 1e-3;
  std::string penalty_c = "frob";
  std::string penalty_e = "l1";
  double sigma_scale = 1.0;
  std::optional<double> sigma;
  double eta = 0.5;
  double tau_d = 1.0;
  double mu = 0.0;
  double xi = 1.0;
  int max_iters = 300;
  double tol = 1e-8;
  bool strict_descent = false;
  bool scaled_d_step = false;
  std::optional<int> switch_penalty_after;
  Seed seed = 0;

  void attach(CLI::App* app, bool with_k_hint) {
    app->add_option("--d", d, "Dictionary atoms (default min(n, 2 m k))");
    if (with_k_hint) app->add_option("--k", k_hint, "Cluster/manifold count used for the default d");
    app->add_option("--lambda-c", lambda_c, "Code penalty weight")->capture_default_str();
    app->add_option("--lambda-e", lambda_e, "Noise penalty weight")->capture_default_str();
    app->add_option("--penalty-c", penalty_c, "Code penalty")
        ->check(CLI::IsMember({"frob", "l1", "nuclear"}))
        ->capture_default_str();
    app->add_option("--penalty-e", penalty_e, "Noise penalty")
        ->check(CLI::IsMember({"frob", "l1", "l21"}))
        ->capture_default_str();
    app->add_option("--sigma-scale", sigma_scale, "Multiplier on the mean pairwise distance")->capture_default_str();
    app->add_option("--sigma", sigma, "Explicit kernel width (overrides --sigma-scale)");
    app->add_option("--eta", eta, "Dictionary momentum in [0, 1)")->capture_default_str();
    app->add_option("--tau-d", tau_d, "Dictionary step damping (>= 1)")->capture_default_str();
    app->add_option("--mu", mu, "Shift added to the dictionary Hessian surrogate")->capture_default_str();
    app->add_option("--xi", xi, "Noise step Lipschitz multiplier (>= 1)")->capture_default_str();
    app->add_option("--max-iters", max_iters, "Iteration cap")->capture_default_str();
    app->add_option("--tol", tol, "Relative objective change for convergence")->capture_default_str();
    app->add_flag("--strict-descent", strict_descent, "Backtrack any block step that raises the objective");
    app->add_flag("--scaled-d-step", scaled_d_step, "Scale the dictionary gradient by |H|_2 instead of inverting H");
    app->add_option("--switch-penalty-after", switch_penalty_after,
                    "Use the Frobenius code penalty for this many iterations first");
    app->add_option("--seed", seed, "Random seed")->capture_default_str();
  }

  [[nodiscard]] RnlmfConfig to_config(Eigen::Index m, Eigen::Index n) const {
    RnlmfConfig cfg;
    const Eigen::Index fallback = std::min<Eigen::Index>(n, 2 * m * std::max(1, k_hint));
    cfg.d = d ? *d : static_cast<int>(fallback);
    cfg.lambda_C = lambda_c;
    cfg.lambda_E = lambda_e;
    cfg.penalty_C = parse_penalty_c(penalty_c);
    cfg.penalty_E = parse_penalty_e(penalty_e);
    cfg.sigma_scale = sigma_scale;
    cfg.sigma = sigma;
    cfg.eta = eta;
    cfg.tau_D = tau_d;
    cfg.mu = mu;
    cfg.xi = xi;
    cfg.max_iters = max_iters;
    cfg.tol = tol;
    cfg.strict_descent = strict_descent;
    cfg.use_scaled_D_step = scaled_d_step;
    cfg.switch_penalty_after = switch_penalty_after;
    cfg.seed = seed;
    return cfg;
  }
};

std::string format_trace(const FitTrace& trace) {
  std::string out = "iteration,objective,dC,dD,dE\n";
  for (std::size_t i = 0; i < trace.objective.size(); ++i) {
    const StepDiff& s = trace.step_diffs[i];
    out += std::to_string(i + 1) + "," + format_double(trace.objective[i]) + "," + format_double(s.dC) + "," +
           format_double(s.dD) + "," + format_double(s.dE) + "\n";
  }
  return out;
}

// --- synth -------------------------------------------------------------------

struct SynthOptions {
  int k = 3;
  int m = 30;
  int r = 3;
  int p = 3;
  int samples = 300;
  bool shuffle = false;
  double rho = 0.3;
  std::string noise = "sparse";
  double sigma_e_ratio = 1.0;
  double density = 0.25;
  int image_h = 0;
  int image_w = 0;
  double block_scale = 0.25;
  Seed seed = 0;
  std::string out_dir;
};

datagen::NoiseKind parse_noise(const std::string& name) {
  if (name == "sparse") return datagen::NoiseKind::SparseGaussian;
  if (name == "column") return datagen::NoiseKind::ColumnGaussian;
  if (name == "saltpepper") return datagen::NoiseKind::SaltPepper;
  if (name == "occlusion") return datagen::NoiseKind::BlockOcclusion;
  throw InvalidArgument("unknown noise kind '" + name + "'");
}

int run_synth(const SynthOptions& o, std::ostream& out) {
  datagen::SynthSpec spec;
  spec.k = o.k;
  spec.m = o.m;
  spec.r = o.r;
  spec.p = o.p;
  spec.samples_per_manifold = o.samples;
  spec.shuffle = o.shuffle;
  spec.seed = o.seed;
  const datagen::Dataset data = datagen::gen_union_polynomial(spec);

  datagen::NoiseSpec noise;
  noise.kind = parse_noise(o.noise);
  noise.rho = o.rho;
  noise.sigma_e_ratio = o.sigma_e_ratio;
  noise.density = o.density;
  noise.image_h = o.image_h;
  noise.image_w = o.image_w;
  noise.block_scale = o.block_scale;
  noise.seed = mix_seed(o.seed, 1);
  const datagen::Corrupted corrupted = datagen::inject(data.X, noise);

  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  write_matrix(dir / "X.csv", data.X);
  write_matrix(dir / "Xhat.csv", corrupted.Xhat);
  write_matrix(dir / "E.csv", corrupted.E);
  write_labels(dir / "labels.csv", data.labels);
  out << "wrote " << data.X.rows() << "x" << data.X.cols() << " matrices to " << dir.string() << "\n";
  return kExitOk;
}

// --- denoise -----------------------------------------------------------------

struct DenoiseOptions {
  std::string input;
  std::string truth;
  std::string out_dir;
  FitOptions fit;
};

int run_denoise(const DenoiseOptions& o, std::ostream& out) {
  const Matrix xhat = read_matrix(o.input);
  std::optional<Matrix> truth;
  if (!o.truth.empty()) {
    truth = read_matrix(o.truth);
    require_same_shape(*truth, xhat, "truth vs input");
  }
  const RnlmfConfig cfg = o.fit.to_config(xhat.rows(), xhat.cols());
  const RnlmfModel model = fit(xhat, cfg);

  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  write_matrix(dir / "Xclean.csv", model.X_clean);
  write_matrix(dir / "D.csv", model.D);
  write_matrix(dir / "C.csv", model.C);
  write_matrix(dir / "E.csv", model.E);
  write_text(dir / "trace.csv", format_trace(model.trace));

  Summary s;
  s.add("rows", static_cast<int>(xhat.rows()));
  s.add("cols", static_cast<int>(xhat.cols()));
  s.add("d", cfg.d);
  s.add("sigma", model.sigma);
  s.add("iterations", model.trace.iterations_run);
  s.add("converged", model.trace.converged);
  s.add("final_objective", model.trace.objective.empty() ? 0.0 : model.trace.objective.back());
  s.add("rejected_steps", model.trace.rejected_steps);
  if (truth) {
    s.add("rmse", datagen::rmse(*truth, model.X_clean));
    s.add("mae", datagen::mae(*truth, model.X_clean));
    s.add("rmse_input", datagen::rmse(*truth, xhat));
  }
  write_text(dir / "metrics.txt", s.text());
  out << s.text();
  return kExitOk;
}

// --- ose ---------------------------------------------------------------------

struct OseOptions {
  std::string input;
  std::string dict;
  std::string truth;
  std::string out_dir;
  double sigma = 0.0;
  FitOptions fit;
};

int run_ose(const OseOptions& o, std::ostream& out) {
  const Matrix xhat = read_matrix(o.input);
  RnlmfModel model;
  model.D = read_matrix(o.dict);
  model.sigma = o.sigma;
  model.config = o.fit.to_config(xhat.rows(), xhat.cols());
  model.config.d = static_cast<int>(model.D.cols());
  model.config.validate();
  const OutOfSampleResult res = transform(xhat, model, model.config.max_iters);

  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  write_matrix(dir / "Xclean.csv", res.X_clean);
  write_matrix(dir / "C.csv", res.C);
  write_matrix(dir / "E.csv", res.E);
  Summary s;
  s.add("iterations", res.iterations);
  s.add("converged", res.converged);
  if (!o.truth.empty()) {
    const Matrix truth = read_matrix(o.truth);
    require_same_shape(truth, xhat, "truth vs input");
    s.add("rmse", datagen::rmse(truth, res.X_clean));
    s.add("mae", datagen::mae(truth, res.X_clean));
  }
  write_text(dir / "metrics.txt", s.text());
  out << s.text();
  return kExitOk;
}

// --- cluster -----------------------------------------------------------------

struct ClusterOptions {
  std::string input;
  std::string truth;
  std::string out_dir;
  int kappa = 10;
  double gamma = 0.01;
  int restarts = 20;
  bool write_affinity = false;
  FitOptions fit;
};

int run_cluster(const ClusterOptions& o, std::ostream& out) {
  const Matrix xhat = read_matrix(o.input);
  const RnlmfConfig cfg = o.fit.to_config(xhat.rows(), xhat.cols());
  const RnlmfModel model = fit(xhat, cfg);

  clustering::ClusteringConfig cc;
  cc.k = o.fit.k_hint;
  cc.kappa = o.kappa;
  cc.gamma = o.gamma;
  cc.kmeans_restarts = o.restarts;
  cc.seed = o.fit.seed;
  const clustering::ClusteringResult res = clustering::cluster_codes(model.C, cc);

  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  write_labels(dir / "labels.csv", res.labels);
  if (o.write_affinity) write_matrix(dir / "affinity.csv", res.affinity);

  const Vector degree = res.affinity.rowwise().sum();
  Summary s;
  s.add("samples", static_cast<int>(res.affinity.rows()));
  s.add("k", cc.k);
  s.add("affinity_nonzeros", static_cast<int>((res.affinity.array() != 0.0).count()));
  s.add("affinity_min_degree", degree.minCoeff());
  s.add("affinity_max_degree", degree.maxCoeff());
  s.add("affinity_mean_degree", degree.mean());
  s.add("fit_iterations", model.trace.iterations_run);
  if (!o.truth.empty()) {
    const Labels truth = read_labels(o.truth);
    s.add("clustering_error", clustering::clustering_error(res.labels, truth, cc.k));
  }
  write_text(dir / "affinity_summary.txt", s.text());
  out << s.text();
  return kExitOk;
}

// --- rpca --------------------------------------------------------------------

struct RpcaOptions {
  std::string input;
  std::string truth;
  std::string out_dir;
  std::optional<double> lambda;
  double mu_growth = 1.5;
  int max_iters = 500;
  double tol = 1e-7;
};

int run_rpca(const RpcaOptions& o, std::ostream& out) {
  const Matrix xhat = read_matrix(o.input);
  rpca::RpcaConfig cfg;
  cfg.lambda = o.lambda;
  cfg.mu_growth = o.mu_growth;
  cfg.max_iters = o.max_iters;
  cfg.tol = o.tol;
  const rpca::RpcaResult res = rpca::rpca_admm(xhat, cfg);

  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  write_matrix(dir / "L.csv", res.L);
  write_matrix(dir / "S.csv", res.S);
  Summary s;
  s.add("iterations", res.iterations);
  s.add("converged", res.converged);
  s.add("residual", res.residual);
  if (!o.truth.empty()) {
    const Matrix truth = read_matrix(o.truth);
    require_same_shape(truth, xhat, "truth vs input");
    s.add("rmse", datagen::rmse(truth, res.L));
    s.add("mae", datagen::mae(truth, res.L));
  }
  write_text(dir / "metrics.txt", s.text());
  out << s.text();
  return kExitOk;
}

// --- bench -------------------------------------------------------------------

struct BenchOptions {
  int k = 3;
  int m = 30;
  int samples = 300;
  std::string rho_grid = "0.1,0.3,0.5";
  int seeds = 5;
  std::string noise = "sparse";
  double sigma_e_ratio = 1.0;
  std::string rpca_lambda_grid = "0.5,0.75,1,1.5,2,2.5,3";
  std::string out;
  FitOptions fit;
};

struct BenchRun {
  double rnlmf = 0.0;
  double rpca = 0.0;
  double identity = 0.0;
};

BenchRun bench_once(const BenchOptions& o, const std::vector<double>& rpca_grid, double rho, Seed data_seed,
                    Seed noise_seed) {
  datagen::SynthSpec spec;
  spec.k = o.k;
  spec.m = o.m;
  spec.samples_per_manifold = o.samples;
  spec.seed = data_seed;
  const datagen::Dataset data = datagen::gen_union_polynomial(spec);

  datagen::NoiseSpec noise;
  noise.kind = parse_noise(o.noise);
  noise.rho = rho;
  noise.sigma_e_ratio = o.sigma_e_ratio;
  noise.seed = noise_seed;
  if (noise.kind == datagen::NoiseKind::BlockOcclusion) {
    throw InvalidArgument("bench synthetic supports sparse, column and saltpepper noise");
  }
  const datagen::Corrupted corrupted = datagen::inject(data.X, noise);

  BenchRun run;
  run.identity = datagen::rmse(data.X, corrupted.Xhat);

  FitOptions fo = o.fit;
  fo.k_hint = o.k;
  RnlmfConfig cfg = fo.to_config(data.X.rows(), data.X.cols());
  cfg.seed = mix_seed(data_seed, 7);
  run.rnlmf = datagen::rmse(data.X, fit(corrupted.Xhat, cfg).X_clean);

  // RPCA gets the best lambda of the grid (scaled by 1/sqrt(n)) against the truth.
  run.rpca = std::numeric_limits<double>::infinity();
  const double scale = 1.0 / std::sqrt(static_cast<double>(data.X.cols()));
  for (double factor : rpca_grid) {
    rpca::RpcaConfig rc;
    rc.lambda = factor * scale;
    run.rpca = std::min(run.rpca, datagen::rmse(data.X, rpca::rpca_admm(corrupted.Xhat, rc).L));
  }
  return run;
}

int run_bench_synthetic(BenchOptions o, std::ostream& out) {
  if (o.seeds < 1) throw InvalidArgument("--seeds must be positive");
  if (o.noise == "column" && o.fit.penalty_e == "l1") o.fit.penalty_e = "l21";
  const std::vector<double> rhos = parse_grid(o.rho_grid, "--rho-grid");
  const std::vector<double> rpca_grid = parse_grid(o.rpca_lambda_grid, "--rpca-lambda-grid");

  const std::size_t total = rhos.size() * static_cast<std::size_t>(o.seeds);
  std::vector<BenchRun> runs(total);
  std::exception_ptr failure;
  std::mutex failure_lock;
  parallel_for(total, [&](std::size_t idx) {
    const std::size_t ri = idx / static_cast<std::size_t>(o.seeds);
    const auto s = static_cast<Seed>(idx % static_cast<std::size_t>(o.seeds));
    try {
      runs[idx] = bench_once(o, rpca_grid, rhos[ri], mix_seed(o.fit.seed, s), mix_seed(o.fit.seed, 1000 + idx));
    } catch (...) {
      std::lock_guard<std::mutex> guard(failure_lock);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);

  auto stats = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{mean, sd};
  };

  std::string csv = "rho,method,mean_rmse,std_rmse,runs\n";
  std::ostringstream table;
  table << std::fixed << std::setprecision(4);
  table << "rho     method    mean_rmse  std_rmse\n";
  for (std::size_t ri = 0; ri < rhos.size(); ++ri) {
    std::vector<double> a, b, c;
    for (int s = 0; s < o.seeds; ++s) {
      const BenchRun& r = runs[ri * static_cast<std::size_t>(o.seeds) + static_cast<std::size_t>(s)];
      a.push_back(r.rnlmf);
      b.push_back(r.rpca);
      c.push_back(r.identity);
    }
    const std::pair<const char*, std::vector<double>*> methods[] = {{"rnlmf", &a}, {"rpca", &b}, {"identity", &c}};
    for (const auto& [name, values] : methods) {
      const auto [mean, sd] = stats(*values);
      table << std::setw(6) << rhos[ri] << "  " << std::left << std::setw(8) << name << std::right << "  "
            << std::setw(9) << mean << "  " << std::setw(8) << sd << "\n";
      csv += format_double(rhos[ri]) + "," + name + "," + format_double(mean) + "," + format_double(sd) + "," +
             std::to_string(o.seeds) + "\n";
    }
  }
  out << table.str();
  if (!o.out.empty()) {
    const fs::path path(o.out);
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    write_text(path, csv);
  }
  return kExitOk;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& source) {
  std::map<std::string, std::string> values;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, line_no, 1, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(source, line_no, 1, "missing key");
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    std::replace(key.begin(), key.end(), '_', '-');
    values[key] = value;
  }
  return values;
}

std::vector<std::string> expand_config_file(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw InvalidArgument("--config requires a file path");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!config_path) return rest;

  std::ifstream in(*config_path);
  if (!in) throw IoError("cannot open config file '" + *config_path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto values = parse_config_text(buffer.str(), *config_path);

  // Program name and subcommand path come first; file values precede the user's
  // own options so the last occurrence (the user's) wins.
  std::size_t insert_at = rest.empty() ? 0 : 1;
  while (insert_at < rest.size() && !rest[insert_at].empty() && rest[insert_at][0] != '-') ++insert_at;
  std::vector<std::string> out(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(insert_at));
  for (const auto& [key, value] : values) out.push_back("--" + key + "=" + value);
  out.insert(out.end(), rest.begin() + static_cast<std::ptrdiff_t>(insert_at), rest.end());
  return out;
}

int run_command(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust nonlinear matrix factorization: denoising, out-of-sample denoising and clustering"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.add_option("--config", "Plain-text file of key = value defaults (flags override)");

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate union-of-polynomial-manifold data and inject noise");
  synth_cmd->add_option("--k", synth.k, "Number of manifolds")->capture_default_str();
  synth_cmd->add_option("--m", synth.m, "Ambient dimension")->capture_default_str();
  synth_cmd->add_option("--r", synth.r, "Latent dimension")->capture_default_str();
  synth_cmd->add_option("--p", synth.p, "Polynomial order")->capture_default_str();
  synth_cmd->add_option("--samples", synth.samples, "Samples per manifold")->capture_default_str();
  synth_cmd->add_flag("--shuffle", synth.shuffle, "Permute columns (labels follow)");
  synth_cmd->add_option("--rho", synth.rho, "Corrupted fraction of entries or columns")->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise, "Noise model")
      ->check(CLI::IsMember({"sparse", "column", "saltpepper", "occlusion"}))
      ->capture_default_str();
  synth_cmd->add_option("--sigma-e-ratio", synth.sigma_e_ratio, "Noise std over data std")->capture_default_str();
  synth_cmd->add_option("--density", synth.density, "Salt-and-pepper density per column")->capture_default_str();
  synth_cmd->add_option("--image-h", synth.image_h, "Image height for occlusion");
  synth_cmd->add_option("--image-w", synth.image_w, "Image width for occlusion");
  synth_cmd->add_option("--block-scale", synth.block_scale, "Occlusion block side fraction")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();

  DenoiseOptions denoise;
  auto* denoise_cmd = app.add_subcommand("denoise", "Fit a model and separate the noise");
  denoise_cmd->add_option("--input", denoise.input, "Noisy matrix (CSV)")->required();
  denoise_cmd->add_option("--truth", denoise.truth, "Clean matrix for metrics (CSV)");
  denoise_cmd->add_option("--out-dir", denoise.out_dir, "Output directory")->required();
  denoise.fit.attach(denoise_cmd, true);

  OseOptions ose;
  auto* ose_cmd = app.add_subcommand("ose", "Denoise new columns with a fixed dictionary");
  ose_cmd->add_option("--input", ose.input, "New noisy matrix (CSV)")->required();
  ose_cmd->add_option("--dict", ose.dict, "Dictionary D from denoise (CSV)")->required();
  ose_cmd->add_option("--sigma", ose.sigma, "Kernel width used for the dictionary")->required();
  ose_cmd->add_option("--truth", ose.truth, "Clean matrix for metrics (CSV)");
  ose_cmd->add_option("--out-dir", ose.out_dir, "Output directory")->required();
  ose_cmd->add_option("--lambda-c", ose.fit.lambda_c)->capture_default_str();
  ose_cmd->add_option("--lambda-e", ose.fit.lambda_e)->capture_default_str();
  ose_cmd->add_option("--penalty-c", ose.fit.penalty_c)
      ->check(CLI::IsMember({"frob", "l1", "nuclear"}))
      ->capture_default_str();
  ose_cmd->add_option("--penalty-e", ose.fit.penalty_e)
      ->check(CLI::IsMember({"frob", "l1", "l21"}))
      ->capture_default_str();
  ose_cmd->add_option("--xi", ose.fit.xi)->capture_default_str();
  ose_cmd->add_option("--max-iters", ose.fit.max_iters)->capture_default_str();
  ose_cmd->add_option("--tol", ose.fit.tol)->capture_default_str();
  ose_cmd->add_option("--seed", ose.fit.seed)->capture_default_str();

  ClusterOptions cluster;
  auto* cluster_cmd = app.add_subcommand("cluster", "Subspace clustering from the fitted codes");
  cluster_cmd->add_option("--input", cluster.input, "Data matrix (CSV)")->required();
  cluster_cmd->add_option("--truth", cluster.truth, "Ground-truth labels (CSV)");
  cluster_cmd->add_option("--out-dir", cluster.out_dir, "Output directory")->required();
  cluster_cmd->add_option("--kappa", cluster.kappa, "Affinity entries kept per column")->capture_default_str();
  cluster_cmd->add_option("--gamma", cluster.gamma, "Ridge penalty of the affinity")->capture_default_str();
  cluster_cmd->add_option("--restarts", cluster.restarts, "k-means restarts")->capture_default_str();
  cluster_cmd->add_flag("--write-affinity", cluster.write_affinity, "Also write affinity.csv");
  cluster.fit.attach(cluster_cmd, true);

  RpcaOptions rpca_opts;
  auto* rpca_cmd = app.add_subcommand("rpca", "Robust PCA baseline (inexact augmented Lagrangian)");
  rpca_cmd->add_option("--input", rpca_opts.input, "Noisy matrix (CSV)")->required();
  rpca_cmd->add_option("--truth", rpca_opts.truth, "Clean matrix for metrics (CSV)");
  rpca_cmd->add_option("--out-dir", rpca_opts.out_dir, "Output directory")->required();
  rpca_cmd->add_option("--lambda", rpca_opts.lambda, "Sparse weight (default 1/sqrt(cols))");
  rpca_cmd->add_option("--mu-growth", rpca_opts.mu_growth)->capture_default_str();
  rpca_cmd->add_option("--max-iters", rpca_opts.max_iters)->capture_default_str();
  rpca_cmd->add_option("--tol", rpca_opts.tol)->capture_default_str();

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Comparative benchmarks");
  bench_cmd->require_subcommand(1);
  auto* bench_synth = bench_cmd->add_subcommand("synthetic", "RMSE of RNLMF, RPCA and no denoising on synthetic data");
  bench_synth->add_option("--k", bench.k, "Number of manifolds")->capture_default_str();
  bench_synth->add_option("--m", bench.m, "Ambient dimension")->capture_default_str();
  bench_synth->add_option("--samples", bench.samples, "Samples per manifold")->capture_default_str();
  bench_synth->add_option("--rho-grid", bench.rho_grid, "Comma-separated corruption fractions")->capture_default_str();
  bench_synth->add_option("--seeds", bench.seeds, "Repetitions per fraction")->capture_default_str();
  bench_synth->add_option("--noise", bench.noise, "Noise model")
      ->check(CLI::IsMember({"sparse", "column", "saltpepper"}))
      ->capture_default_str();
  bench_synth->add_option("--sigma-e-ratio", bench.sigma_e_ratio)->capture_default_str();
  bench_synth->add_option("--rpca-lambda-grid", bench.rpca_lambda_grid, "RPCA lambda grid, in units of 1/sqrt(n)")
      ->capture_default_str();
  bench_synth->add_option("--out", bench.out, "Also write the table as CSV");
  bench.fit.attach(bench_synth, false);

  try {
    std::vector<std::string> args = expand_config_file(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth, out);
    if (denoise_cmd->parsed()) return run_denoise(denoise, out);
    if (ose_cmd->parsed()) return run_ose(ose, out);
    if (cluster_cmd->parsed()) return run_cluster(cluster, out);
    if (rpca_cmd->parsed()) return run_rpca(rpca_opts, out);
    if (bench_synth->parsed()) return run_bench_synthetic(bench, out);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace rnlmf::cli
