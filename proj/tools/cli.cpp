#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "json.hpp"
#include "ncmest/csv.hpp"
#include "ncmest/experiments.hpp"
#include "ncmest/rng.hpp"

namespace ncmest::cli {

namespace {

CorruptionMode corruption_mode_from(const std::string& s) {
  if (s == "none") return CorruptionMode::None;
  if (s == "additive") return CorruptionMode::AdditiveNoise;
  if (s == "missing") return CorruptionMode::Missing;
  throw ConfigError("unknown corruption mode '" + s + "'");
}

int env_threads() {
  if (const char* v = std::getenv("NONCONVEX_MEST_THREADS")) {
    const int n = std::atoi(v);
    if (n > 0) return n;
  }
  return 1;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// --- prox oracle -----------------------------------------------------------

double prox_objective(const PenaltySpec& s, double z, double nu, double x) {
  return 0.5 * (x - z) * (x - z) + nu * penalty_value(s, x);
}

// Dense grid bracket plus golden-section refinement; deliberately independent
// of the closed-form branch logic.
double prox_brute_force(const PenaltySpec& s, double z, double nu) {
  const auto f = [&](double x) { return prox_objective(s, z, nu, x); };
  const double lo = -std::abs(z) - 1.0;
  const double hi = std::abs(z) + 1.0;
  const double step = 1e-3;
  double best_x = lo, best_f = f(lo);
  for (double x = lo + step; x <= hi; x += step) {
    const double fx = f(x);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  double a = best_x - step, b = best_x + step;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 200 && (b - a) > 1e-14; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return f(x) < best_f ? x : best_x;
}

// --- solve -----------------------------------------------------------------

const std::vector<std::string> kSolveSchema = {
    "data.loss", "data.design", "data.response", "data.sigma_w_file", "data.vartheta",
    "data.sigma_hat", "data.n_samples",
    "simulate.p", "simulate.n", "simulate.k", "simulate.loss", "simulate.corruption",
    "simulate.sigma_w", "simulate.vartheta", "simulate.snr", "simulate.noise_sd",
    "simulate.zeta", "simulate.seed",
    "penalty.kind", "penalty.lambda", "penalty.a", "penalty.b", "penalty.c",
    "solver.eta", "solver.R", "solver.max_iters", "solver.tol_obj", "solver.tol_stat",
    "solver.psd_floor", "solver.backtrack", "solver.init", "solver.init_radius",
    "solver.init_seed", "solver.mode", "solver.stationarity_stride",
};

struct SolveSetup {
  LossHandle loss;
  PenaltySpec penalty;
  SolverConfig cfg;
  std::optional<Eigen::VectorXd> beta_star;
  double lambda = 0.0;
  std::string loss_kind;
};

SolveSetup build_solve_setup(const KvConfig& kv, std::optional<std::uint64_t> seed_override,
                             const std::string& penalty_override) {
  kv.check_schema(kSolveSchema);
  const bool have_data = !kv.get_string("data", "loss", "").empty() ||
                         kv.has("data", "design") || kv.has("data", "sigma_hat");

  std::optional<LossHandle> loss;
  std::optional<Eigen::VectorXd> beta_star;
  std::string loss_kind;
  int p = 0, n = 0;

  if (have_data) {
    loss_kind = kv.get_string("data", "loss", "linear");
    if (loss_kind == "glasso") {
      GlassoData gd;
      gd.sigma_hat = csv::read_matrix(kv.get_string("data", "sigma_hat", ""));
      gd.n_samples = kv.get_int("data", "n_samples", 0);
      p = static_cast<int>(gd.sigma_hat.rows());
      n = gd.n_samples;
      loss = LossHandle::glasso(std::move(gd));
    } else {
      const Eigen::MatrixXd Z = csv::read_matrix(kv.get_string("data", "design", ""));
      const Eigen::VectorXd y = csv::read_vector(kv.get_string("data", "response", ""));
      p = static_cast<int>(Z.cols());
      n = static_cast<int>(Z.rows());
      if (loss_kind == "logistic") {
        GlmData gd;
        gd.X = Z;
        gd.y = y;
        gd.family = GlmFamily::Logistic;
        loss = LossHandle::glm(std::move(gd));
      } else if (loss_kind == "linear") {
        if (Z.hasNaN()) {
          loss = LossHandle::corrected_linear(
              build_missing_gamma(Z, y, kv.get_double("data", "vartheta", 0.0)));
        } else {
          Eigen::MatrixXd sigma_w = Eigen::MatrixXd::Zero(p, p);
          const std::string swf = kv.get_string("data", "sigma_w_file", "");
          if (!swf.empty()) sigma_w = csv::read_matrix(swf);
          loss = LossHandle::corrected_linear(build_corrected_gamma(Z, y, sigma_w));
        }
      } else {
        throw ConfigError("data.loss must be linear, logistic or glasso");
      }
    }
  } else {
    // synthesize the instance from the [simulate] block
    loss_kind = kv.get_string("simulate", "loss", "linear");
    p = kv.get_int("simulate", "p", 128);
    const int k = kv.get_int("simulate", "k", -1);
    const int kk = k >= 0 ? k : static_cast<int>(std::floor(std::sqrt(double(p))));
    n = kv.get_int("simulate", "n", -1);
    if (n < 0) n = static_cast<int>(std::floor(20.0 * kk * std::log(double(p))));
    std::uint64_t seed = kv.get_u64("simulate", "seed", 1);
    if (seed_override) seed = *seed_override;

    TargetSpec ts;
    ts.p = p;
    ts.k = kk;
    ts.seed = child_seed(seed, 1);
    Eigen::VectorXd bstar = gen_target(ts);

    if (loss_kind == "glasso") {
      const int s = kv.get_int("simulate", "k", p);
      const PrecisionModel model = gen_sparse_precision(p, s, n, seed);
      GlassoData gd;
      gd.sigma_hat = model.sigma_hat;
      gd.n_samples = n;
      LossHandle h = LossHandle::glasso(std::move(gd));
      beta_star = h.from_matrix(model.theta_star);
      loss = std::move(h);
    } else {
      const double zeta = kv.get_double("simulate", "zeta", 0.0);
      DesignSpec ds;
      ds.n = n;
      ds.p = p;
      ds.cov = zeta > 0 ? DesignCov::Toeplitz : DesignCov::Identity;
      ds.zeta = zeta;
      ds.seed = child_seed(seed, 2);
      const Eigen::MatrixXd X = gen_design(ds);
      if (loss_kind == "logistic") {
        GlmData gd;
        gd.X = X;
        gd.y = gen_logistic_response(X, bstar, child_seed(seed, 3));
        gd.family = GlmFamily::Logistic;
        loss = LossHandle::glm(std::move(gd));
      } else {
        CorruptionSpec corr;
        corr.mode = corruption_mode_from(kv.get_string("simulate", "corruption", "additive"));
        corr.sigma_w = kv.get_double("simulate", "sigma_w", 0.2);
        corr.vartheta = kv.get_double("simulate", "vartheta", 0.0);
        corr.noise_sd = kv.get_double("simulate", "noise_sd", 0.1);
        const double snr = kv.get_double("simulate", "snr", 5.0);
        double noise_sd = corr.noise_sd;
        if (snr > 0) {
          noise_sd = zeta > 0 ? noise_sd_for_snr(bstar, toeplitz_covariance(p, zeta), snr)
                              : noise_sd_for_snr_identity(bstar, snr);
        }
        const Eigen::VectorXd y = gen_linear_response(X, bstar, noise_sd, child_seed(seed, 3));
        const Eigen::MatrixXd Z = corrupt(X, corr, child_seed(seed, 4));
        if (corr.mode == CorruptionMode::Missing) {
          loss = LossHandle::corrected_linear(build_missing_gamma(Z, y, corr.vartheta));
        } else {
          Eigen::MatrixXd sigma_w = Eigen::MatrixXd::Zero(p, p);
          if (corr.mode == CorruptionMode::AdditiveNoise)
            sigma_w = corr.sigma_w * corr.sigma_w * Eigen::MatrixXd::Identity(p, p);
          loss = LossHandle::corrected_linear(build_corrected_gamma(Z, y, sigma_w));
        }
      }
      beta_star = std::move(bstar);
    }
  }

  SolveSetup setup{std::move(*loss), PenaltySpec{}, SolverConfig{}, std::move(beta_star), 0.0,
                   loss_kind};

  const std::string lam_str = kv.get_string("penalty", "lambda", "auto");
  if (lam_str == "auto") {
    if (n <= 0)
      throw ConfigError("penalty.lambda = auto needs a sample count (set data.n_samples)");
    setup.lambda = default_lambda(p, n);
  } else {
    setup.lambda = kv.get_double("penalty", "lambda", 0.1);
  }
  std::string pkind = kv.get_string("penalty", "kind", "l1");
  if (!penalty_override.empty()) pkind = penalty_override;
  setup.penalty = PenaltySpec::make(pkind, setup.lambda, kv.get_double("penalty", "a", 3.7),
                                    kv.get_double("penalty", "b", 3.5),
                                    kv.get_double("penalty", "c", 2.0));

  SolverConfig& cfg = setup.cfg;
  cfg.eta = kv.get_double("solver", "eta", 1.0);
  cfg.max_iters = kv.get_int("solver", "max_iters", 2000);
  cfg.tol_obj = kv.get_double("solver", "tol_obj", 1e-10);
  cfg.tol_stat = kv.get_double("solver", "tol_stat", 1e-6);
  cfg.psd_floor = kv.get_double("solver", "psd_floor", 1e-6);
  cfg.backtrack = kv.get_bool("solver", "backtrack", true);
  cfg.stationarity_stride = kv.get_int("solver", "stationarity_stride", 1);
  const std::string mode = kv.get_string("solver", "mode", "strict");
  cfg.mode = mode == "experimental" ? SolverMode::ExperimentalCappedL1 : SolverMode::Strict;
  if (setup.penalty.kind == PenaltyKind::CappedL1) cfg.mode = SolverMode::ExperimentalCappedL1;

  const std::string R_str = kv.get_string("solver", "R", "auto");
  if (R_str == "auto") {
    if (!setup.beta_star)
      throw ConfigError("solver.R = auto needs a known target; set solver.R explicitly");
    cfg.R = default_radius(setup.penalty, cfg.mode, *setup.beta_star);
  } else {
    cfg.R = kv.get_double("solver", "R", 1.0);
  }

  const std::string init = kv.get_string("solver", "init", setup.loss_kind == "glasso"
                                                               ? "identity"
                                                               : "zero");
  if (init == "zero") {
    cfg.init = InitSpec::zero();
  } else if (init == "identity") {
    if (setup.loss_kind != "glasso")
      throw ConfigError("solver.init = identity only applies to the graphical lasso");
    cfg.init = InitSpec::from(setup.loss.from_matrix(Eigen::MatrixXd::Identity(p, p)));
  } else if (init == "random") {
    std::uint64_t iseed = kv.get_u64("solver", "init_seed", 7);
    if (seed_override) iseed = child_seed(*seed_override, 900);
    cfg.init = InitSpec::random_ball(kv.get_double("solver", "init_radius", 1.5), iseed);
  } else {
    throw ConfigError("solver.init must be zero, identity or random");
  }
  if (setup.beta_star) cfg.trace_star = *setup.beta_star;
  return setup;
}

int cmd_solve(const KvConfig& kv, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override, const std::string& penalty_override,
              std::ostream& out) {
  SolveSetup setup = build_solve_setup(kv, seed_override, penalty_override);
  const StationaryPoint sp = ncmest::run(setup.loss, setup.penalty, setup.cfg);

  std::filesystem::create_directories(out_dir);
  if (setup.loss.matrix_domain())
    csv::write_matrix(out_dir + "/solution.csv", setup.loss.as_matrix(sp.beta));
  else
    csv::write_vector(out_dir + "/solution.csv", sp.beta);

  std::string trace = "iter,objective,opt_error,stat_error,eta,projected_flag\n";
  for (const auto& row : sp.trace) {
    trace += std::to_string(row.iter) + ',' + csv::fmt(row.objective) + ',' +
             csv::fmt(row.opt_error) + ',' + csv::fmt(row.stat_error) + ',' +
             csv::fmt(row.eta) + ',' + (row.projected ? "1" : "0") + '\n';
  }
  csv::write_text(out_dir + "/trace.csv", trace);

  nlohmann::ordered_json summary;
  summary["converged"] = sp.converged;
  summary["reason"] = sp.reason == StopReason::Stationary ? "stationary"
                      : sp.reason == StopReason::ObjectivePlateau ? "objective_plateau"
                                                                  : "max_iters";
  summary["iterations"] = sp.iterations;
  summary["objective"] = sp.objective;
  summary["residual"] = sp.residual;
  summary["lambda"] = setup.lambda;
  summary["R"] = setup.cfg.R;
  summary["penalty"] = setup.penalty.name();
  summary["loss"] = setup.loss_kind;
  if (setup.beta_star) summary["stat_error"] = (sp.beta - *setup.beta_star).norm();
  csv::write_text(out_dir + "/summary.json", summary.dump(2) + "\n");

  out << (sp.converged ? "converged" : "not converged") << " after " << sp.iterations
      << " iterations, objective " << csv::fmt_short(sp.objective) << ", residual "
      << csv::fmt_short(sp.residual) << "\n";
  return sp.converged ? kOk : kNotConverged;
}

// --- simulate --------------------------------------------------------------

const std::vector<std::string> kSimulateSchema = {
    "simulate.p", "simulate.n", "simulate.k", "simulate.loss", "simulate.corruption",
    "simulate.sigma_w", "simulate.vartheta", "simulate.snr", "simulate.noise_sd",
    "simulate.zeta", "simulate.seed", "simulate.glasso_s",
};

int cmd_simulate(const KvConfig& kv, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override, std::ostream& out) {
  kv.check_schema(kSimulateSchema);
  const int p = kv.get_int("simulate", "p", 64);
  const int k = kv.get_int("simulate", "k", -1);
  const int kk = k >= 0 ? k : static_cast<int>(std::floor(std::sqrt(double(p))));
  int n = kv.get_int("simulate", "n", -1);
  if (n < 0) n = static_cast<int>(std::floor(20.0 * kk * std::log(double(p))));
  std::uint64_t seed = kv.get_u64("simulate", "seed", 1);
  if (seed_override) seed = *seed_override;
  const std::string loss_kind = kv.get_string("simulate", "loss", "linear");

  std::filesystem::create_directories(out_dir);
  nlohmann::ordered_json manifest;
  manifest["p"] = p;
  manifest["n"] = n;
  manifest["k"] = kk;
  manifest["seed"] = seed;
  manifest["loss"] = loss_kind;

  if (loss_kind == "glasso") {
    const int s = kv.get_int("simulate", "glasso_s", p);
    const PrecisionModel model = gen_sparse_precision(p, s, n, seed);
    csv::write_matrix(out_dir + "/sigma_hat.csv", model.sigma_hat);
    csv::write_matrix(out_dir + "/theta_star.csv", model.theta_star);
    csv::write_matrix(out_dir + "/samples.csv", model.samples);
    manifest["files"] = {"sigma_hat.csv", "theta_star.csv", "samples.csv"};
  } else {
    TargetSpec ts;
    ts.p = p;
    ts.k = kk;
    ts.seed = child_seed(seed, 1);
    const Eigen::VectorXd beta_star = gen_target(ts);
    const double zeta = kv.get_double("simulate", "zeta", 0.0);
    DesignSpec ds;
    ds.n = n;
    ds.p = p;
    ds.cov = zeta > 0 ? DesignCov::Toeplitz : DesignCov::Identity;
    ds.zeta = zeta;
    ds.seed = child_seed(seed, 2);
    const Eigen::MatrixXd X = gen_design(ds);

    Eigen::VectorXd y;
    if (loss_kind == "logistic") {
      y = gen_logistic_response(X, beta_star, child_seed(seed, 3));
    } else {
      CorruptionSpec corr;
      corr.noise_sd = kv.get_double("simulate", "noise_sd", 0.1);
      const double snr = kv.get_double("simulate", "snr", 5.0);
      double noise_sd = corr.noise_sd;
      if (snr > 0)
        noise_sd = zeta > 0 ? noise_sd_for_snr(beta_star, toeplitz_covariance(p, zeta), snr)
                            : noise_sd_for_snr_identity(beta_star, snr);
      manifest["noise_sd"] = noise_sd;
      y = gen_linear_response(X, beta_star, noise_sd, child_seed(seed, 3));
    }

    csv::write_matrix(out_dir + "/design.csv", X);
    csv::write_vector(out_dir + "/response.csv", y);
    csv::write_vector(out_dir + "/beta_star.csv", beta_star);
    manifest["files"] = {"design.csv", "response.csv", "beta_star.csv"};

    CorruptionSpec corr;
    corr.mode = corruption_mode_from(kv.get_string("simulate", "corruption", "none"));
    corr.sigma_w = kv.get_double("simulate", "sigma_w", 0.2);
    corr.vartheta = kv.get_double("simulate", "vartheta", 0.0);
    if (corr.mode != CorruptionMode::None) {
      const Eigen::MatrixXd Z = corrupt(X, corr, child_seed(seed, 4));
      csv::write_matrix(out_dir + "/corrupted.csv", Z);
      manifest["files"].push_back("corrupted.csv");
      if (corr.mode == CorruptionMode::AdditiveNoise) {
        csv::write_matrix(out_dir + "/sigma_w.csv",
                          corr.sigma_w * corr.sigma_w * Eigen::MatrixXd::Identity(p, p));
        manifest["files"].push_back("sigma_w.csv");
      }
    }
  }
  csv::write_text(out_dir + "/manifest.json", manifest.dump(2) + "\n");
  out << "wrote dataset to " << out_dir << "\n";
  return kOk;
}

// --- experiment ------------------------------------------------------------

int cmd_experiment(const std::string& kind_arg, const std::string& config_path,
                   const std::string& out_dir, std::optional<std::uint64_t> seed_override,
                   int threads, const std::string& penalty_override, std::ostream& out) {
  ExperimentConfig cfg;
  if (!config_path.empty()) {
    cfg = ends_with(config_path, ".json")
              ? load_experiment_metadata(config_path)
              : experiment_config_from_kv(KvConfig::parse_file(config_path));
  }
  if (!kind_arg.empty()) {
    if (kind_arg != "scaling" && kind_arg != "convergence" && kind_arg != "breakdown" &&
        kind_arg != "glasso")
      throw ConfigError("unknown experiment kind '" + kind_arg + "'");
    cfg.kind = kind_arg;
  }
  if (seed_override) {
    cfg.seed = *seed_override;
    cfg.scaling.seed = *seed_override;
    cfg.convergence.seed = *seed_override;
    cfg.breakdown.seed = *seed_override;
    cfg.glasso.seed = *seed_override;
  }
  if (threads > 0) cfg.threads = threads;
  if (!penalty_override.empty()) {
    cfg.scaling.penalties = {{penalty_override}};
    cfg.convergence.penalty.kind = penalty_override;
    cfg.glasso.penalty.kind = penalty_override;
  }

  const ExperimentReport rep = run_experiment(cfg);
  rep.write(out_dir);
  out << "experiment " << cfg.kind << ": " << rep.rows.size() << " records written to "
      << out_dir << "\n";
  return kOk;
}

}  // namespace

int prox_check(const std::string& penalty_filter, std::uint64_t seed, std::ostream& out,
               const ProxFn& impl) {
  const ProxFn closed =
      impl ? impl : [](const PenaltySpec& s, double z, double nu) { return prox_scalar(s, z, nu); };
  bool all_ok = true;
  const std::vector<std::string> kinds = {"l1", "scad", "mcp", "capped"};
  for (size_t ki = 0; ki < kinds.size(); ++ki) {
    const std::string& kind = kinds[ki];
    if (!penalty_filter.empty() && penalty_filter != kind) continue;
    Rng rng(child_seed(seed, ki));
    double worst = 0.0;
    struct Worst {
      double lambda, nu, z, x_closed, x_oracle, f_closed, f_oracle;
    } worst_case{};
    for (int i = 0; i < 1000; ++i) {
      const double lambda = rng.uniform(0.1, 2.0);
      const PenaltySpec s = PenaltySpec::make(kind, lambda);
      const double nu_hi = std::min(1.0, std::min(s.a - 1.0, s.b)) - 0.05;
      const double nu = rng.uniform(0.1, nu_hi);
      const double z = rng.uniform(-10.0, 10.0);
      const double x_closed = closed(s, z, nu);
      const double x_oracle = prox_brute_force(s, z, nu);
      const double f_closed = prox_objective(s, z, nu, x_closed);
      const double f_oracle = prox_objective(s, z, nu, x_oracle);
      const double dev = f_closed - f_oracle;  // positive means closed form is worse
      if (dev > worst) {
        worst = dev;
        worst_case = {lambda, nu, z, x_closed, x_oracle, f_closed, f_oracle};
      }
    }
    out << kind << ": max objective deviation " << csv::fmt_short(worst) << "\n";
    if (worst > 1e-8) {
      all_ok = false;
      out << "  worst instance: lambda=" << csv::fmt(worst_case.lambda)
          << " nu=" << csv::fmt(worst_case.nu) << " z=" << csv::fmt(worst_case.z)
          << " closed_x=" << csv::fmt(worst_case.x_closed)
          << " oracle_x=" << csv::fmt(worst_case.x_oracle)
          << " closed_f=" << csv::fmt(worst_case.f_closed)
          << " oracle_f=" << csv::fmt(worst_case.f_oracle) << "\n";
    }
  }
  return all_ok ? kOk : kVerificationFailure;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Composite gradient descent for high-dimensional regularized M-estimation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 0;
  std::string penalty;
  std::vector<CLI::Option*> seed_opts;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key-value config file");
    sub->add_option("--out", out_dir, "output directory (all artifacts land here)");
    seed_opts.push_back(sub->add_option("--seed", seed, "seed override")->group("Overrides"));
    sub->add_option("--threads", threads,
                    "worker threads (default: NONCONVEX_MEST_THREADS or 1)")
        ->group("Overrides");
    sub->add_option("--penalty", penalty, "penalty override/filter: l1|scad|mcp|capped")
        ->group("Overrides");
  };

  auto* solve = app.add_subcommand(
      "solve", "Solve one penalized M-estimation instance from a config file");
  solve->footer(
      "Config keys ([section].key = default):\n"
      "  [data]     loss=linear|logistic|glasso, design=, response=, sigma_w_file=,\n"
      "             vartheta=0, sigma_hat=, n_samples=0 (missing marks: literal NA)\n"
      "  [simulate] p=128, n=floor(20 k log p), k=floor(sqrt(p)), loss=linear,\n"
      "             corruption=additive, sigma_w=0.2, vartheta=0, snr=5,\n"
      "             noise_sd=0.1, zeta=0, seed=1\n"
      "  [penalty]  kind=l1, lambda=auto (sqrt(log p / n)), a=3.7, b=3.5, c=2\n"
      "  [solver]   eta=1, R=auto (1.1 x side function of the target), max_iters=2000,\n"
      "             tol_obj=1e-10, tol_stat=1e-6, psd_floor=1e-6, backtrack=true,\n"
      "             init=zero|identity|random, init_radius=1.5, init_seed=7,\n"
      "             mode=strict|experimental, stationarity_stride=1");
  add_common(solve);

  auto* simulate =
      app.add_subcommand("simulate", "Generate a synthetic dataset and write it as CSV");
  simulate->footer(
      "Config keys: [simulate] p=64, n=floor(20 k log p), k=floor(sqrt(p)),\n"
      "  loss=linear|logistic|glasso, corruption=none|additive|missing, sigma_w=0.2,\n"
      "  vartheta=0, snr=5, noise_sd=0.1, zeta=0, glasso_s=p, seed=1\n"
      "Missing entries are written as the literal token NA.");
  add_common(simulate);

  auto* prox = app.add_subcommand(
      "prox-check", "Verify closed-form prox maps against a brute-force oracle");
  add_common(prox);

  auto* exper = app.add_subcommand("experiment", "Run an experiment family");
  std::string kind;
  exper->add_option("kind", kind, "scaling|convergence|breakdown|glasso");
  exper->footer(
      "Config keys ([section].key = default):\n"
      "  [experiment] kind=scaling, seed=1, trials=20 (10 for glasso), threads=1\n"
      "  [penalty]    kinds=l1,scad,mcp (scaling) | kind=l1, a=3.7, b=3.5, c=2\n"
      "  [simulate]   p_list=64,128,256, grid=2,4,6,8,10, corruption=additive,\n"
      "               sigma_w=0.2, vartheta=0, snr=5, noise_sd=0.1,\n"
      "               p=128, k=-1, n=-1, n_inits=10, loss=linear, init_radius=1.5,\n"
      "               zeta_list=0.5,0.9, a_list=2.5, glasso_p=30, glasso_s=30,\n"
      "               n_list=200,800,3200\n"
      "  [solver]     eta=1, max_iters=2000, tol_obj=1e-10, tol_stat=1e-6,\n"
      "               psd_floor=1e-6, backtrack=true, stationarity_stride=1\n"
      "A metadata.json written by a previous run can be passed as --config to\n"
      "reproduce that run exactly.");
  add_common(exper);

  try {
    std::vector<std::string> mutable_args = args;
    std::reverse(mutable_args.begin(), mutable_args.end());  // CLI11 wants reversed order
    app.parse(mutable_args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  std::optional<std::uint64_t> seed_override;
  for (const CLI::Option* opt : seed_opts)
    if (opt->count() > 0) seed_override = seed;
  if (threads <= 0) threads = env_threads();

  try {
    if (solve->parsed()) {
      if (config_path.empty()) throw ConfigError("solve requires --config");
      return cmd_solve(KvConfig::parse_file(config_path), out_dir, seed_override, penalty,
                       out);
    }
    if (simulate->parsed()) {
      KvConfig kv =
          config_path.empty() ? KvConfig::parse_string("") : KvConfig::parse_file(config_path);
      return cmd_simulate(kv, out_dir, seed_override, out);
    }
    if (prox->parsed()) {
      return prox_check(penalty, seed_override.value_or(12345), out);
    }
    if (exper->parsed()) {
      return cmd_experiment(kind, config_path, out_dir, seed_override, threads, penalty, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace ncmest::cli
