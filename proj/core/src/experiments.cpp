#include "ncmest/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "ncmest/csv.hpp"
#include "ncmest/rng.hpp"

namespace ncmest {

namespace {

using csv::fmt_short;

std::string cell(double x) { return fmt_short(x); }
std::string cell(int x) { return std::to_string(x); }
std::string cell(std::uint64_t x) { return std::to_string(x); }
std::string cell(bool x) { return x ? "1" : "0"; }
std::string cell(const std::string& x) { return x; }

std::string join_csv(const std::vector<std::string>& cells) {
  std::string out;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

std::string table_csv(const std::vector<std::string>& columns,
                      const std::vector<std::vector<std::string>>& rows) {
  std::string out = join_csv(columns);
  for (const auto& r : rows) out += join_csv(r);
  return out;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

int resolve_k(int p, int k) {
  return k >= 0 ? k : static_cast<int>(std::floor(std::sqrt(static_cast<double>(p))));
}

int resolve_n(int p, int k, int n, double factor) {
  if (n >= 0) return n;
  return static_cast<int>(std::floor(factor * k * std::log(static_cast<double>(p))));
}

struct VectorProblem {
  Eigen::VectorXd beta_star;
  LossHandle loss;
  double lambda = 0.0;
  int n = 0, p = 0, k = 0;
};

VectorProblem build_linear_problem(int p, int k, int n, const CorruptionSpec& corruption,
                                   double snr, double zeta, std::uint64_t seed) {
  TargetSpec ts;
  ts.p = p;
  ts.k = k;
  ts.seed = child_seed(seed, 1);
  Eigen::VectorXd beta_star = gen_target(ts);

  DesignSpec ds;
  ds.n = n;
  ds.p = p;
  ds.cov = zeta > 0.0 ? DesignCov::Toeplitz : DesignCov::Identity;
  ds.zeta = zeta;
  ds.seed = child_seed(seed, 2);
  const Eigen::MatrixXd X = gen_design(ds);

  double noise_sd = corruption.noise_sd;
  if (snr > 0.0) {
    noise_sd = zeta > 0.0
                   ? noise_sd_for_snr(beta_star, toeplitz_covariance(p, zeta), snr)
                   : noise_sd_for_snr_identity(beta_star, snr);
  }
  const Eigen::VectorXd y = gen_linear_response(X, beta_star, noise_sd, child_seed(seed, 3));
  const Eigen::MatrixXd Z = corrupt(X, corruption, child_seed(seed, 4));

  CorrectedLinearData data;
  if (corruption.mode == CorruptionMode::Missing) {
    data = build_missing_gamma(Z, y, corruption.vartheta);
  } else {
    Eigen::MatrixXd sigma_w = Eigen::MatrixXd::Zero(p, p);
    if (corruption.mode == CorruptionMode::AdditiveNoise)
      sigma_w = corruption.sigma_w * corruption.sigma_w * Eigen::MatrixXd::Identity(p, p);
    data = build_corrected_gamma(Z, y, sigma_w);
  }

  VectorProblem prob{std::move(beta_star), LossHandle::corrected_linear(std::move(data)),
                     default_lambda(p, n), n, p, k};
  return prob;
}

VectorProblem build_logistic_problem(int p, int k, int n, std::uint64_t seed) {
  TargetSpec ts;
  ts.p = p;
  ts.k = k;
  ts.seed = child_seed(seed, 1);
  Eigen::VectorXd beta_star = gen_target(ts);

  DesignSpec ds;
  ds.n = n;
  ds.p = p;
  ds.seed = child_seed(seed, 2);
  GlmData data;
  data.X = gen_design(ds);
  data.y = gen_logistic_response(data.X, beta_star, child_seed(seed, 3));
  data.family = GlmFamily::Logistic;

  VectorProblem prob{std::move(beta_star), LossHandle::glm(std::move(data)),
                     default_lambda(p, n), n, p, k};
  return prob;
}

PenaltySpec make_penalty(const PenaltyChoice& c, double lambda) {
  return PenaltySpec::make(c.kind, lambda, c.a, c.b, c.c);
}

SolverConfig base_config(const SolverSettings& s, double R, SolverMode mode) {
  SolverConfig cfg;
  cfg.eta = s.eta;
  cfg.R = R;
  cfg.max_iters = s.max_iters;
  cfg.tol_obj = s.tol_obj;
  cfg.tol_stat = s.tol_stat;
  cfg.psd_floor = s.psd_floor;
  cfg.backtrack = s.backtrack;
  cfg.stationarity_stride = s.stationarity_stride;
  cfg.mode = mode;
  return cfg;
}

// Single-linkage clustering of solution vectors: labels distinct stationary
// points up to the given l2 tolerance (labels are dense, in first-seen order).
std::vector<int> cluster_labels(const std::vector<Eigen::VectorXd>& points, double tol) {
  const int m = static_cast<int>(points.size());
  std::vector<int> parent(static_cast<size_t>(m));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<size_t>(x)] != x) x = parent[static_cast<size_t>(x)];
    return x;
  };
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if ((points[static_cast<size_t>(i)] - points[static_cast<size_t>(j)]).norm() <= tol)
        parent[static_cast<size_t>(find(i))] = find(j);
  std::vector<int> labels(static_cast<size_t>(m), -1);
  int next = 0;
  for (int i = 0; i < m; ++i) {
    const int root = find(i);
    if (labels[static_cast<size_t>(root)] < 0) labels[static_cast<size_t>(root)] = next++;
    labels[static_cast<size_t>(i)] = labels[static_cast<size_t>(root)];
  }
  return labels;
}

nlohmann::ordered_json kv_to_json(const KvConfig& kv) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& [section, entries] : kv.sections()) {
    nlohmann::ordered_json sec = nlohmann::ordered_json::object();
    for (const auto& [key, value] : entries) sec[key] = value;
    out[section] = sec;
  }
  return out;
}

std::string build_metadata(const std::string& kind, const ExperimentConfig& cfg) {
  nlohmann::ordered_json meta;
  meta["version"] = kVersion;
  meta["kind"] = kind;
  meta["config"] = kv_to_json(experiment_config_to_kv(cfg));
  return meta.dump(2) + "\n";
}

std::string list_to_string(const std::vector<int>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

std::string list_to_string(const std::vector<double>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt_short(xs[i]);
  }
  return out;
}

const char* corruption_name(CorruptionMode m) {
  switch (m) {
    case CorruptionMode::None:
      return "none";
    case CorruptionMode::AdditiveNoise:
      return "additive";
    case CorruptionMode::Missing:
      return "missing";
  }
  return "?";
}

CorruptionMode corruption_from_name(const std::string& s) {
  if (s == "none") return CorruptionMode::None;
  if (s == "additive") return CorruptionMode::AdditiveNoise;
  if (s == "missing") return CorruptionMode::Missing;
  throw ConfigError("unknown corruption mode '" + s + "'");
}

}  // namespace

double default_lambda(int p, int n) {
  return std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

double default_radius(const PenaltySpec& penalty, SolverMode mode,
                      const Eigen::VectorXd& beta_star) {
  return 1.1 * constraint_value(penalty, mode, beta_star);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit out;
  const size_t m = std::min(x.size(), y.size());
  out.n = static_cast<int>(m);
  if (m < 2) return out;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < m; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double n = static_cast<double>(m);
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  const double cxy = sxy - sx * sy / n;
  if (vx <= 0.0) return out;
  out.slope = cxy / vx;
  out.intercept = (sy - out.slope * sx) / n;
  out.r2 = vy > 0.0 ? (cxy * cxy) / (vx * vy) : 1.0;
  return out;
}

int plateau_knee(const std::vector<double>& errors) {
  if (errors.empty()) return 0;
  const double level = 1.1 * errors.back();
  for (size_t i = 0; i < errors.size(); ++i)
    if (errors[i] <= level) return static_cast<int>(i);
  return static_cast<int>(errors.size());
}

std::vector<BoundCheck> check_error_bounds(const LossHandle& loss,
                                           const Eigen::VectorXd& beta_tilde,
                                           const Eigen::VectorXd& beta_star,
                                           const PenaltySpec& penalty, const RscFit& rsc) {
  const double lam = penalty.lambda;
  const double L = penalty.L();
  int k = 0;
  for (Eigen::Index j = 0; j < beta_star.size(); ++j)
    if (beta_star[j] != 0.0) ++k;

  const Eigen::VectorXd diff = beta_tilde - beta_star;
  BoundCheck l2{"l2", diff.norm(), 0.0, false, false};
  BoundCheck l1{"l1", diff.lpNorm<1>(), 0.0, false, false};
  BoundCheck pred{"prediction", prediction_error(loss, beta_tilde, beta_star), 0.0, false,
                  false};

  const double sqk = std::sqrt(static_cast<double>(k));
  if (penalty.kind == PenaltyKind::CappedL1) {
    const double mu12 = penalty.mu1() + penalty.mu2();
    const double d1 = 2.0 * rsc.alpha1 - mu12;  // and d2 = 2*d1
    if (rsc.ok && d1 > 0.0) {
      l2.applicable = l1.applicable = pred.applicable = true;
      l2.rhs = 7.0 * lam * L * sqk / (2.0 * d1);
      l1.rhs = 28.0 * lam * L * k / d1;
      pred.rhs = lam * lam * L * L * k * (21.0 / (4.0 * d1) + 49.0 * mu12 / (8.0 * d1 * d1));
    }
  } else {
    const double mu = penalty.mu();
    const double denom = 4.0 * rsc.alpha1 - 3.0 * mu;
    if (rsc.ok && denom > 0.0) {
      l2.applicable = l1.applicable = pred.applicable = true;
      l2.rhs = 6.0 * lam * L * sqk / denom;
      l1.rhs = 24.0 * lam * L * k / denom;
      pred.rhs = lam * lam * L * L * k * (9.0 / denom + 27.0 * mu / (denom * denom));
    }
  }
  const double slack = 1e-12;
  l2.satisfied = l2.applicable && l2.lhs <= l2.rhs + slack;
  l1.satisfied = l1.applicable && l1.lhs <= l1.rhs + slack;
  pred.satisfied = pred.applicable && pred.lhs <= pred.rhs + slack;
  return {l2, l1, pred};
}

std::string ExperimentReport::records_csv() const { return table_csv(columns, rows); }
std::string ExperimentReport::summary_csv() const {
  return table_csv(summary_columns, summary_rows);
}
std::string ExperimentReport::curves_csv() const { return table_csv(curve_columns, curve_rows); }

void ExperimentReport::write(const std::string& out_dir) const {
  std::filesystem::create_directories(out_dir);
  csv::write_text(out_dir + "/records.csv", records_csv());
  csv::write_text(out_dir + "/summary.csv", summary_csv());
  if (!curve_columns.empty()) csv::write_text(out_dir + "/curves.csv", curves_csv());
  csv::write_text(out_dir + "/metadata.json", metadata_json);
  for (const auto& [stem, fig] : figures) plot::write_figure(fig, out_dir, stem);
}

// ---------------------------------------------------------------------------
// scaling

ExperimentReport run_scaling(const ScalingRun& run, const SolverSettings& s, int threads) {
  if (run.p_list.empty() || run.rescaled_samples.empty() || run.trials < 1)
    throw std::invalid_argument("run_scaling: empty grid");

  struct Cell {
    int p, k, n, trial;
    double grid;
    std::uint64_t seed;
    // one entry per penalty
    std::vector<double> l2, l1, pred, objective, residual;
    std::vector<int> iters;
    std::vector<bool> converged;
    std::vector<bool> cone_ok;
    std::vector<bool> failed;
  };

  const int n_pen = static_cast<int>(run.penalties.size());
  const int n_tasks = static_cast<int>(run.p_list.size() * run.rescaled_samples.size()) *
                      run.trials;
  std::vector<Cell> cells(static_cast<size_t>(n_tasks));

  parallel_for(n_tasks, threads, [&](int idx) {
    const int per_p = static_cast<int>(run.rescaled_samples.size()) * run.trials;
    const int pi = idx / per_p;
    const int gi = (idx % per_p) / run.trials;
    const int trial = idx % run.trials;

    Cell& c = cells[static_cast<size_t>(idx)];
    c.p = run.p_list[static_cast<size_t>(pi)];
    c.k = resolve_k(c.p, -1);
    c.grid = run.rescaled_samples[static_cast<size_t>(gi)];
    c.n = static_cast<int>(std::floor(c.grid * c.k * std::log(static_cast<double>(c.p))));
    c.trial = trial;
    c.seed = child_seed(run.seed, static_cast<std::uint64_t>(idx));

    const VectorProblem prob =
        build_linear_problem(c.p, c.k, c.n, run.corruption, run.snr, 0.0, c.seed);
    for (int q = 0; q < n_pen; ++q) {
      const PenaltySpec pen = make_penalty(run.penalties[static_cast<size_t>(q)], prob.lambda);
      const SolverMode mode = pen.kind == PenaltyKind::CappedL1
                                  ? SolverMode::ExperimentalCappedL1
                                  : SolverMode::Strict;
      SolverConfig cfg = base_config(s, default_radius(pen, mode, prob.beta_star), mode);
      cfg.init = InitSpec::zero();
      try {
        const StationaryPoint sp = ncmest::run(prob.loss, pen, cfg);
        const double l2 = (sp.beta - prob.beta_star).norm();
        const double l1 = (sp.beta - prob.beta_star).lpNorm<1>();
        c.l2.push_back(l2);
        c.l1.push_back(l1);
        c.pred.push_back(prediction_error(prob.loss, sp.beta, prob.beta_star));
        c.objective.push_back(sp.objective);
        c.residual.push_back(sp.residual);
        c.iters.push_back(sp.iterations);
        c.converged.push_back(sp.converged);
        // cone relation l1 <= 4 sqrt(k) l2, checked with slack 1.5 and
        // logged, never fatal
        c.cone_ok.push_back(l2 == 0.0 ||
                            l1 <= 1.5 * 4.0 * std::sqrt(static_cast<double>(c.k)) * l2);
        c.failed.push_back(false);
      } catch (const std::exception&) {
        // solver failures are data, not fatal
        c.l2.push_back(std::nan(""));
        c.l1.push_back(std::nan(""));
        c.pred.push_back(std::nan(""));
        c.objective.push_back(std::nan(""));
        c.residual.push_back(std::nan(""));
        c.iters.push_back(0);
        c.converged.push_back(false);
        c.cone_ok.push_back(false);
        c.failed.push_back(true);
      }
    }
  });

  ExperimentReport rep;
  rep.kind = "scaling";
  rep.columns = {"penalty", "p",         "k",        "n",          "grid",
                 "trial",   "seed",      "l2_error", "l1_error",   "pred_error",
                 "objective", "residual", "iterations", "converged", "cone_ok", "failed"};
  for (const auto& c : cells)
    for (int q = 0; q < n_pen; ++q) {
      const auto& name = run.penalties[static_cast<size_t>(q)].kind;
      rep.rows.push_back({cell(name), cell(c.p), cell(c.k), cell(c.n), cell(c.grid),
                          cell(c.trial), cell(c.seed), cell(c.l2[static_cast<size_t>(q)]),
                          cell(c.l1[static_cast<size_t>(q)]),
                          cell(c.pred[static_cast<size_t>(q)]),
                          cell(c.objective[static_cast<size_t>(q)]),
                          cell(c.residual[static_cast<size_t>(q)]),
                          cell(c.iters[static_cast<size_t>(q)]),
                          cell(static_cast<bool>(c.converged[static_cast<size_t>(q)])),
                          cell(static_cast<bool>(c.cone_ok[static_cast<size_t>(q)])),
                          cell(static_cast<bool>(c.failed[static_cast<size_t>(q)]))});
    }

  // per-(penalty, p, grid) aggregates
  rep.summary_columns = {"penalty", "p",       "grid",    "n",      "trials",
                         "mean_l2", "se_l2",   "mean_l1", "mean_pred"};
  for (int q = 0; q < n_pen; ++q)
    for (size_t pi = 0; pi < run.p_list.size(); ++pi)
      for (size_t gi = 0; gi < run.rescaled_samples.size(); ++gi) {
        double sum = 0, sum2 = 0, suml1 = 0, sumpred = 0;
        int m = 0, n_cell = 0;
        for (const auto& c : cells) {
          if (c.p != run.p_list[pi] || c.grid != run.rescaled_samples[gi]) continue;
          n_cell = c.n;
          const double v = c.l2[static_cast<size_t>(q)];
          if (std::isnan(v)) continue;
          sum += v;
          sum2 += v * v;
          suml1 += c.l1[static_cast<size_t>(q)];
          sumpred += c.pred[static_cast<size_t>(q)];
          ++m;
        }
        const double mean = m > 0 ? sum / m : std::nan("");
        const double var = m > 1 ? (sum2 - sum * sum / m) / (m - 1) : 0.0;
        const double se = m > 1 ? std::sqrt(std::max(var, 0.0) / m) : std::nan("");
        rep.summary_rows.push_back({cell(run.penalties[static_cast<size_t>(q)].kind),
                                    cell(run.p_list[pi]), cell(run.rescaled_samples[gi]),
                                    cell(n_cell), cell(m), cell(mean), cell(se),
                                    cell(m > 0 ? suml1 / m : std::nan("")),
                                    cell(m > 0 ? sumpred / m : std::nan(""))});
      }

  plot::Figure fig;
  fig.title = "Estimation error vs rescaled sample size";
  fig.xlabel = "n / (k log p)";
  fig.ylabel = "mean ||est - target||_2";
  for (int q = 0; q < n_pen; ++q)
    for (size_t pi = 0; pi < run.p_list.size(); ++pi) {
      plot::Series ser;
      ser.label = run.penalties[static_cast<size_t>(q)].kind + " p=" +
                  std::to_string(run.p_list[pi]);
      for (const auto& row : rep.summary_rows) {
        if (row[0] != run.penalties[static_cast<size_t>(q)].kind ||
            row[1] != std::to_string(run.p_list[pi]))
          continue;
        ser.x.push_back(std::strtod(row[2].c_str(), nullptr));
        ser.y.push_back(std::strtod(row[5].c_str(), nullptr));
      }
      fig.series.push_back(std::move(ser));
    }
  rep.figures.emplace_back("scaling", std::move(fig));
  return rep;
}

// ---------------------------------------------------------------------------
// convergence

ExperimentReport run_convergence(const ConvergenceRun& run, const SolverSettings& s,
                                 int threads) {
  const int k = resolve_k(run.p, run.k);
  const int n = resolve_n(run.p, k, run.n, 20.0);
  if (run.n_inits < 1) throw std::invalid_argument("run_convergence: n_inits must be >= 1");

  const VectorProblem prob =
      run.loss == "logistic"
          ? build_logistic_problem(run.p, k, n, run.seed)
          : build_linear_problem(run.p, k, n, run.corruption, run.snr, 0.0, run.seed);
  const PenaltySpec pen = make_penalty(run.penalty, prob.lambda);
  const SolverMode mode =
      pen.kind == PenaltyKind::CappedL1 ? SolverMode::ExperimentalCappedL1 : SolverMode::Strict;
  const double R = default_radius(pen, mode, prob.beta_star);

  struct InitResult {
    StationaryPoint sp;
    double stat_error = 0.0, plateau = 0.0, slope = 0.0, r2 = 0.0, ref_stat_error = 0.0;
    int knee = 0, cluster = -1;
    std::uint64_t seed = 0;
  };
  std::vector<InitResult> results(static_cast<size_t>(run.n_inits));

  // First pass discovers the stationary points each init converges to.
  parallel_for(run.n_inits, threads, [&](int i) {
    InitResult& r = results[static_cast<size_t>(i)];
    r.seed = child_seed(run.seed, 100 + static_cast<std::uint64_t>(i));
    SolverConfig cfg = base_config(s, R, mode);
    cfg.init = InitSpec::random_ball(run.init_radius, r.seed);
    r.sp = ncmest::run(prob.loss, pen, cfg);
    r.stat_error = (r.sp.beta - prob.beta_star).norm();
  });

  // Cluster the finals, then extend each cluster's run to get its own
  // reference stationary point. Measuring every trajectory against the limit
  // of its own cluster keeps the log optimization error linear down to the
  // plateau.
  std::vector<Eigen::VectorXd> finals;
  for (const auto& r : results) finals.push_back(r.sp.beta);
  const std::vector<int> cluster_of = cluster_labels(finals, 1e-3);
  int clusters = 0;
  for (const int c : cluster_of) clusters = std::max(clusters, c + 1);

  std::vector<Eigen::VectorXd> cluster_ref(static_cast<size_t>(clusters));
  std::vector<double> cluster_ref_stat(static_cast<size_t>(clusters), 0.0);
  parallel_for(clusters, threads, [&](int c) {
    int member = 0;
    while (cluster_of[static_cast<size_t>(member)] != c) ++member;
    SolverConfig ref_cfg = base_config(s, R, mode);
    ref_cfg.max_iters = s.max_iters * 10;
    ref_cfg.tol_obj = std::min(s.tol_obj, 1e-14);
    ref_cfg.tol_stat = std::min(s.tol_stat, 1e-9);
    ref_cfg.init = InitSpec::from(results[static_cast<size_t>(member)].sp.beta);
    const StationaryPoint ref = ncmest::run(prob.loss, pen, ref_cfg);
    cluster_ref[static_cast<size_t>(c)] = ref.beta;
    cluster_ref_stat[static_cast<size_t>(c)] = (ref.beta - prob.beta_star).norm();
  });

  // Second pass replays each init (deterministic) with its cluster reference
  // wired into the trace, then fits the pre-plateau slope.
  parallel_for(run.n_inits, threads, [&](int i) {
    InitResult& r = results[static_cast<size_t>(i)];
    r.cluster = cluster_of[static_cast<size_t>(i)];
    r.ref_stat_error = cluster_ref_stat[static_cast<size_t>(r.cluster)];
    SolverConfig cfg = base_config(s, R, mode);
    cfg.init = InitSpec::random_ball(run.init_radius, r.seed);
    cfg.trace_ref = cluster_ref[static_cast<size_t>(r.cluster)];
    cfg.trace_star = prob.beta_star;
    r.sp = ncmest::run(prob.loss, pen, cfg);

    std::vector<double> errs;
    errs.reserve(r.sp.trace.size());
    for (const auto& row : r.sp.trace) errs.push_back(row.opt_error);
    r.plateau = errs.empty() ? std::nan("") : errs.back();
    r.knee = plateau_knee(errs);
    const int fit_end = std::max(r.knee, std::min<int>(3, static_cast<int>(errs.size())));
    std::vector<double> xs, ys;
    for (int t = 0; t < fit_end && t < static_cast<int>(errs.size()); ++t) {
      if (!(errs[static_cast<size_t>(t)] > 1e-15)) continue;
      xs.push_back(static_cast<double>(t));
      ys.push_back(std::log(errs[static_cast<size_t>(t)]));
    }
    const LineFit lf = fit_line(xs, ys);
    r.slope = lf.slope;
    r.r2 = lf.r2;
  });

  ExperimentReport rep;
  rep.kind = "convergence";
  rep.columns = {"init",       "seed",    "cluster", "converged", "iterations",
                 "objective",  "residual", "stat_error", "ref_stat_error", "plateau",
                 "knee",       "slope",   "r2"};
  double stat_min = std::numeric_limits<double>::infinity(), stat_max = 0.0;
  for (size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    stat_min = std::min(stat_min, r.stat_error);
    stat_max = std::max(stat_max, r.stat_error);
    rep.rows.push_back({cell(static_cast<int>(i)), cell(r.seed), cell(r.cluster),
                        cell(r.sp.converged), cell(r.sp.iterations), cell(r.sp.objective),
                        cell(r.sp.residual), cell(r.stat_error), cell(r.ref_stat_error),
                        cell(r.plateau), cell(r.knee), cell(r.slope), cell(r.r2)});
  }

  rep.summary_columns = {"key", "value"};
  const auto put = [&](const std::string& k2, const std::string& v) {
    rep.summary_rows.push_back({k2, v});
  };
  put("loss", run.loss);
  put("penalty", run.penalty.kind);
  put("p", cell(run.p));
  put("k", cell(k));
  put("n", cell(n));
  put("lambda", cell(prob.lambda));
  put("R", cell(R));
  put("distinct_optima", cell(clusters));
  put("stat_spread", cell(stat_min > 0 ? stat_max / stat_min : std::nan("")));
  put("n_inits", cell(run.n_inits));

  rep.curve_columns = {"init", "iter", "opt_error", "stat_error", "objective"};
  plot::Figure fig;
  fig.title = "Optimization error per initialization";
  fig.xlabel = "iteration";
  fig.ylabel = "||beta_t - ref||_2";
  fig.logy = true;
  for (size_t i = 0; i < results.size(); ++i) {
    plot::Series ser;
    ser.label = i < 4 ? "init " + std::to_string(i) : "";
    for (const auto& row : results[i].sp.trace) {
      rep.curve_rows.push_back({cell(static_cast<int>(i)), cell(row.iter),
                                cell(row.opt_error), cell(row.stat_error),
                                cell(row.objective)});
      ser.x.push_back(static_cast<double>(row.iter));
      ser.y.push_back(row.opt_error);
    }
    fig.series.push_back(std::move(ser));
  }
  rep.figures.emplace_back("convergence", std::move(fig));
  return rep;
}

// ---------------------------------------------------------------------------
// breakdown

ExperimentReport run_breakdown(const BreakdownRun& run, const SolverSettings& s, int threads) {
  if (run.zeta_list.empty()) throw std::invalid_argument("run_breakdown: empty zeta list");
  const int k = resolve_k(run.p, run.k);
  const int n = resolve_n(run.p, k, run.n, 10.0);

  std::vector<PenaltyChoice> penalties{{"l1"}};
  for (const double a : run.a_list) {
    PenaltyChoice c{"scad"};
    c.a = a;
    penalties.push_back(c);
  }

  struct Task {
    double zeta;
    int pen_idx;
    int init;
  };
  std::vector<Task> tasks;
  for (size_t zi = 0; zi < run.zeta_list.size(); ++zi)
    for (size_t qi = 0; qi < penalties.size(); ++qi)
      for (int i = 0; i < run.n_inits; ++i)
        tasks.push_back({run.zeta_list[zi], static_cast<int>(qi), i});

  // One dataset per zeta, shared across penalties and inits.
  std::vector<VectorProblem> problems;
  CorruptionSpec clean;
  clean.mode = CorruptionMode::None;
  for (size_t zi = 0; zi < run.zeta_list.size(); ++zi)
    problems.push_back(build_linear_problem(run.p, k, n, clean, run.snr,
                                            run.zeta_list[zi],
                                            child_seed(run.seed, 10 + zi)));

  struct Result {
    StationaryPoint sp;
    double stat_error = 0.0;
    bool converged = false;
    std::uint64_t seed = 0;
  };
  std::vector<Result> results(tasks.size());

  parallel_for(static_cast<int>(tasks.size()), threads, [&](int ti) {
    const Task& t = tasks[static_cast<size_t>(ti)];
    size_t zi = 0;
    while (run.zeta_list[zi] != t.zeta) ++zi;
    const VectorProblem& prob = problems[zi];
    const PenaltySpec pen =
        make_penalty(penalties[static_cast<size_t>(t.pen_idx)], prob.lambda);
    const double R = default_radius(pen, SolverMode::Strict, prob.beta_star);
    SolverConfig cfg = base_config(s, R, SolverMode::Strict);
    Result& r = results[static_cast<size_t>(ti)];
    r.seed = child_seed(run.seed,
                        1000 + static_cast<std::uint64_t>(ti));
    cfg.init = InitSpec::random_ball(run.init_radius, r.seed);
    cfg.trace_star = prob.beta_star;
    r.sp = ncmest::run(prob.loss, pen, cfg);
    r.stat_error = (r.sp.beta - prob.beta_star).norm();
    // A flattening objective alone does not certify convergence here; require
    // the stationarity residual.
    r.converged = r.sp.residual < s.tol_stat;
  });

  ExperimentReport rep;
  rep.kind = "breakdown";
  rep.columns = {"zeta",      "penalty", "a",         "init",      "seed",     "converged",
                 "residual",  "iterations", "objective", "stat_error"};
  for (size_t ti = 0; ti < tasks.size(); ++ti) {
    const Task& t = tasks[ti];
    const auto& pc = penalties[static_cast<size_t>(t.pen_idx)];
    const Result& r = results[ti];
    rep.rows.push_back({cell(t.zeta), cell(pc.kind),
                        cell(pc.kind == "scad" ? pc.a : std::nan("")), cell(t.init),
                        cell(r.seed), cell(r.converged), cell(r.sp.residual),
                        cell(r.sp.iterations), cell(r.sp.objective), cell(r.stat_error)});
  }

  rep.summary_columns = {"zeta", "penalty", "a", "n_inits", "converged_fraction"};
  plot::Figure fig;
  fig.title = "Converged fraction vs design correlation";
  fig.xlabel = "zeta";
  fig.ylabel = "converged fraction";
  for (size_t qi = 0; qi < penalties.size(); ++qi) {
    plot::Series ser;
    ser.label = penalties[qi].kind == "scad"
                    ? "scad a=" + fmt_short(penalties[qi].a)
                    : penalties[qi].kind;
    for (size_t zi = 0; zi < run.zeta_list.size(); ++zi) {
      int conv = 0, total = 0;
      for (size_t ti = 0; ti < tasks.size(); ++ti) {
        if (tasks[ti].pen_idx != static_cast<int>(qi) ||
            tasks[ti].zeta != run.zeta_list[zi])
          continue;
        ++total;
        if (results[ti].converged) ++conv;
      }
      const double frac = total > 0 ? static_cast<double>(conv) / total : std::nan("");
      rep.summary_rows.push_back(
          {cell(run.zeta_list[zi]), cell(penalties[qi].kind),
           cell(penalties[qi].kind == "scad" ? penalties[qi].a : std::nan("")), cell(total),
           cell(frac)});
      ser.x.push_back(run.zeta_list[zi]);
      ser.y.push_back(frac);
    }
    fig.series.push_back(std::move(ser));
  }
  rep.figures.emplace_back("breakdown", std::move(fig));

  // Thinned statistical-error traces for inspection.
  rep.curve_columns = {"zeta", "penalty", "a", "init", "iter", "stat_error", "objective"};
  for (size_t ti = 0; ti < tasks.size(); ++ti) {
    const Task& t = tasks[ti];
    const auto& pc = penalties[static_cast<size_t>(t.pen_idx)];
    const auto& trace = results[ti].sp.trace;
    const int stride = std::max(1, static_cast<int>(trace.size()) / 400);
    for (size_t row = 0; row < trace.size(); row += static_cast<size_t>(stride))
      rep.curve_rows.push_back({cell(t.zeta), cell(pc.kind),
                                cell(pc.kind == "scad" ? pc.a : std::nan("")), cell(t.init),
                                cell(trace[row].iter), cell(trace[row].stat_error),
                                cell(trace[row].objective)});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// glasso rate

ExperimentReport run_glasso_rate(const GlassoRun& run, const SolverSettings& s, int threads) {
  if (run.n_list.empty() || run.trials < 1)
    throw std::invalid_argument("run_glasso_rate: empty grid");

  struct Result {
    int n = 0, trial = 0;
    std::uint64_t seed = 0;
    double frob = 0.0, residual = 0.0, objective = 0.0;
    int iterations = 0;
    bool converged = false;
  };
  const int n_tasks = static_cast<int>(run.n_list.size()) * run.trials;
  std::vector<Result> results(static_cast<size_t>(n_tasks));

  parallel_for(n_tasks, threads, [&](int idx) {
    Result& r = results[static_cast<size_t>(idx)];
    const size_t ni = static_cast<size_t>(idx) / static_cast<size_t>(run.trials);
    r.n = run.n_list[ni];
    r.trial = idx % run.trials;
    r.seed = child_seed(run.seed, static_cast<std::uint64_t>(idx));

    const PrecisionModel model = gen_sparse_precision(run.p, run.s, r.n, r.seed);
    GlassoData data;
    data.sigma_hat = model.sigma_hat;
    data.n_samples = r.n;
    const LossHandle loss = LossHandle::glasso(std::move(data));
    const Eigen::VectorXd theta_star_vec = loss.from_matrix(model.theta_star);

    const double lambda = default_lambda(run.p, r.n);
    const PenaltySpec pen = make_penalty(run.penalty, lambda);
    const double R = default_radius(pen, SolverMode::Strict, theta_star_vec);
    SolverConfig cfg = base_config(s, R, SolverMode::Strict);
    cfg.init = InitSpec::from(
        loss.from_matrix(Eigen::MatrixXd::Identity(run.p, run.p)));
    cfg.trace_star = theta_star_vec;
    const StationaryPoint sp = ncmest::run(loss, pen, cfg);
    r.frob = (sp.beta - theta_star_vec).norm();
    r.residual = sp.residual;
    r.objective = sp.objective;
    r.iterations = sp.iterations;
    r.converged = sp.converged;
  });

  ExperimentReport rep;
  rep.kind = "glasso";
  rep.columns = {"n", "trial", "seed", "frob_error", "residual", "iterations", "converged",
                 "objective"};
  for (const auto& r : results)
    rep.rows.push_back({cell(r.n), cell(r.trial), cell(r.seed), cell(r.frob),
                        cell(r.residual), cell(r.iterations), cell(r.converged),
                        cell(r.objective)});

  rep.summary_columns = {"n", "trials", "mean_frob", "se_frob"};
  std::vector<double> log_n, log_err;
  for (const int n : run.n_list) {
    double sum = 0, sum2 = 0;
    int m = 0;
    for (const auto& r : results) {
      if (r.n != n) continue;
      sum += r.frob;
      sum2 += r.frob * r.frob;
      ++m;
    }
    const double mean = m > 0 ? sum / m : std::nan("");
    const double var = m > 1 ? (sum2 - sum * sum / m) / (m - 1) : 0.0;
    rep.summary_rows.push_back(
        {cell(n), cell(m), cell(mean),
         cell(m > 1 ? std::sqrt(std::max(var, 0.0) / m) : std::nan(""))});
    log_n.push_back(std::log(static_cast<double>(n)));
    log_err.push_back(std::log(mean));
  }
  const LineFit lf = fit_line(log_n, log_err);
  rep.summary_rows.push_back({cell(std::string("slope")), cell(0), cell(lf.slope), cell(lf.r2)});

  plot::Figure fig;
  fig.title = "Frobenius error vs sample size";
  fig.xlabel = "n";
  fig.ylabel = "||Theta - Theta*||_F";
  fig.logx = true;
  fig.logy = true;
  plot::Series ser;
  ser.label = run.penalty.kind;
  for (size_t ni = 0; ni < run.n_list.size(); ++ni) {
    ser.x.push_back(static_cast<double>(run.n_list[ni]));
    ser.y.push_back(std::exp(log_err[ni]));
  }
  fig.series.push_back(std::move(ser));
  rep.figures.emplace_back("glasso", std::move(fig));
  return rep;
}

// ---------------------------------------------------------------------------
// config plumbing

ExperimentConfig experiment_config_from_kv(const KvConfig& kv) {
  kv.check_schema({
      "experiment.kind", "experiment.seed", "experiment.trials", "experiment.threads",
      "penalty.kinds", "penalty.kind", "penalty.a", "penalty.b", "penalty.c",
      "simulate.p_list", "simulate.grid", "simulate.p", "simulate.k", "simulate.n",
      "simulate.n_inits", "simulate.loss", "simulate.corruption", "simulate.sigma_w",
      "simulate.vartheta", "simulate.snr", "simulate.noise_sd", "simulate.init_radius",
      "simulate.zeta_list", "simulate.a_list", "simulate.glasso_p", "simulate.glasso_s",
      "simulate.n_list",
      "solver.eta", "solver.max_iters", "solver.tol_obj", "solver.tol_stat",
      "solver.psd_floor", "solver.backtrack", "solver.stationarity_stride",
  });

  ExperimentConfig cfg;
  cfg.kind = kv.get_string("experiment", "kind", "scaling");
  if (cfg.kind != "scaling" && cfg.kind != "convergence" && cfg.kind != "breakdown" &&
      cfg.kind != "glasso")
    throw ConfigError("experiment.kind must be one of scaling|convergence|breakdown|glasso");
  cfg.seed = kv.get_u64("experiment", "seed", 1);
  cfg.threads = kv.get_int("experiment", "threads", 1);

  cfg.solver.eta = kv.get_double("solver", "eta", cfg.solver.eta);
  cfg.solver.max_iters = kv.get_int("solver", "max_iters", cfg.solver.max_iters);
  cfg.solver.tol_obj = kv.get_double("solver", "tol_obj", cfg.solver.tol_obj);
  cfg.solver.tol_stat = kv.get_double("solver", "tol_stat", cfg.solver.tol_stat);
  cfg.solver.psd_floor = kv.get_double("solver", "psd_floor", cfg.solver.psd_floor);
  cfg.solver.backtrack = kv.get_bool("solver", "backtrack", cfg.solver.backtrack);
  cfg.solver.stationarity_stride =
      kv.get_int("solver", "stationarity_stride", cfg.solver.stationarity_stride);

  const double a = kv.get_double("penalty", "a", 3.7);
  const double b = kv.get_double("penalty", "b", 3.5);
  const double c = kv.get_double("penalty", "c", 2.0);
  const std::string pkind = kv.get_string("penalty", "kind", "l1");

  CorruptionSpec corr;
  corr.mode = corruption_from_name(kv.get_string("simulate", "corruption", "additive"));
  corr.sigma_w = kv.get_double("simulate", "sigma_w", 0.2);
  corr.vartheta = kv.get_double("simulate", "vartheta", 0.0);
  corr.noise_sd = kv.get_double("simulate", "noise_sd", 0.1);
  const double snr = kv.get_double("simulate", "snr", 5.0);

  if (cfg.kind == "scaling") {
    auto& r = cfg.scaling;
    r.p_list = kv.get_ints("simulate", "p_list", r.p_list);
    r.rescaled_samples = kv.get_doubles("simulate", "grid", r.rescaled_samples);
    r.trials = kv.get_int("experiment", "trials", r.trials);
    r.corruption = corr;
    r.snr = snr;
    r.seed = cfg.seed;
    r.penalties.clear();
    for (const auto& kind : kv.get_strings("penalty", "kinds", {"l1", "scad", "mcp"})) {
      PenaltyChoice pc{kind, a, b, c};
      r.penalties.push_back(pc);
    }
    if (r.penalties.empty()) throw ConfigError("penalty.kinds must not be empty");
  } else if (cfg.kind == "convergence") {
    auto& r = cfg.convergence;
    r.p = kv.get_int("simulate", "p", r.p);
    r.k = kv.get_int("simulate", "k", -1);
    r.n = kv.get_int("simulate", "n", -1);
    r.n_inits = kv.get_int("simulate", "n_inits", r.n_inits);
    r.penalty = {pkind, a, b, c};
    r.loss = kv.get_string("simulate", "loss", "linear");
    if (r.loss != "linear" && r.loss != "logistic")
      throw ConfigError("simulate.loss must be linear or logistic");
    r.corruption = r.loss == "logistic" ? CorruptionSpec{CorruptionMode::None, 0, 0, 0} : corr;
    r.snr = snr;
    r.init_radius = kv.get_double("simulate", "init_radius", r.init_radius);
    r.seed = cfg.seed;
  } else if (cfg.kind == "breakdown") {
    auto& r = cfg.breakdown;
    r.p = kv.get_int("simulate", "p", r.p);
    r.k = kv.get_int("simulate", "k", -1);
    r.n = kv.get_int("simulate", "n", -1);
    r.zeta_list = kv.get_doubles("simulate", "zeta_list", r.zeta_list);
    r.a_list = kv.get_doubles("simulate", "a_list", r.a_list);
    r.n_inits = kv.get_int("simulate", "n_inits", r.n_inits);
    r.init_radius = kv.get_double("simulate", "init_radius", r.init_radius);
    r.snr = snr;
    r.seed = cfg.seed;
  } else {
    auto& r = cfg.glasso;
    r.p = kv.get_int("simulate", "glasso_p", r.p);
    r.s = kv.get_int("simulate", "glasso_s", r.s);
    r.n_list = kv.get_ints("simulate", "n_list", r.n_list);
    r.trials = kv.get_int("experiment", "trials", r.trials);
    r.penalty = {pkind, a, b, c};
    r.seed = cfg.seed;
  }
  return cfg;
}

KvConfig experiment_config_to_kv(const ExperimentConfig& cfg) {
  KvConfig kv;
  kv.set("experiment", "kind", cfg.kind);
  kv.set("experiment", "seed", std::to_string(cfg.seed));
  kv.set("experiment", "threads", std::to_string(cfg.threads));
  kv.set("solver", "eta", fmt_short(cfg.solver.eta));
  kv.set("solver", "max_iters", std::to_string(cfg.solver.max_iters));
  kv.set("solver", "tol_obj", fmt_short(cfg.solver.tol_obj));
  kv.set("solver", "tol_stat", fmt_short(cfg.solver.tol_stat));
  kv.set("solver", "psd_floor", fmt_short(cfg.solver.psd_floor));
  kv.set("solver", "backtrack", cfg.solver.backtrack ? "true" : "false");
  kv.set("solver", "stationarity_stride", std::to_string(cfg.solver.stationarity_stride));

  if (cfg.kind == "scaling") {
    const auto& r = cfg.scaling;
    kv.set("experiment", "trials", std::to_string(r.trials));
    std::string kinds;
    for (size_t i = 0; i < r.penalties.size(); ++i) {
      if (i) kinds += ',';
      kinds += r.penalties[i].kind;
    }
    kv.set("penalty", "kinds", kinds);
    if (!r.penalties.empty()) {
      kv.set("penalty", "a", fmt_short(r.penalties.back().a));
      kv.set("penalty", "b", fmt_short(r.penalties.back().b));
      kv.set("penalty", "c", fmt_short(r.penalties.back().c));
    }
    kv.set("simulate", "p_list", list_to_string(r.p_list));
    kv.set("simulate", "grid", list_to_string(r.rescaled_samples));
    kv.set("simulate", "corruption", corruption_name(r.corruption.mode));
    kv.set("simulate", "sigma_w", fmt_short(r.corruption.sigma_w));
    kv.set("simulate", "vartheta", fmt_short(r.corruption.vartheta));
    kv.set("simulate", "noise_sd", fmt_short(r.corruption.noise_sd));
    kv.set("simulate", "snr", fmt_short(r.snr));
  } else if (cfg.kind == "convergence") {
    const auto& r = cfg.convergence;
    kv.set("penalty", "kind", r.penalty.kind);
    kv.set("penalty", "a", fmt_short(r.penalty.a));
    kv.set("penalty", "b", fmt_short(r.penalty.b));
    kv.set("penalty", "c", fmt_short(r.penalty.c));
    kv.set("simulate", "p", std::to_string(r.p));
    kv.set("simulate", "k", std::to_string(r.k));
    kv.set("simulate", "n", std::to_string(r.n));
    kv.set("simulate", "n_inits", std::to_string(r.n_inits));
    kv.set("simulate", "loss", r.loss);
    kv.set("simulate", "corruption", corruption_name(r.corruption.mode));
    kv.set("simulate", "sigma_w", fmt_short(r.corruption.sigma_w));
    kv.set("simulate", "vartheta", fmt_short(r.corruption.vartheta));
    kv.set("simulate", "noise_sd", fmt_short(r.corruption.noise_sd));
    kv.set("simulate", "snr", fmt_short(r.snr));
    kv.set("simulate", "init_radius", fmt_short(r.init_radius));
  } else if (cfg.kind == "breakdown") {
    const auto& r = cfg.breakdown;
    kv.set("simulate", "p", std::to_string(r.p));
    kv.set("simulate", "k", std::to_string(r.k));
    kv.set("simulate", "n", std::to_string(r.n));
    kv.set("simulate", "zeta_list", list_to_string(r.zeta_list));
    kv.set("simulate", "a_list", list_to_string(r.a_list));
    kv.set("simulate", "n_inits", std::to_string(r.n_inits));
    kv.set("simulate", "init_radius", fmt_short(r.init_radius));
    kv.set("simulate", "snr", fmt_short(r.snr));
  } else {
    const auto& r = cfg.glasso;
    kv.set("experiment", "trials", std::to_string(r.trials));
    kv.set("penalty", "kind", r.penalty.kind);
    kv.set("penalty", "a", fmt_short(r.penalty.a));
    kv.set("penalty", "b", fmt_short(r.penalty.b));
    kv.set("penalty", "c", fmt_short(r.penalty.c));
    kv.set("simulate", "glasso_p", std::to_string(r.p));
    kv.set("simulate", "glasso_s", std::to_string(r.s));
    kv.set("simulate", "n_list", list_to_string(r.n_list));
  }
  return kv;
}

ExperimentConfig load_experiment_metadata(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open metadata file " + path);
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const std::exception& e) {
    throw ConfigError(path + ": bad JSON: " + e.what());
  }
  if (!meta.contains("config") || !meta["config"].is_object())
    throw ConfigError(path + ": missing config object");
  KvConfig kv;
  for (const auto& [section, entries] : meta["config"].items())
    for (const auto& [key, value] : entries.items())
      kv.set(section, key, value.get<std::string>());
  return experiment_config_from_kv(kv);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  if (cfg.kind == "scaling") rep = run_scaling(cfg.scaling, cfg.solver, cfg.threads);
  else if (cfg.kind == "convergence")
    rep = run_convergence(cfg.convergence, cfg.solver, cfg.threads);
  else if (cfg.kind == "breakdown")
    rep = run_breakdown(cfg.breakdown, cfg.solver, cfg.threads);
  else if (cfg.kind == "glasso")
    rep = run_glasso_rate(cfg.glasso, cfg.solver, cfg.threads);
  else
    throw ConfigError("unknown experiment kind '" + cfg.kind + "'");
  rep.metadata_json = build_metadata(cfg.kind, cfg);
  return rep;
}

}  // namespace ncmest
