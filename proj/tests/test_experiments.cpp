#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>

#include "ncmest/experiments.hpp"
#include "ncmest/rng.hpp"

using namespace ncmest;

namespace {

ScalingRun small_scaling() {
  ScalingRun r;
  r.p_list = {16, 32};
  r.rescaled_samples = {4, 10};
  r.trials = 3;
  r.penalties = {{"l1"}, {"scad"}};
  r.seed = 5;
  return r;
}

SolverSettings fast_settings() {
  SolverSettings s;
  s.max_iters = 600;
  s.stationarity_stride = 5;
  return s;
}

}  // namespace

TEST_CASE("line fit and knee helpers") {
  // exact line
  std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9};
  const LineFit lf = fit_line(x, y);
  CHECK(lf.slope == doctest::Approx(2.0));
  CHECK(lf.intercept == doctest::Approx(1.0));
  CHECK(lf.r2 == doctest::Approx(1.0));

  std::vector<double> errs{100, 10, 1, 0.1, 0.1, 0.1};
  CHECK(plateau_knee(errs) == 3);
  std::vector<double> flat{1.0, 1.0};
  CHECK(plateau_knee(flat) == 0);
}

TEST_CASE("bound checker on a zero target with a huge penalty level") {
  const int p = 4;
  CorrectedLinearData d;
  d.gamma_hat = Eigen::MatrixXd::Identity(p, p);
  d.gamma_vec = Eigen::VectorXd::Constant(p, 0.01);
  d.n_samples = 100;
  const LossHandle loss = LossHandle::corrected_linear(d);
  const PenaltySpec pen = PenaltySpec::l1(10.0);

  RscFit rsc;
  rsc.alpha1 = 1.0;
  rsc.ok = true;
  // k = 0: all bounds are zero and the zero estimate satisfies them
  const auto checks = check_error_bounds(loss, Eigen::VectorXd::Zero(p),
                                         Eigen::VectorXd::Zero(p), pen, rsc);
  REQUIRE(checks.size() == 3);
  for (const auto& c : checks) {
    CHECK(c.applicable);
    CHECK(c.rhs == 0.0);
    CHECK(c.satisfied);
  }
}

TEST_CASE("bound checker reports not-applicable on curvature failure") {
  CorrectedLinearData d;
  d.gamma_hat = Eigen::MatrixXd::Identity(3, 3);
  d.gamma_vec = Eigen::VectorXd::Zero(3);
  const LossHandle loss = LossHandle::corrected_linear(d);
  const PenaltySpec pen = PenaltySpec::scad(1.0, 3.7);

  RscFit rsc;
  rsc.ok = true;
  rsc.alpha1 = 0.75 * pen.mu();  // 4 alpha - 3 mu = 0
  const auto checks = check_error_bounds(loss, Eigen::VectorXd::Ones(3),
                                         Eigen::VectorXd::Zero(3), pen, rsc);
  for (const auto& c : checks) {
    CHECK_FALSE(c.applicable);
    CHECK_FALSE(c.satisfied);
  }
}

TEST_CASE("bound checker uses majorant constants for capped-l1") {
  CorrectedLinearData d;
  d.gamma_hat = Eigen::MatrixXd::Identity(2, 2);
  d.gamma_vec = Eigen::VectorXd::Zero(2);
  const LossHandle loss = LossHandle::corrected_linear(d);
  const PenaltySpec pen = PenaltySpec::capped_l1(0.5, 2.0);

  RscFit rsc;
  rsc.ok = true;
  rsc.alpha1 = 1.0;
  Eigen::VectorXd star(2);
  star << 1.0, 0.0;
  const auto checks =
      check_error_bounds(loss, star, star, pen, rsc);
  // k = 1; denominators use mu1 + mu2 = 1/c = 0.5
  const double d1 = 2.0 * 1.0 - 0.5;
  CHECK(checks[0].rhs == doctest::Approx(7.0 * 0.5 / (2.0 * d1)));
  CHECK(checks[1].rhs == doctest::Approx(28.0 * 0.5 / d1));
  CHECK(checks[0].satisfied);
}

TEST_CASE("scaling report structure and determinism") {
  const ScalingRun r = small_scaling();
  const SolverSettings s = fast_settings();
  const ExperimentReport a = run_scaling(r, s, 2);
  const ExperimentReport b = run_scaling(r, s, 1);
  // rows: penalties x p x grid x trials
  CHECK(a.rows.size() == 2u * 2u * 2u * 3u);
  // cone relation l1 <= 4 sqrt(k) l2 (slack 1.5) holds on these solutions
  const auto cone_col =
      std::find(a.columns.begin(), a.columns.end(), "cone_ok") - a.columns.begin();
  int cone_pass = 0;
  for (const auto& row : a.rows)
    if (row[static_cast<size_t>(cone_col)] == "1") ++cone_pass;
  CHECK(cone_pass == static_cast<int>(a.rows.size()));
  // thread count must not affect the records
  CHECK(a.records_csv() == b.records_csv());
  CHECK(a.summary_csv() == b.summary_csv());
  // errors shrink along the grid on aggregate
  double e4 = 0, e10 = 0;
  for (const auto& row : a.summary_rows) {
    if (row[2] == "4") e4 += std::strtod(row[5].c_str(), nullptr);
    if (row[2] == "10") e10 += std::strtod(row[5].c_str(), nullptr);
  }
  CHECK(e10 < e4);
}

TEST_CASE("near-interpolation regime reaches tiny errors") {
  // noise-free, n >> p, tiny lambda: the solve nearly interpolates and agrees
  // with the direct least-squares oracle
  const int p = 12, n = 400;
  TargetSpec ts;
  ts.p = p;
  ts.seed = 6;
  const Eigen::VectorXd beta_star = gen_target(ts);
  DesignSpec ds;
  ds.n = n;
  ds.p = p;
  ds.seed = 7;
  const Eigen::MatrixXd X = gen_design(ds);
  const Eigen::VectorXd y = gen_linear_response(X, beta_star, 0.0, 8);
  const auto data = build_corrected_gamma(X, y, Eigen::MatrixXd::Zero(p, p));
  const LossHandle loss = LossHandle::corrected_linear(data);

  const PenaltySpec pen = PenaltySpec::l1(1e-5);
  SolverConfig cfg;
  cfg.R = 1.1 * beta_star.lpNorm<1>() + 1.0;
  cfg.max_iters = 5000;
  cfg.tol_obj = 1e-15;
  cfg.tol_stat = 1e-9;
  const StationaryPoint sp = run(loss, pen, cfg);

  const Eigen::VectorXd ls = data.gamma_hat.ldlt().solve(data.gamma_vec);
  CHECK((sp.beta - beta_star).norm() < 0.05);
  CHECK((sp.beta - ls).norm() < 1e-3);
}

TEST_CASE("scaling handles missing-data corruption") {
  ScalingRun r;
  r.p_list = {16};
  r.rescaled_samples = {6};
  r.trials = 2;
  r.penalties = {{"l1"}};
  r.corruption.mode = CorruptionMode::Missing;
  r.corruption.vartheta = 0.2;
  r.seed = 7;
  const ExperimentReport rep = run_scaling(r, fast_settings(), 1);
  REQUIRE(rep.rows.size() == 2);
  const auto l2_col =
      std::find(rep.columns.begin(), rep.columns.end(), "l2_error") - rep.columns.begin();
  for (const auto& row : rep.rows) {
    const double err = std::strtod(row[static_cast<size_t>(l2_col)].c_str(), nullptr);
    CHECK(err > 0.0);
    CHECK(err < 1.5);
  }
}

TEST_CASE("convergence run fits negative slopes") {
  ConvergenceRun r;
  r.p = 32;
  r.n_inits = 4;
  r.penalty = {"scad"};
  r.seed = 9;
  SolverSettings s = fast_settings();
  s.max_iters = 800;
  const ExperimentReport rep = run_convergence(r, s, 2);
  CHECK(rep.rows.size() == 4);
  const auto slope_col =
      std::find(rep.columns.begin(), rep.columns.end(), "slope") - rep.columns.begin();
  const auto r2_col =
      std::find(rep.columns.begin(), rep.columns.end(), "r2") - rep.columns.begin();
  for (const auto& row : rep.rows) {
    CHECK(std::strtod(row[static_cast<size_t>(slope_col)].c_str(), nullptr) < 0.0);
    CHECK(std::strtod(row[static_cast<size_t>(r2_col)].c_str(), nullptr) >= 0.90);
  }
  CHECK(rep.curve_rows.size() > 0);
}

TEST_CASE("breakdown run emits fractions per cell") {
  BreakdownRun r;
  r.p = 32;
  r.n = 300;
  r.zeta_list = {0.0, 0.5};
  r.a_list = {2.5};
  r.n_inits = 3;
  r.seed = 11;
  SolverSettings s = fast_settings();
  s.max_iters = 2000;
  const ExperimentReport rep = run_breakdown(r, s, 2);
  CHECK(rep.rows.size() == 2u * 2u * 3u);  // zeta x {lasso, scad} x inits
  CHECK(rep.summary_rows.size() == 4);
  for (const auto& row : rep.summary_rows) {
    const double frac = std::strtod(row[4].c_str(), nullptr);
    CHECK(frac >= 0.0);
    CHECK(frac <= 1.0);
  }
}

TEST_CASE("glasso rate run is monotone on average") {
  GlassoRun r;
  r.p = 10;
  r.s = 8;
  r.n_list = {100, 400, 1600};
  r.trials = 3;
  r.seed = 13;
  SolverSettings s = fast_settings();
  s.max_iters = 500;
  const ExperimentReport rep = run_glasso_rate(r, s, 2);
  std::vector<double> means;
  for (const auto& row : rep.summary_rows)
    if (row[0] != "slope") means.push_back(std::strtod(row[2].c_str(), nullptr));
  REQUIRE(means.size() == 3);
  CHECK(means[1] <= means[0]);
  CHECK(means[2] <= means[1]);
  // fitted slope in the last summary row
  const auto& slope_row = rep.summary_rows.back();
  CHECK(slope_row[0] == "slope");
  CHECK(std::strtod(slope_row[2].c_str(), nullptr) < 0.0);
}

TEST_CASE("experiment config round-trips through kv and metadata") {
  ExperimentConfig cfg;
  cfg.kind = "convergence";
  cfg.seed = 77;
  cfg.convergence.p = 24;
  cfg.convergence.n_inits = 3;
  cfg.convergence.penalty = {"mcp"};
  cfg.convergence.seed = 77;
  cfg.solver.max_iters = 300;

  const KvConfig kv = experiment_config_to_kv(cfg);
  const ExperimentConfig back = experiment_config_from_kv(kv);
  CHECK(back.kind == cfg.kind);
  CHECK(back.seed == cfg.seed);
  CHECK(back.convergence.p == cfg.convergence.p);
  CHECK(back.convergence.penalty.kind == "mcp");
  CHECK(back.solver.max_iters == 300);
}

TEST_CASE("reports rerun byte-identically from their metadata sidecar") {
  ExperimentConfig cfg;
  cfg.kind = "scaling";
  cfg.seed = 21;
  cfg.scaling = small_scaling();
  cfg.scaling.seed = 21;
  cfg.solver = fast_settings();
  cfg.threads = 2;

  const ExperimentReport first = run_experiment(cfg);
  const std::string dir = std::filesystem::temp_directory_path() / "ncmest_meta_test";
  first.write(dir);

  const ExperimentConfig reloaded = load_experiment_metadata(dir + "/metadata.json");
  const ExperimentReport second = run_experiment(reloaded);
  CHECK(first.records_csv() == second.records_csv());
  CHECK(first.summary_csv() == second.summary_csv());
  CHECK(first.metadata_json == second.metadata_json);
  std::filesystem::remove_all(dir);
}

TEST_CASE("report write creates the artifact set") {
  ExperimentConfig cfg;
  cfg.kind = "glasso";
  cfg.seed = 3;
  cfg.glasso.p = 8;
  cfg.glasso.s = 4;
  cfg.glasso.n_list = {100, 200};
  cfg.glasso.trials = 2;
  cfg.glasso.seed = 3;
  cfg.solver = fast_settings();
  const ExperimentReport rep = run_experiment(cfg);
  const std::string dir = std::filesystem::temp_directory_path() / "ncmest_write_test";
  rep.write(dir);
  CHECK(std::filesystem::exists(dir + "/records.csv"));
  CHECK(std::filesystem::exists(dir + "/summary.csv"));
  CHECK(std::filesystem::exists(dir + "/metadata.json"));
  CHECK(std::filesystem::exists(dir + "/glasso.svg"));
  CHECK(std::filesystem::exists(dir + "/glasso.gp"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("invalid experiment configs are rejected") {
  ScalingRun r;
  r.p_list = {};
  CHECK_THROWS_AS(run_scaling(r, fast_settings(), 1), std::invalid_argument);

  KvConfig kv = KvConfig::parse_string("[experiment]\nkind = fourier\n");
  CHECK_THROWS_AS(experiment_config_from_kv(kv), ConfigError);

  KvConfig bad_key = KvConfig::parse_string("[experiment]\nknid = scaling\n");
  CHECK_THROWS_AS(experiment_config_from_kv(bad_key), ConfigError);
}
