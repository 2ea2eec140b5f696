#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ncmest/config.hpp"
#include "ncmest/loss.hpp"
#include "ncmest/penalty.hpp"
#include "ncmest/plot.hpp"
#include "ncmest/simulate.hpp"
#include "ncmest/solver.hpp"

namespace ncmest {

inline constexpr const char* kVersion = "0.1.0";

// Numeric solver knobs shared by the experiment runners.
struct SolverSettings {
  double eta = 1.0;
  int max_iters = 2000;
  double tol_obj = 1e-10;
  double tol_stat = 1e-6;
  double psd_floor = 1e-6;
  bool backtrack = true;
  int stationarity_stride = 1;
};

struct PenaltyChoice {
  std::string kind = "l1";
  double a = 3.7;
  double b = 3.5;
  double c = 2.0;
};

// Statistical-consistency scan over the rescaled sample size n/(k log p).
struct ScalingRun {
  std::vector<int> p_list{64, 128, 256};
  std::vector<double> rescaled_samples{2, 4, 6, 8, 10};
  int trials = 20;
  std::vector<PenaltyChoice> penalties{{"l1"}, {"scad"}, {"mcp"}};
  CorruptionSpec corruption{CorruptionMode::AdditiveNoise, 0.2, 0.0, 0.1};
  double snr = 5.0;  // <= 0 falls back to corruption.noise_sd
  std::uint64_t seed = 1;
};

// Multi-start optimization/statistical error traces on one problem instance.
struct ConvergenceRun {
  int p = 128;
  int k = -1;  // -1 resolves to floor(sqrt(p))
  int n = -1;  // -1 resolves to floor(20 k log p)
  int n_inits = 10;
  PenaltyChoice penalty{"lasso"};
  std::string loss = "linear";  // linear | logistic
  CorruptionSpec corruption{CorruptionMode::AdditiveNoise, 0.2, 0.0, 0.1};
  double snr = 5.0;
  double init_radius = 1.5;
  std::uint64_t seed = 1;
};

// Convergence fractions as the design covariance degrades (Toeplitz zeta).
struct BreakdownRun {
  int p = 512;
  int k = -1;
  int n = -1;  // -1 resolves to floor(10 k log p)
  std::vector<double> zeta_list{0.5, 0.9};
  std::vector<double> a_list{2.5};  // SCAD parameters; the Lasso always runs too
  int n_inits = 10;
  double init_radius = 1.5;
  double snr = 5.0;
  std::uint64_t seed = 1;
};

// Frobenius-error rate of sparse precision estimation against n.
struct GlassoRun {
  int p = 30;
  int s = 30;
  std::vector<int> n_list{200, 800, 3200};
  int trials = 10;
  PenaltyChoice penalty{"l1"};
  std::uint64_t seed = 1;
};

struct BoundCheck {
  std::string name;  // l2 | l1 | prediction
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
  bool applicable = false;  // false when the curvature precondition fails
};

struct ExperimentReport {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> summary_columns;
  std::vector<std::vector<std::string>> summary_rows;
  std::vector<std::string> curve_columns;
  std::vector<std::vector<std::string>> curve_rows;
  std::vector<std::pair<std::string, plot::Figure>> figures;
  std::string metadata_json;  // resolved config + seed + version, re-runnable

  std::string records_csv() const;
  std::string summary_csv() const;
  std::string curves_csv() const;
  // records.csv, summary.csv, curves.csv, metadata.json, plot script + SVG
  void write(const std::string& out_dir) const;
};

ExperimentReport run_scaling(const ScalingRun& run, const SolverSettings& s, int threads = 1);
ExperimentReport run_convergence(const ConvergenceRun& run, const SolverSettings& s,
                                 int threads = 1);
ExperimentReport run_breakdown(const BreakdownRun& run, const SolverSettings& s,
                               int threads = 1);
ExperimentReport run_glasso_rate(const GlassoRun& run, const SolverSettings& s,
                                 int threads = 1);

// Plug-in stationary-point error bounds (l2, l1, prediction) with RSC
// constants estimated by rsc_probe. Not-applicable results (curvature
// precondition violated, or a failed RSC fit) are flagged, never counted as
// violations.
std::vector<BoundCheck> check_error_bounds(const LossHandle& loss,
                                           const Eigen::VectorXd& beta_tilde,
                                           const Eigen::VectorXd& beta_star,
                                           const PenaltySpec& penalty, const RscFit& rsc);

// Least-squares line fit with R^2, used for convergence-slope diagnostics.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int n = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Index of the first entry within 1.1x of the final value; the pre-plateau
// segment for slope fitting is [0, knee).
int plateau_knee(const std::vector<double>& errors);

// Default side-constraint radius: 1.1 times the side-function value of the
// target, so the target is feasible with 10% headroom.
double default_radius(const PenaltySpec& penalty, SolverMode mode,
                      const Eigen::VectorXd& beta_star);

double default_lambda(int p, int n);  // sqrt(log p / n)

// Experiment configuration as parsed from a key-value config file or a
// metadata sidecar; covers all four experiment kinds.
struct ExperimentConfig {
  std::string kind = "scaling";
  std::uint64_t seed = 1;
  int threads = 1;
  ScalingRun scaling;
  ConvergenceRun convergence;
  BreakdownRun breakdown;
  GlassoRun glasso;
  SolverSettings solver;
};

ExperimentConfig experiment_config_from_kv(const KvConfig& kv);
KvConfig experiment_config_to_kv(const ExperimentConfig& cfg);
// Reads the metadata.json sidecar written by ExperimentReport::write.
ExperimentConfig load_experiment_metadata(const std::string& path);
ExperimentReport run_experiment(const ExperimentConfig& cfg);

}  // namespace ncmest
