#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "ncmest/loss.hpp"
#include "ncmest/penalty.hpp"

namespace ncmest {

enum class InitKind { Zero, Given, RandomBall };

struct InitSpec {
  InitKind kind = InitKind::Zero;
  Eigen::VectorXd given;
  double radius = 1.5;
  std::uint64_t seed = 0;

  static InitSpec zero() { return {}; }
  static InitSpec from(Eigen::VectorXd v);
  static InitSpec random_ball(double radius, std::uint64_t seed);
};

enum class SolverMode { Strict, ExperimentalCappedL1 };

enum class StopReason { Running, Stationary, ObjectivePlateau, MaxIters };

struct SolverConfig {
  double eta = 1.0;  // inverse stepsize; backtracking only ever raises it
  double R = 1.0;    // side-constraint radius, g(beta) <= R
  int max_iters = 2000;
  double tol_obj = 1e-10;  // relative objective change over a 5-iteration window
  double tol_stat = 1e-6;  // stationarity residual
  InitSpec init;
  SolverMode mode = SolverMode::Strict;
  double psd_floor = 1e-6;  // graphical-lasso eigenvalue floor
  bool backtrack = true;
  int stationarity_stride = 1;  // residual check cadence during run()
  // Optional reference points recorded in the trace (NaN columns if absent).
  std::optional<Eigen::VectorXd> trace_ref;
  std::optional<Eigen::VectorXd> trace_star;

  void validate() const;
};

struct TraceRow {
  int iter = 0;
  double objective = 0.0;
  double opt_error = 0.0;   // ||beta_t - trace_ref||, NaN without a reference
  double stat_error = 0.0;  // ||beta_t - trace_star||, NaN without a reference
  double eta = 0.0;
  bool projected = false;
};

struct SolverState {
  Eigen::VectorXd beta;
  int t = 0;
  double objective = 0.0;
  double loss_value = 0.0;
  double eta = 0.0;  // current inverse stepsize (monotone under backtracking)
  std::vector<TraceRow> trace;
};

struct StationaryPoint {
  Eigen::VectorXd beta;
  double residual = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  StopReason reason = StopReason::Running;
  std::vector<TraceRow> trace;
};

struct ContractionEstimate {
  double kappa = 0.0;
  double varphi = 0.0;
  long t_star = -1;
  bool kappa_in_range = false;
};

struct RscFit {
  double alpha1 = 0.0;
  double tau1 = 0.0;
  double alpha2 = 0.0;
  double tau2 = 0.0;
  bool ok = false;
  int samples_regime1 = 0;
  int samples_regime2 = 0;
};

// Feasible starting state: builds beta0 from cfg.init, projects it onto
// {g <= R} if needed, and for matrix-domain losses enforces the PD floor.
SolverState init_state(const LossHandle& loss, const PenaltySpec& penalty,
                       const SolverConfig& cfg);

// One composite gradient update: shift by the modified-loss gradient, solve
// the unconstrained prox in closed form, project back to the g-ball if the
// side constraint is violated, and (for the graphical lasso) re-establish the
// PD cone. Backtracking doubles eta until the quadratic model dominates the
// step. Objectives are nonincreasing when backtracking is on.
void composite_step(SolverState& state, const LossHandle& loss, const PenaltySpec& penalty,
                    const SolverConfig& cfg);

// Euclidean projection onto {beta : g(beta) <= R} via bisection on the
// Lagrange multiplier of the convex dual; each multiplier evaluation is one
// closed-form prox. Pass-through when g(v) <= R. Throws if the bisection
// fails to bracket within 200 steps.
Eigen::VectorXd project_g_ball(const Eigen::VectorXd& v, const PenaltySpec& penalty, double R);

// First-order stationarity residual. Interior points: coordinatewise distance
// of -grad L_n to the penalty subdifferential, in the max norm. Boundary
// points (g within 1e-6 relative of R): scaled fixed-point residual
// eta * ||beta - P(beta - grad phi / eta)|| with P the g-ball projection.
double check_stationarity(const Eigen::VectorXd& beta, const LossHandle& loss,
                          const PenaltySpec& penalty, const SolverConfig& cfg);

// Full solve: composite steps until the stationarity residual drops below
// tol_stat, the relative objective change over a 5-iteration window drops
// below tol_obj, or max_iters.
StationaryPoint run(const LossHandle& loss, const PenaltySpec& penalty,
                    const SolverConfig& cfg);

// Contraction diagnostics: varphi = tau * k * log(p)/n / (2 alpha - mu),
// kappa = (1 - (2 alpha - mu)/(8 eta) + varphi)/(1 - varphi), and the
// iteration count guaranteeing squared accuracy delta^2 given the initial
// objective gap and the product lambda*R*L. The constant inside varphi is
// fixed at 1; outputs are order-of-magnitude diagnostics only.
ContractionEstimate contraction_estimate(double alpha, double mu, double eta, double tau,
                                         int k, int n, int p, double delta,
                                         double objective_gap = 1.0, double lambda_R_L = 1.0);

// Empirical restricted-strong-convexity probe: samples perturbations in both
// norm regimes (mixing sparse and dense directions), evaluates the gradient
// inner product E(D) = <grad L(b*+D) - grad L(b*), D>, and fits the tightest
// (alpha, tau) for which the two RSC lower bounds hold on every sample.
RscFit rsc_probe(const LossHandle& loss, const Eigen::VectorXd& beta_star, int n_pairs,
                 std::uint64_t seed);

// Side-constraint value used by the solver: the convex side function, or the
// l1 norm for capped-l1 in experimental mode.
double constraint_value(const PenaltySpec& penalty, SolverMode mode,
                        const Eigen::VectorXd& beta);

}  // namespace ncmest
