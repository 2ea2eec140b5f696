#include "ncmest/solver.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ncmest/rng.hpp"

namespace ncmest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double solver_mu(const PenaltySpec& pen) {
  return pen.has_finite_mu() ? pen.mu() : 0.0;
}

// Penalty whose side function defines the feasible ball. Capped-l1 has no
// convex side function; experimental mode substitutes the l1 ball.
PenaltySpec ball_penalty(const PenaltySpec& pen, SolverMode mode) {
  if (pen.kind == PenaltyKind::CappedL1) {
    if (mode != SolverMode::ExperimentalCappedL1)
      throw std::domain_error("solver: capped-l1 requires ExperimentalCappedL1 mode");
    return PenaltySpec::l1(pen.lambda);
  }
  return pen;
}

// Symmetrize + eigenvalue-floor the candidate, then restore the side
// constraint, alternating until both hold (both sets are convex; in practice
// one clip-and-reproject pass settles it).
bool enforce_omega(Eigen::VectorXd& v, const LossHandle& loss, const PenaltySpec& ball,
                   SolverMode mode, double R, double floor) {
  bool adjusted = false;
  for (int round = 0; round < 8; ++round) {
    Eigen::MatrixXd theta = loss.as_matrix(v);
    theta = 0.5 * (theta + theta.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(theta);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("solver: eigendecomposition failed on an iterate");
    if (es.eigenvalues().minCoeff() < floor) {
      const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(floor);
      theta = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
      theta = 0.5 * (theta + theta.transpose()).eval();
      adjusted = true;
    }
    v = loss.from_matrix(theta);
    if (constraint_value(ball, mode, v) <= R * (1.0 + 1e-12)) return adjusted;
    v = project_g_ball(v, ball, R);
    adjusted = true;
  }
  return adjusted;
}

void push_trace(SolverState& st, const SolverConfig& cfg, bool projected) {
  TraceRow row;
  row.iter = st.t;
  row.objective = st.objective;
  row.opt_error = cfg.trace_ref ? (st.beta - *cfg.trace_ref).norm() : kNaN;
  row.stat_error = cfg.trace_star ? (st.beta - *cfg.trace_star).norm() : kNaN;
  row.eta = st.eta;
  row.projected = projected;
  st.trace.push_back(row);
}

double stationarity_residual(const Eigen::VectorXd& beta, const LossHandle& loss,
                             const PenaltySpec& pen, const SolverConfig& cfg, double eta) {
  const double g = constraint_value(pen, cfg.mode, beta);
  const Eigen::VectorXd grad = loss.gradient(beta);
  if (g < cfg.R * (1.0 - 1e-6)) {
    // Interior: distance from -grad to the penalty subdifferential, max norm.
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
      const SubgradientInterval iv = subgradient_interval(pen, beta[j]);
      const double target = -grad[j];
      double dist = 0.0;
      if (target < iv.lo) dist = iv.lo - target;
      else if (target > iv.hi) dist = target - iv.hi;
      worst = std::max(worst, dist);
    }
    return worst;
  }
  // Boundary: projected fixed-point residual with the minimal-distance
  // composite subgradient.
  Eigen::VectorXd s(beta.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const SubgradientInterval iv = subgradient_interval(pen, beta[j]);
    s[j] = std::clamp(-grad[j], iv.lo, iv.hi);
  }
  const Eigen::VectorXd v = beta - (grad + s) / eta;
  const PenaltySpec ball = ball_penalty(pen, cfg.mode);
  const Eigen::VectorXd w =
      constraint_value(pen, cfg.mode, v) <= cfg.R ? v : project_g_ball(v, ball, cfg.R);
  return eta * (beta - w).norm();
}

}  // namespace

InitSpec InitSpec::from(Eigen::VectorXd v) {
  InitSpec s;
  s.kind = InitKind::Given;
  s.given = std::move(v);
  return s;
}

InitSpec InitSpec::random_ball(double radius, std::uint64_t seed) {
  InitSpec s;
  s.kind = InitKind::RandomBall;
  s.radius = radius;
  s.seed = seed;
  return s;
}

void SolverConfig::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("solver: eta must be positive");
  if (!(R > 0.0)) throw std::invalid_argument("solver: R must be positive");
  if (max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
  if (!(tol_obj > 0.0) || !(tol_stat > 0.0))
    throw std::invalid_argument("solver: tolerances must be positive");
  if (!(psd_floor > 0.0)) throw std::invalid_argument("solver: psd_floor must be positive");
}

double constraint_value(const PenaltySpec& pen, SolverMode mode, const Eigen::VectorXd& beta) {
  if (pen.kind == PenaltyKind::CappedL1) {
    if (mode != SolverMode::ExperimentalCappedL1)
      throw std::domain_error("solver: capped-l1 requires ExperimentalCappedL1 mode");
    return beta.lpNorm<1>();
  }
  return side_function(pen, beta);
}

Eigen::VectorXd project_g_ball(const Eigen::VectorXd& v, const PenaltySpec& pen, double R) {
  if (!pen.has_finite_mu())
    throw std::invalid_argument("project_g_ball: penalty must have a finite mu");
  if (!(R > 0.0)) throw std::invalid_argument("project_g_ball: R must be positive");
  if (side_function(pen, v) <= R) return v;

  const double mu = pen.mu();
  const double lam = pen.lambda;
  // For multiplier t the Lagrangian minimizer is a closed-form prox; every
  // coordinate with |v_j| <= t lands at zero, so t = ||v||_inf brackets from
  // the feasible side.
  const auto point_at = [&](double t) {
    const double denom = 1.0 + t * mu / lam;
    ProxRequest req;
    req.z = v;
    req.nu = (t / lam) / denom;
    req.shrink = 1.0 / denom;
    return prox_vector(pen, req);
  };

  double lo = 0.0;
  double hi = v.lpNorm<Eigen::Infinity>();
  const double width0 = hi;
  Eigen::VectorXd best = point_at(hi);
  double best_g = side_function(pen, best);
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * (1.0 + width0); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= 0.0) break;
    const Eigen::VectorXd w = point_at(mid);
    const double g = side_function(pen, w);
    if (g > R) {
      lo = mid;
    } else {
      hi = mid;
      best = w;
      best_g = g;
    }
  }
  if (best_g < R * (1.0 - 1e-6) || best_g > R)
    throw std::runtime_error(
        "project_g_ball: dual bisection did not reach the boundary in 200 steps");
  return best;
}

SolverState init_state(const LossHandle& loss, const PenaltySpec& pen,
                       const SolverConfig& cfg) {
  cfg.validate();
  pen.validate();
  const PenaltySpec ball = ball_penalty(pen, cfg.mode);
  const int d = loss.dim();

  Eigen::VectorXd beta0;
  switch (cfg.init.kind) {
    case InitKind::Zero:
      if (loss.matrix_domain())
        throw std::invalid_argument(
            "solver: zero init is outside the PD cone; pass InitSpec::from(...)");
      beta0 = Eigen::VectorXd::Zero(d);
      break;
    case InitKind::Given:
      if (cfg.init.given.size() != d)
        throw std::invalid_argument("solver: init vector has wrong dimension");
      beta0 = cfg.init.given;
      break;
    case InitKind::RandomBall: {
      if (loss.matrix_domain())
        throw std::invalid_argument(
            "solver: random-ball init undefined on the PD cone; pass InitSpec::from(...)");
      Rng rng(cfg.init.seed);
      beta0 = rng.uniform_ball(d, cfg.init.radius);
      break;
    }
  }

  bool adjusted = false;
  if (constraint_value(pen, cfg.mode, beta0) > cfg.R) {
    beta0 = project_g_ball(beta0, ball, cfg.R);
    adjusted = true;
  }
  if (loss.matrix_domain())
    adjusted |= enforce_omega(beta0, loss, ball, cfg.mode, cfg.R, cfg.psd_floor);

  SolverState st;
  st.beta = std::move(beta0);
  st.t = 0;
  st.eta = std::max(cfg.eta, solver_mu(pen));
  st.loss_value = loss.value(st.beta);
  st.objective = st.loss_value + penalty_value(pen, st.beta);
  push_trace(st, cfg, adjusted);
  return st;
}

void composite_step(SolverState& st, const LossHandle& loss, const PenaltySpec& pen,
                    const SolverConfig& cfg) {
  const double mu = solver_mu(pen);
  const PenaltySpec ball = ball_penalty(pen, cfg.mode);
  const Eigen::VectorXd grad = loss.gradient(st.beta);
  if (!grad.allFinite())
    throw std::runtime_error("solver: non-finite gradient at iteration " +
                             std::to_string(st.t) + ", objective " +
                             std::to_string(st.objective));

  const double phi_t = st.objective;
  double eta = st.eta;
  Eigen::VectorXd cand;
  double cand_loss = 0.0;
  bool projected = false;

  for (;;) {
    projected = false;
    const Eigen::VectorXd v = st.beta - (grad - mu * st.beta) / eta;
    const double denom = 1.0 + mu / eta;
    ProxRequest req;
    req.z = v;
    req.nu = (1.0 / eta) / denom;
    req.shrink = 1.0 / denom;
    cand = prox_vector(pen, req);
    if (constraint_value(pen, cfg.mode, cand) > cfg.R) {
      cand = project_g_ball(v, ball, cfg.R);
      projected = true;
    }
    if (loss.matrix_domain())
      projected |= enforce_omega(cand, loss, ball, cfg.mode, cfg.R, cfg.psd_floor);

    const bool last_try = !cfg.backtrack || eta >= 1e14;
    try {
      cand_loss = loss.value(cand);
      const Eigen::VectorXd d = cand - st.beta;
      const double dd = d.squaredNorm();
      const double tbar = cand_loss - st.loss_value - grad.dot(d) - 0.5 * mu * dd;
      const double phi_cand = cand_loss + penalty_value(pen, cand);
      const double slack = 1e-12 * std::max(1.0, std::abs(phi_t));
      if (tbar <= 0.5 * eta * dd + slack && phi_cand <= phi_t + slack) break;
      if (last_try) break;
    } catch (const NonPdError&) {
      if (last_try) throw;
    }
    eta *= 2.0;
  }

  st.eta = eta;
  st.beta = std::move(cand);
  st.t += 1;
  st.loss_value = cand_loss;
  st.objective = cand_loss + penalty_value(pen, st.beta);
  push_trace(st, cfg, projected);
}

double check_stationarity(const Eigen::VectorXd& beta, const LossHandle& loss,
                          const PenaltySpec& pen, const SolverConfig& cfg) {
  return stationarity_residual(beta, loss, pen, cfg, std::max(cfg.eta, solver_mu(pen)));
}

StationaryPoint run(const LossHandle& loss, const PenaltySpec& pen, const SolverConfig& cfg) {
  SolverState st = init_state(loss, pen, cfg);
  StopReason reason = StopReason::MaxIters;
  double resid = kNaN;
  const int stride = std::max(1, cfg.stationarity_stride);

  std::vector<double> objs;
  objs.reserve(static_cast<size_t>(cfg.max_iters) + 1);
  objs.push_back(st.objective);

  for (int t = 1; t <= cfg.max_iters; ++t) {
    composite_step(st, loss, pen, cfg);
    objs.push_back(st.objective);
    if (t % stride == 0 || t == cfg.max_iters) {
      resid = stationarity_residual(st.beta, loss, pen, cfg, st.eta);
      if (resid < cfg.tol_stat) {
        reason = StopReason::Stationary;
        break;
      }
    } else {
      resid = kNaN;
    }
    if (objs.size() >= 6) {
      const double now = objs.back();
      const double then = objs[objs.size() - 6];
      if (std::abs(now - then) < cfg.tol_obj * std::max(1.0, std::abs(now))) {
        reason = StopReason::ObjectivePlateau;
        break;
      }
    }
  }
  if (std::isnan(resid) || reason != StopReason::Stationary)
    resid = stationarity_residual(st.beta, loss, pen, cfg, st.eta);

  StationaryPoint out;
  out.beta = std::move(st.beta);
  out.residual = resid;
  out.objective = st.objective;
  out.iterations = st.t;
  out.reason = reason;
  out.converged = reason == StopReason::Stationary || reason == StopReason::ObjectivePlateau;
  out.trace = std::move(st.trace);
  return out;
}

ContractionEstimate contraction_estimate(double alpha, double mu, double eta, double tau,
                                         int k, int n, int p, double delta,
                                         double objective_gap, double lambda_R_L) {
  if (!(2.0 * alpha > mu))
    throw std::domain_error("contraction_estimate: requires 2*alpha > mu");
  if (!(eta > 0.0) || n < 1 || p < 2 || k < 0)
    throw std::invalid_argument("contraction_estimate: bad arguments");

  ContractionEstimate out;
  out.varphi = tau * k * (std::log(static_cast<double>(p)) / n) / (2.0 * alpha - mu);
  const double denom = 1.0 - out.varphi;
  if (denom <= 0.0) {
    out.kappa = std::numeric_limits<double>::infinity();
    out.kappa_in_range = false;
    return out;
  }
  out.kappa = (1.0 - (2.0 * alpha - mu) / (8.0 * eta) + out.varphi) / denom;
  out.kappa_in_range = out.kappa > 0.0 && out.kappa < 1.0;
  if (out.kappa_in_range && delta > 0.0) {
    const double rate = std::log(1.0 / out.kappa);
    const double d2 = delta * delta;
    const double term1 =
        2.0 * std::max(0.0, std::log(std::max(objective_gap, 0.0) / d2)) / rate;
    const double y = lambda_R_L / d2;
    const double term2 =
        y > M_E ? (1.0 + std::log(2.0) / rate) * std::log(std::log(y)) : 0.0;
    out.t_star = static_cast<long>(std::ceil(term1 + std::max(0.0, term2)));
  }
  return out;
}

RscFit rsc_probe(const LossHandle& loss, const Eigen::VectorXd& beta_star, int n_pairs,
                 std::uint64_t seed) {
  if (n_pairs < 4) throw std::invalid_argument("rsc_probe: need at least 4 samples");
  const int d = loss.dim();
  if (beta_star.size() != d) throw std::invalid_argument("rsc_probe: dimension mismatch");
  Rng rng(seed);
  const Eigen::VectorXd grad_star = loss.gradient(beta_star);
  const double p = static_cast<double>(loss.ambient_p());
  const double n = static_cast<double>(std::max(loss.n_samples(), 1));
  const double ratio1 = std::log(std::max(p, 2.0)) / n;
  const double ratio2 = std::sqrt(ratio1);

  std::vector<double> e1, a1, b1, e2, a2, b2;
  double max_e = -std::numeric_limits<double>::infinity();

  const int sparse_support = std::max(1, static_cast<int>(std::ceil(std::sqrt(d))));
  for (int i = 0; i < n_pairs; ++i) {
    const bool far_regime = (i % 2) == 1;
    Eigen::VectorXd dir;
    if (i % 4 < 2) {
      dir = rng.normal_vector(d);
    } else {
      // Sparse (cone-like) direction.
      dir = Eigen::VectorXd::Zero(d);
      const int s = 1 + static_cast<int>(rng.uniform_int(sparse_support));
      for (int j = 0; j < s; ++j)
        dir[static_cast<Eigen::Index>(rng.uniform_int(d))] = rng.normal();
      if (dir.norm() == 0.0) dir[0] = 1.0;
    }
    if (loss.matrix_domain()) {
      const Eigen::MatrixXd m = loss.as_matrix(dir);
      dir = loss.from_matrix(0.5 * (m + m.transpose()));
    }
    const double target = far_regime ? rng.uniform(1.0, 3.0) : rng.uniform(0.05, 1.0);
    Eigen::VectorXd delta = dir * (target / dir.norm());

    double e = 0.0;
    bool valid = false;
    for (int shrink = 0; shrink < 40; ++shrink) {
      try {
        e = (loss.gradient(beta_star + delta) - grad_star).dot(delta);
        valid = true;
        break;
      } catch (const NonPdError&) {
        delta *= 0.5;  // stay inside the PD cone
      }
    }
    if (!valid) continue;
    max_e = std::max(max_e, e);
    const double l2 = delta.norm();
    const double l1 = delta.lpNorm<1>();
    if (l2 <= 1.0) {
      e1.push_back(e);
      a1.push_back(l2 * l2);
      b1.push_back(ratio1 * l1 * l1);
    } else {
      e2.push_back(e);
      a2.push_back(l2);
      b2.push_back(ratio2 * l1);
    }
  }

  // Exact two-variable fit: alpha_max(tau) = min_i (e_i + tau b_i)/a_i is the
  // feasibility frontier. Return the tau = 0 corner when feasible, otherwise
  // the smallest tau that makes every constraint strictly satisfiable.
  const auto fit = [](const std::vector<double>& e, const std::vector<double>& a,
                      const std::vector<double>& b) -> std::pair<double, double> {
    if (e.empty()) return {0.0, 0.0};
    const auto alpha_at = [&](double tau) {
      double m = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < e.size(); ++i) m = std::min(m, (e[i] + tau * b[i]) / a[i]);
      return m;
    };
    const double alpha0 = alpha_at(0.0);
    if (alpha0 > 0.0) return {alpha0, 0.0};
    double tau = 0.0;
    for (size_t i = 0; i < e.size(); ++i)
      if (e[i] <= 0.0) tau = std::max(tau, -e[i] / b[i]);
    tau *= 1.0 + 1e-9;
    tau += 1e-300;
    return {alpha_at(tau), tau};
  };

  RscFit out;
  std::tie(out.alpha1, out.tau1) = fit(e1, a1, b1);
  std::tie(out.alpha2, out.tau2) = fit(e2, a2, b2);
  out.samples_regime1 = static_cast<int>(e1.size());
  out.samples_regime2 = static_cast<int>(e2.size());
  out.ok = max_e > 0.0 && out.alpha1 > 0.0 && out.samples_regime1 > 0;
  return out;
}

}  // namespace ncmest
