#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace ncmest {

enum class PenaltyKind { L1, Scad, Mcp, CappedL1 };

// A separable regularizer rho_lambda(beta) = sum_j rho_lambda(beta_j) together
// with its curvature constants. All four kinds have Lipschitz constant L = 1
// in lambda units. mu is the weak-convexity constant: the smallest m such
// that rho_lambda(t) + (m/2) t^2 is convex. Capped-l1 has no finite mu; it
// carries the majorant constants (mu1 = 0, mu2 = 1/c) instead.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::L1;
  double lambda = 1.0;
  double a = 3.7;  // SCAD, requires a > 2
  double b = 3.5;  // MCP, requires b > 0
  double c = 2.0;  // capped-l1, requires c >= 1

  static PenaltySpec l1(double lambda);
  static PenaltySpec scad(double lambda, double a = 3.7);
  static PenaltySpec mcp(double lambda, double b = 3.5);
  static PenaltySpec capped_l1(double lambda, double c = 2.0);
  static PenaltySpec make(const std::string& name, double lambda, double a = 3.7,
                          double b = 3.5, double c = 2.0);

  void validate() const;  // throws std::invalid_argument on bad parameters
  double L() const { return 1.0; }
  bool has_finite_mu() const { return kind != PenaltyKind::CappedL1; }
  double mu() const;  // throws std::domain_error for capped-l1
  double mu1() const { return 0.0; }
  double mu2() const;  // 1/c for capped-l1
  const char* name() const;
};

// Componentwise shrinkage request: the unconstrained composite step reduces to
// prox_scalar(shrink * z_j, nu) per coordinate, with shrink = 1/(1 + mu/eta)
// and nu = (1/eta)/(1 + mu/eta).
struct ProxRequest {
  Eigen::VectorXd z;
  double nu = 1.0;
  double shrink = 1.0;
  void validate() const;  // nu > 0, shrink in (0, 1]
};

struct SubgradientInterval {
  double lo = 0.0;
  double hi = 0.0;
};

double penalty_value(const PenaltySpec& spec, double t);
double penalty_value(const PenaltySpec& spec, const Eigen::VectorXd& beta);

// Derivative of rho_lambda away from its kinks. Throws std::domain_error at
// t = 0 (all kinds) and at |t| = lambda*c/2 for capped-l1; callers use
// subgradient_interval at those points.
double penalty_derivative(const PenaltySpec& spec, double t);

// Valid subgradient set at the point t. At t = 0 this is [-lambda L, lambda L];
// at the capped-l1 kink it is the interval spanned by the one-sided limits.
SubgradientInterval subgradient_interval(const PenaltySpec& spec, double t);

// Exact minimizer of (1/2)(x - z)^2 + nu * rho_lambda(x). Closed form for
// L1/SCAD/MCP; SCAD requires nu < a-1 and MCP requires nu < b (otherwise the
// piecewise denominators lose positivity and std::invalid_argument is
// thrown). Capped-l1 compares the two stationary candidates (soft-thresholded
// point and identity point) by objective value, ties toward smaller magnitude.
double prox_scalar(const PenaltySpec& spec, double z, double nu);

Eigen::VectorXd prox_vector(const PenaltySpec& spec, const ProxRequest& req);

// Convex side function g(beta) = (rho_lambda(beta) + (mu/2)||beta||_2^2) / lambda.
// Satisfies g(beta) >= ||beta||_1. Throws std::domain_error for capped-l1,
// which admits no such convexification.
double side_function(const PenaltySpec& spec, const Eigen::VectorXd& beta);

// Convex upper bound on the capped-l1 penalty anchored at beta_tilde: each
// coordinate keeps either the linear branch lambda|t| (when |beta_tilde_j| <=
// lambda c/2) or the constant branch lambda^2 c/2. The bound dominates rho
// everywhere and matches it at the anchor.
struct MajorantSpec {
  double lambda = 1.0;
  double c = 1.0;
  std::vector<char> linear_branch;  // per coordinate

  double value(int j, double t) const;
  double value(const Eigen::VectorXd& beta) const;
};

MajorantSpec capped_l1_majorant(const PenaltySpec& spec, const Eigen::VectorXd& beta_tilde);

}  // namespace ncmest
