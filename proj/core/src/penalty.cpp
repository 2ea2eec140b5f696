#include "ncmest/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ncmest {

namespace {

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

PenaltySpec PenaltySpec::l1(double lambda) {
  PenaltySpec s;
  s.kind = PenaltyKind::L1;
  s.lambda = lambda;
  s.validate();
  return s;
}

PenaltySpec PenaltySpec::scad(double lambda, double a) {
  PenaltySpec s;
  s.kind = PenaltyKind::Scad;
  s.lambda = lambda;
  s.a = a;
  s.validate();
  return s;
}

PenaltySpec PenaltySpec::mcp(double lambda, double b) {
  PenaltySpec s;
  s.kind = PenaltyKind::Mcp;
  s.lambda = lambda;
  s.b = b;
  s.validate();
  return s;
}

PenaltySpec PenaltySpec::capped_l1(double lambda, double c) {
  PenaltySpec s;
  s.kind = PenaltyKind::CappedL1;
  s.lambda = lambda;
  s.c = c;
  s.validate();
  return s;
}

PenaltySpec PenaltySpec::make(const std::string& name, double lambda, double a, double b,
                              double c) {
  if (name == "l1" || name == "lasso") return l1(lambda);
  if (name == "scad") return scad(lambda, a);
  if (name == "mcp") return mcp(lambda, b);
  if (name == "capped" || name == "capped_l1") return capped_l1(lambda, c);
  throw std::invalid_argument("unknown penalty kind: " + name);
}

void PenaltySpec::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("penalty: lambda must be positive");
  if (kind == PenaltyKind::Scad && !(a > 2.0))
    throw std::invalid_argument("penalty: SCAD requires a > 2");
  if (kind == PenaltyKind::Mcp && !(b > 0.0))
    throw std::invalid_argument("penalty: MCP requires b > 0");
  if (kind == PenaltyKind::CappedL1 && !(c >= 1.0))
    throw std::invalid_argument("penalty: capped-l1 requires c >= 1");
}

double PenaltySpec::mu() const {
  switch (kind) {
    case PenaltyKind::L1:
      return 0.0;
    case PenaltyKind::Scad:
      return 1.0 / (a - 1.0);
    case PenaltyKind::Mcp:
      return 1.0 / b;
    case PenaltyKind::CappedL1:
      throw std::domain_error("penalty: capped-l1 has no finite weak-convexity constant");
  }
  throw std::logic_error("penalty: bad kind");
}

double PenaltySpec::mu2() const {
  if (kind != PenaltyKind::CappedL1)
    throw std::domain_error("penalty: mu2 is a capped-l1 majorant constant");
  return 1.0 / c;
}

const char* PenaltySpec::name() const {
  switch (kind) {
    case PenaltyKind::L1:
      return "l1";
    case PenaltyKind::Scad:
      return "scad";
    case PenaltyKind::Mcp:
      return "mcp";
    case PenaltyKind::CappedL1:
      return "capped";
  }
  return "?";
}

void ProxRequest::validate() const {
  if (!(nu > 0.0)) throw std::invalid_argument("prox: nu must be positive");
  if (!(shrink > 0.0) || shrink > 1.0)
    throw std::invalid_argument("prox: shrink must lie in (0, 1]");
}

double penalty_value(const PenaltySpec& s, double t) {
  const double at = std::abs(t);
  const double lam = s.lambda;
  switch (s.kind) {
    case PenaltyKind::L1:
      return lam * at;
    case PenaltyKind::Scad: {
      if (at <= lam) return lam * at;
      if (at <= s.a * lam) return -(at * at - 2.0 * s.a * lam * at + lam * lam) / (2.0 * (s.a - 1.0));
      return (s.a + 1.0) * lam * lam / 2.0;
    }
    case PenaltyKind::Mcp: {
      if (at <= lam * s.b) return lam * at - at * at / (2.0 * s.b);
      return lam * lam * s.b / 2.0;
    }
    case PenaltyKind::CappedL1:
      return std::min(lam * lam * s.c / 2.0, lam * at);
  }
  throw std::logic_error("penalty: bad kind");
}

double penalty_value(const PenaltySpec& s, const Eigen::VectorXd& beta) {
  double total = 0.0;
  for (int j = 0; j < beta.size(); ++j) total += penalty_value(s, beta[j]);
  return total;
}

double penalty_derivative(const PenaltySpec& s, double t) {
  if (t == 0.0)
    throw std::domain_error("penalty: derivative undefined at 0, use subgradient_interval");
  const double at = std::abs(t);
  const double lam = s.lambda;
  switch (s.kind) {
    case PenaltyKind::L1:
      return lam * sgn(t);
    case PenaltyKind::Scad: {
      if (at <= lam) return lam * sgn(t);
      return sgn(t) * std::max(s.a * lam - at, 0.0) / (s.a - 1.0);
    }
    case PenaltyKind::Mcp:
      return lam * sgn(t) * std::max(1.0 - at / (lam * s.b), 0.0);
    case PenaltyKind::CappedL1: {
      const double cap = lam * s.c / 2.0;
      if (at == cap)
        throw std::domain_error("penalty: capped-l1 is not differentiable at |t| = lambda c/2");
      return at < cap ? lam * sgn(t) : 0.0;
    }
  }
  throw std::logic_error("penalty: bad kind");
}

SubgradientInterval subgradient_interval(const PenaltySpec& s, double t) {
  const double lam = s.lambda;
  if (t == 0.0) return {-lam * s.L(), lam * s.L()};
  if (s.kind == PenaltyKind::CappedL1) {
    const double cap = lam * s.c / 2.0;
    if (std::abs(t) == cap) {
      // One-sided limits are lambda (inside) and 0 (outside).
      return t > 0.0 ? SubgradientInterval{0.0, lam} : SubgradientInterval{-lam, 0.0};
    }
  }
  const double d = penalty_derivative(s, t);
  return {d, d};
}

double prox_scalar(const PenaltySpec& s, double z, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("prox: nu must be positive");
  const double lam = s.lambda;
  const double az = std::abs(z);
  const double sz = sgn(z);
  switch (s.kind) {
    case PenaltyKind::L1:
      return sz * std::max(az - nu * lam, 0.0);
    case PenaltyKind::Scad: {
      if (!(nu < s.a - 1.0))
        throw std::invalid_argument("prox: SCAD branches require nu < a - 1");
      if (az <= nu * lam) return 0.0;
      if (az <= (nu + 1.0) * lam) return z - sz * nu * lam;
      if (az <= s.a * lam)
        return (z - sz * s.a * nu * lam / (s.a - 1.0)) / (1.0 - nu / (s.a - 1.0));
      return z;
    }
    case PenaltyKind::Mcp: {
      if (!(nu < s.b)) throw std::invalid_argument("prox: MCP branches require nu < b");
      if (az <= nu * lam) return 0.0;
      if (az <= s.b * lam) return (z - sz * nu * lam) / (1.0 - nu / s.b);
      return z;
    }
    case PenaltyKind::CappedL1: {
      // Piece minimizers of the exact nonconvex objective: the soft-threshold
      // point on the linear branch and the identity point on the flat branch.
      const double soft = sz * std::max(az - nu * lam, 0.0);
      const double f_soft = 0.5 * (soft - z) * (soft - z) + nu * penalty_value(s, soft);
      const double f_id = nu * penalty_value(s, z);
      if (f_soft < f_id) return soft;
      if (f_id < f_soft) return z;
      return std::abs(soft) <= az ? soft : z;
    }
  }
  throw std::logic_error("penalty: bad kind");
}

Eigen::VectorXd prox_vector(const PenaltySpec& s, const ProxRequest& req) {
  req.validate();
  Eigen::VectorXd out(req.z.size());
  for (int j = 0; j < req.z.size(); ++j)
    out[j] = prox_scalar(s, req.shrink * req.z[j], req.nu);
  return out;
}

double side_function(const PenaltySpec& s, const Eigen::VectorXd& beta) {
  if (!s.has_finite_mu())
    throw std::domain_error("penalty: capped-l1 admits no convex side function");
  return (penalty_value(s, beta) + 0.5 * s.mu() * beta.squaredNorm()) / s.lambda;
}

double MajorantSpec::value(int j, double t) const {
  if (linear_branch[static_cast<size_t>(j)]) return lambda * std::abs(t);
  return lambda * lambda * c / 2.0;
}

double MajorantSpec::value(const Eigen::VectorXd& beta) const {
  double total = 0.0;
  for (int j = 0; j < beta.size(); ++j) total += value(j, beta[j]);
  return total;
}

MajorantSpec capped_l1_majorant(const PenaltySpec& s, const Eigen::VectorXd& beta_tilde) {
  if (s.kind != PenaltyKind::CappedL1)
    throw std::invalid_argument("capped_l1_majorant: penalty kind must be capped-l1");
  MajorantSpec m;
  m.lambda = s.lambda;
  m.c = s.c;
  const double cap = s.lambda * s.c / 2.0;
  m.linear_branch.resize(static_cast<size_t>(beta_tilde.size()));
  for (int j = 0; j < beta_tilde.size(); ++j)
    m.linear_branch[static_cast<size_t>(j)] = std::abs(beta_tilde[j]) <= cap ? 1 : 0;
  return m;
}

}  // namespace ncmest
