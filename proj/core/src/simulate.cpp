#include "ncmest/simulate.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ncmest/rng.hpp"

namespace ncmest {

int TargetSpec::resolved_k() const {
  if (k >= 0) return k;
  return static_cast<int>(std::floor(std::sqrt(static_cast<double>(p))));
}

Eigen::VectorXd gen_target(const TargetSpec& spec) {
  const int k = spec.resolved_k();
  if (spec.p <= 0) throw std::invalid_argument("gen_target: p must be positive");
  if (k > spec.p) throw std::invalid_argument("gen_target: k exceeds p");
  Rng rng(spec.seed);

  // Uniform k-subset via partial Fisher-Yates.
  std::vector<int> idx(static_cast<size_t>(spec.p));
  std::iota(idx.begin(), idx.end(), 0);
  for (int j = 0; j < k; ++j) {
    const auto swap_with =
        j + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.p - j)));
    std::swap(idx[static_cast<size_t>(j)], idx[static_cast<size_t>(swap_with)]);
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(spec.p);
  for (int j = 0; j < k; ++j) beta[idx[static_cast<size_t>(j)]] = rng.normal();
  if (spec.normalize && k > 0) {
    const double nrm = beta.norm();
    if (nrm > 0.0) beta /= nrm;
  }
  return beta;
}

Eigen::MatrixXd toeplitz_covariance(int p, double zeta) {
  if (!(zeta >= 0.0) || zeta >= 1.0)
    throw std::invalid_argument("toeplitz_covariance: zeta must lie in [0, 1)");
  Eigen::MatrixXd sigma(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(zeta, std::abs(i - j));
  return sigma;
}

Eigen::MatrixXd gen_design(const DesignSpec& spec) {
  if (spec.n <= 0 || spec.p <= 0) throw std::invalid_argument("gen_design: bad dimensions");
  Rng rng(spec.seed);
  Eigen::MatrixXd G(spec.n, spec.p);
  for (int i = 0; i < spec.n; ++i)
    for (int j = 0; j < spec.p; ++j) G(i, j) = rng.normal();
  if (spec.cov == DesignCov::Identity || spec.zeta == 0.0) return G;
  const Eigen::MatrixXd sigma = toeplitz_covariance(spec.p, spec.zeta);
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();
  return G * L.transpose();
}

Eigen::VectorXd gen_linear_response(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta_star,
                                    double noise_sd, std::uint64_t seed) {
  if (X.cols() != beta_star.size())
    throw std::invalid_argument("gen_linear_response: dimension mismatch");
  Rng rng(seed);
  Eigen::VectorXd y = X * beta_star;
  if (noise_sd != 0.0)
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise_sd * rng.normal();
  return y;
}

Eigen::MatrixXd corrupt(const Eigen::MatrixXd& X, const CorruptionSpec& spec,
                        std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd Z = X;
  switch (spec.mode) {
    case CorruptionMode::None:
      break;
    case CorruptionMode::AdditiveNoise:
      if (spec.sigma_w != 0.0)
        for (Eigen::Index i = 0; i < Z.rows(); ++i)
          for (Eigen::Index j = 0; j < Z.cols(); ++j) Z(i, j) += spec.sigma_w * rng.normal();
      break;
    case CorruptionMode::Missing: {
      if (!(spec.vartheta >= 0.0) || spec.vartheta >= 1.0)
        throw std::invalid_argument("corrupt: vartheta must lie in [0, 1)");
      const double nan = std::numeric_limits<double>::quiet_NaN();
      for (Eigen::Index i = 0; i < Z.rows(); ++i)
        for (Eigen::Index j = 0; j < Z.cols(); ++j)
          if (rng.bernoulli(spec.vartheta)) Z(i, j) = nan;
      break;
    }
  }
  return Z;
}

Eigen::VectorXd gen_logistic_response(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& beta_star, std::uint64_t seed) {
  if (X.cols() != beta_star.size())
    throw std::invalid_argument("gen_logistic_response: dimension mismatch");
  Rng rng(seed);
  const Eigen::VectorXd eta = X * beta_star;
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-eta[i]))) ? 1.0 : 0.0;
  return y;
}

PrecisionModel gen_sparse_precision(int p, int s, int n, std::uint64_t seed) {
  if (p <= 0 || n <= 0) throw std::invalid_argument("gen_sparse_precision: bad dimensions");
  if (s < 0 || s > p * (p - 1))
    throw std::invalid_argument("gen_sparse_precision: s must lie in [0, p(p-1)]");
  Rng rng(seed);

  PrecisionModel out;
  out.theta_star = Eigen::MatrixXd::Zero(p, p);
  const int pairs = s / 2;  // each unordered pair contributes two nonzeros
  int placed = 0;
  int guard = 0;
  while (placed < pairs && guard++ < 100 * (pairs + 1)) {
    const int i = static_cast<int>(rng.uniform_int(p));
    const int j = static_cast<int>(rng.uniform_int(p));
    if (i == j || out.theta_star(i, j) != 0.0) continue;
    const double mag = rng.uniform(0.05, 0.25) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
    out.theta_star(i, j) = mag;
    out.theta_star(j, i) = mag;
    ++placed;
  }
  // Diagonal dominance: lambda_min >= 0.35.
  for (int i = 0; i < p; ++i) {
    double row = 0.0;
    for (int j = 0; j < p; ++j)
      if (j != i) row += std::abs(out.theta_star(i, j));
    out.theta_star(i, i) = 0.35 + row;
  }

  const Eigen::LLT<Eigen::MatrixXd> llt(out.theta_star);
  out.sigma = llt.solve(Eigen::MatrixXd::Identity(p, p));
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();

  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(out.sigma).matrixL();
  Eigen::MatrixXd G(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) G(i, j) = rng.normal();
  out.samples = G * L.transpose();
  out.sigma_hat = out.samples.transpose() * out.samples / static_cast<double>(n);
  out.sigma_hat = 0.5 * (out.sigma_hat + out.sigma_hat.transpose()).eval();
  return out;
}

double noise_sd_for_snr(const Eigen::VectorXd& beta_star, const Eigen::MatrixXd& sigma_x,
                        double snr) {
  if (!(snr > 0.0)) throw std::invalid_argument("noise_sd_for_snr: snr must be positive");
  const double signal = beta_star.dot(sigma_x * beta_star);
  return std::sqrt(signal / snr);
}

double noise_sd_for_snr_identity(const Eigen::VectorXd& beta_star, double snr) {
  if (!(snr > 0.0)) throw std::invalid_argument("noise_sd_for_snr: snr must be positive");
  return std::sqrt(beta_star.squaredNorm() / snr);
}

}  // namespace ncmest
