#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace ncmest {

enum class DesignCov { Identity, Toeplitz };

struct DesignSpec {
  int n = 0;
  int p = 0;
  DesignCov cov = DesignCov::Identity;
  double zeta = 0.0;  // Toeplitz correlation, Sigma_ij = zeta^|i-j|
  std::uint64_t seed = 0;
};

struct TargetSpec {
  int p = 0;
  int k = -1;  // -1 resolves to floor(sqrt(p))
  bool normalize = true;
  std::uint64_t seed = 0;

  int resolved_k() const;
};

enum class CorruptionMode { None, AdditiveNoise, Missing };

struct CorruptionSpec {
  CorruptionMode mode = CorruptionMode::None;
  double sigma_w = 0.2;    // additive-noise sd
  double vartheta = 0.0;   // missing probability, in [0, 1)
  double noise_sd = 0.1;   // response noise sd
};

// k-sparse target with uniformly random support, standard-normal nonzeros,
// unit l2 norm when normalize is set.
Eigen::VectorXd gen_target(const TargetSpec& spec);

// Rows i.i.d. N(0, Sigma); Toeplitz covariance drawn through its Cholesky
// factor.
Eigen::MatrixXd gen_design(const DesignSpec& spec);

Eigen::MatrixXd toeplitz_covariance(int p, double zeta);

// y = X beta_star + noise_sd * eps, eps ~ N(0, I).
Eigen::VectorXd gen_linear_response(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta_star,
                                    double noise_sd, std::uint64_t seed);

// Additive mode adds N(0, sigma_w^2 I); missing mode erases entries
// independently with probability vartheta (NaN marks).
Eigen::MatrixXd corrupt(const Eigen::MatrixXd& X, const CorruptionSpec& spec,
                        std::uint64_t seed);

// y_i ~ Bernoulli(sigmoid(x_i' beta_star)).
Eigen::VectorXd gen_logistic_response(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& beta_star, std::uint64_t seed);

struct PrecisionModel {
  Eigen::MatrixXd theta_star;  // sparse precision, lambda_min >= 1 by construction
  Eigen::MatrixXd sigma;       // theta_star^{-1}
  Eigen::MatrixXd samples;     // n x p Gaussian draws from N(0, sigma)
  Eigen::MatrixXd sigma_hat;   // samples' Gram matrix / n
};

// Random sparse precision matrix with at most s off-diagonal nonzeros
// (diagonally dominant, so it is safely positive definite), its inverse, and
// n samples with the empirical covariance.
PrecisionModel gen_sparse_precision(int p, int s, int n, std::uint64_t seed);

// Response noise sd achieving the requested SNR = beta' Sigma beta / sd^2.
double noise_sd_for_snr(const Eigen::VectorXd& beta_star, const Eigen::MatrixXd& sigma_x,
                        double snr);
double noise_sd_for_snr_identity(const Eigen::VectorXd& beta_star, double snr);

}  // namespace ncmest
