#pragma once

#include <Eigen/Core>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncmest {

// Raised when a graphical-lasso iterate leaves the positive-definite cone
// (Cholesky failure). The solver treats it as an infeasibility signal during
// backtracking.
struct NonPdError : std::runtime_error {
  explicit NonPdError(const std::string& what) : std::runtime_error(what) {}
};

enum class CorruptionProvenance { AdditiveNoise, MissingData, Clean };

// Quadratic surrogate data for (possibly corrupted) linear regression:
// L_n(beta) = (1/2) beta' Gamma beta - gamma' beta. Gamma is symmetrized on
// construction and may be indefinite when p > n.
struct CorrectedLinearData {
  Eigen::MatrixXd gamma_hat;
  Eigen::VectorXd gamma_vec;
  CorruptionProvenance provenance = CorruptionProvenance::Clean;
  int n_samples = 0;  // set by the builders; 0 means unknown
  std::vector<std::string> warnings;
};

enum class GlmFamily { Logistic, Gaussian };

struct GlmData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  GlmFamily family = GlmFamily::Logistic;
};

struct GlassoData {
  Eigen::MatrixXd sigma_hat;  // symmetrized on construction
  int n_samples = 0;          // sample count behind sigma_hat; 0 means unknown
};

enum class LossKind { CorrectedLinear, Glm, Glasso };

// One of the three loss families behind a single evaluation surface. The
// optimization variable is always a flat vector: length p for the vector
// losses, a column-major p*p flattening for the graphical lasso.
class LossHandle {
 public:
  static LossHandle corrected_linear(CorrectedLinearData data);
  static LossHandle glm(GlmData data);
  static LossHandle glasso(GlassoData data);

  LossKind kind() const { return kind_; }
  bool matrix_domain() const { return kind_ == LossKind::Glasso; }
  int dim() const;        // length of the optimization variable
  int ambient_p() const;  // number of covariates (matrix side for glasso)
  int n_samples() const;  // 0 when the data were not built from samples

  double value(const Eigen::VectorXd& point) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& point) const;

  const CorrectedLinearData& linear_data() const;
  const GlmData& glm_data() const;
  const GlassoData& glasso_data() const;

  Eigen::MatrixXd as_matrix(const Eigen::VectorXd& point) const;
  Eigen::VectorXd from_matrix(const Eigen::MatrixXd& m) const;

 private:
  LossKind kind_ = LossKind::CorrectedLinear;
  std::shared_ptr<const CorrectedLinearData> linear_;
  std::shared_ptr<const GlmData> glm_;
  std::shared_ptr<const GlassoData> glasso_;
};

// Gamma = Z'Z/n - Sigma_w (symmetrized), gamma = Z'y/n. Sigma_w = 0 yields
// the clean least-squares surrogate.
CorrectedLinearData build_corrected_gamma(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                          const Eigen::MatrixXd& sigma_w);

// Unbiased plug-ins for independently erased entries (NaN marks): zero-fill,
// divide off-diagonal Gram entries by (1-vartheta)^2 and diagonal ones by
// (1-vartheta); gamma = Z'y/(n(1-vartheta)). A fully missing column yields a
// zero row/column and a recorded warning.
CorrectedLinearData build_missing_gamma(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                        double vartheta);

// T(b1, b2) = L_n(b1) - L_n(b2) - <grad L_n(b2), b1 - b2>.
double taylor_error(const LossHandle& loss, const Eigen::VectorXd& beta1,
                    const Eigen::VectorXd& beta2);

// D(bt; bs) = <grad L_n(bt) - grad L_n(bs), bt - bs>. Equals the in-sample
// prediction error (1/n)||X(bt - bs)||^2 for clean least squares.
double prediction_error(const LossHandle& loss, const Eigen::VectorXd& beta_tilde,
                        const Eigen::VectorXd& beta_star);

// Overflow-safe log(1 + exp(t)).
double log1pexp(double t);

}  // namespace ncmest
