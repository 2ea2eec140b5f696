#include "ncmest/loss.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace ncmest {

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

// Cholesky of a symmetric point; throws NonPdError off the PD cone.
Eigen::LLT<Eigen::MatrixXd> chol_or_throw(const Eigen::MatrixXd& theta) {
  Eigen::LLT<Eigen::MatrixXd> llt(theta);
  if (llt.info() != Eigen::Success)
    throw NonPdError("graphical lasso: iterate is not positive definite");
  return llt;
}

}  // namespace

double log1pexp(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

LossHandle LossHandle::corrected_linear(CorrectedLinearData data) {
  data.gamma_hat = symmetrized(data.gamma_hat);
  if (data.gamma_hat.rows() != data.gamma_vec.size())
    throw std::invalid_argument("loss: Gamma and gamma dimensions disagree");
  LossHandle h;
  h.kind_ = LossKind::CorrectedLinear;
  h.linear_ = std::make_shared<const CorrectedLinearData>(std::move(data));
  return h;
}

LossHandle LossHandle::glm(GlmData data) {
  if (data.X.rows() != data.y.size())
    throw std::invalid_argument("loss: design and response dimensions disagree");
  if (!data.X.allFinite() || !data.y.allFinite())
    throw std::invalid_argument("loss: GLM data must be finite");
  if (data.family == GlmFamily::Logistic) {
    for (Eigen::Index i = 0; i < data.y.size(); ++i)
      if (data.y[i] != 0.0 && data.y[i] != 1.0)
        throw std::invalid_argument("loss: logistic responses must be 0/1");
  }
  LossHandle h;
  h.kind_ = LossKind::Glm;
  h.glm_ = std::make_shared<const GlmData>(std::move(data));
  return h;
}

LossHandle LossHandle::glasso(GlassoData data) {
  if (data.sigma_hat.rows() != data.sigma_hat.cols())
    throw std::invalid_argument("loss: Sigma must be square");
  data.sigma_hat = symmetrized(data.sigma_hat);
  LossHandle h;
  h.kind_ = LossKind::Glasso;
  h.glasso_ = std::make_shared<const GlassoData>(std::move(data));
  return h;
}

int LossHandle::dim() const {
  switch (kind_) {
    case LossKind::CorrectedLinear:
      return static_cast<int>(linear_->gamma_vec.size());
    case LossKind::Glm:
      return static_cast<int>(glm_->X.cols());
    case LossKind::Glasso:
      return static_cast<int>(glasso_->sigma_hat.rows() * glasso_->sigma_hat.cols());
  }
  throw std::logic_error("loss: bad kind");
}

int LossHandle::ambient_p() const {
  if (kind_ == LossKind::Glasso) return static_cast<int>(glasso_->sigma_hat.rows());
  return dim();
}

int LossHandle::n_samples() const {
  switch (kind_) {
    case LossKind::CorrectedLinear:
      return linear_->n_samples;
    case LossKind::Glm:
      return static_cast<int>(glm_->X.rows());
    case LossKind::Glasso:
      return glasso_->n_samples;
  }
  return 0;
}

const CorrectedLinearData& LossHandle::linear_data() const {
  if (!linear_) throw std::logic_error("loss: not a corrected-linear handle");
  return *linear_;
}

const GlmData& LossHandle::glm_data() const {
  if (!glm_) throw std::logic_error("loss: not a GLM handle");
  return *glm_;
}

const GlassoData& LossHandle::glasso_data() const {
  if (!glasso_) throw std::logic_error("loss: not a glasso handle");
  return *glasso_;
}

Eigen::MatrixXd LossHandle::as_matrix(const Eigen::VectorXd& point) const {
  const int p = ambient_p();
  if (point.size() != Eigen::Index(p) * p)
    throw std::invalid_argument("loss: point has wrong length for a matrix domain");
  return Eigen::Map<const Eigen::MatrixXd>(point.data(), p, p);
}

Eigen::VectorXd LossHandle::from_matrix(const Eigen::MatrixXd& m) const {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

double LossHandle::value(const Eigen::VectorXd& point) const {
  switch (kind_) {
    case LossKind::CorrectedLinear: {
      const auto& d = *linear_;
      if (point.size() != d.gamma_vec.size())
        throw std::invalid_argument("loss: dimension mismatch");
      return 0.5 * point.dot(d.gamma_hat * point) - d.gamma_vec.dot(point);
    }
    case LossKind::Glm: {
      const auto& d = *glm_;
      if (point.size() != d.X.cols()) throw std::invalid_argument("loss: dimension mismatch");
      const Eigen::VectorXd eta = d.X * point;
      const double n = static_cast<double>(d.X.rows());
      double total = 0.0;
      if (d.family == GlmFamily::Logistic) {
        for (Eigen::Index i = 0; i < eta.size(); ++i)
          total += log1pexp(eta[i]) - d.y[i] * eta[i];
      } else {
        for (Eigen::Index i = 0; i < eta.size(); ++i)
          total += 0.5 * eta[i] * eta[i] - d.y[i] * eta[i];
      }
      return total / n;
    }
    case LossKind::Glasso: {
      const Eigen::MatrixXd theta = as_matrix(point);
      const auto llt = chol_or_throw(symmetrized(theta));
      double logdet = 0.0;
      const Eigen::MatrixXd L = llt.matrixL();
      for (Eigen::Index i = 0; i < L.rows(); ++i) logdet += 2.0 * std::log(L(i, i));
      return (glasso_->sigma_hat * theta).trace() - logdet;
    }
  }
  throw std::logic_error("loss: bad kind");
}

Eigen::VectorXd LossHandle::gradient(const Eigen::VectorXd& point) const {
  switch (kind_) {
    case LossKind::CorrectedLinear: {
      const auto& d = *linear_;
      if (point.size() != d.gamma_vec.size())
        throw std::invalid_argument("loss: dimension mismatch");
      return d.gamma_hat * point - d.gamma_vec;
    }
    case LossKind::Glm: {
      const auto& d = *glm_;
      if (point.size() != d.X.cols()) throw std::invalid_argument("loss: dimension mismatch");
      const Eigen::VectorXd eta = d.X * point;
      Eigen::VectorXd mean(eta.size());
      if (d.family == GlmFamily::Logistic) {
        for (Eigen::Index i = 0; i < eta.size(); ++i)
          mean[i] = 1.0 / (1.0 + std::exp(-eta[i]));
      } else {
        mean = eta;
      }
      return d.X.transpose() * (mean - d.y) / static_cast<double>(d.X.rows());
    }
    case LossKind::Glasso: {
      const Eigen::MatrixXd theta = symmetrized(as_matrix(point));
      const auto llt = chol_or_throw(theta);
      const Eigen::MatrixXd inv =
          llt.solve(Eigen::MatrixXd::Identity(theta.rows(), theta.cols()));
      return from_matrix(glasso_->sigma_hat - symmetrized(inv));
    }
  }
  throw std::logic_error("loss: bad kind");
}

CorrectedLinearData build_corrected_gamma(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                          const Eigen::MatrixXd& sigma_w) {
  if (Z.rows() != y.size()) throw std::invalid_argument("corrected gamma: n mismatch");
  if (sigma_w.rows() != Z.cols() || sigma_w.cols() != Z.cols())
    throw std::invalid_argument("corrected gamma: Sigma_w must be p x p");
  const double n = static_cast<double>(Z.rows());
  CorrectedLinearData d;
  d.gamma_hat = symmetrized(Eigen::MatrixXd(Z.transpose() * Z / n) - sigma_w);
  d.gamma_vec = Z.transpose() * y / n;
  d.provenance = sigma_w.isZero(0.0) ? CorruptionProvenance::Clean
                                     : CorruptionProvenance::AdditiveNoise;
  d.n_samples = static_cast<int>(Z.rows());
  return d;
}

CorrectedLinearData build_missing_gamma(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                        double vartheta) {
  if (Z.rows() != y.size()) throw std::invalid_argument("missing gamma: n mismatch");
  if (!(vartheta >= 0.0) || vartheta >= 1.0)
    throw std::invalid_argument("missing gamma: vartheta must lie in [0, 1)");
  const Eigen::Index n = Z.rows();
  const Eigen::Index p = Z.cols();
  Eigen::MatrixXd filled = Z;
  std::vector<Eigen::Index> observed(static_cast<size_t>(p), 0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) {
      if (std::isnan(filled(i, j))) filled(i, j) = 0.0;
      else ++observed[static_cast<size_t>(j)];
    }
  const double keep = 1.0 - vartheta;
  CorrectedLinearData d;
  d.gamma_hat = filled.transpose() * filled / static_cast<double>(n);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = 0; k < p; ++k)
      d.gamma_hat(j, k) /= (j == k) ? keep : keep * keep;
  d.gamma_hat = symmetrized(d.gamma_hat);
  d.gamma_vec = filled.transpose() * y / (static_cast<double>(n) * keep);
  d.provenance = CorruptionProvenance::MissingData;
  d.n_samples = static_cast<int>(n);
  for (Eigen::Index j = 0; j < p; ++j)
    if (observed[static_cast<size_t>(j)] == 0)
      d.warnings.push_back("column " + std::to_string(j) +
                           " fully missing; its Gram row/column is zero");
  return d;
}

double taylor_error(const LossHandle& loss, const Eigen::VectorXd& beta1,
                    const Eigen::VectorXd& beta2) {
  return loss.value(beta1) - loss.value(beta2) - loss.gradient(beta2).dot(beta1 - beta2);
}

double prediction_error(const LossHandle& loss, const Eigen::VectorXd& beta_tilde,
                        const Eigen::VectorXd& beta_star) {
  return (loss.gradient(beta_tilde) - loss.gradient(beta_star)).dot(beta_tilde - beta_star);
}

}  // namespace ncmest
