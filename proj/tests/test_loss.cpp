#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ncmest/loss.hpp"
#include "ncmest/rng.hpp"
#include "ncmest/simulate.hpp"

using namespace ncmest;

namespace {

Eigen::VectorXd numeric_gradient(const LossHandle& loss, const Eigen::VectorXd& point,
                                 double h = 1e-6) {
  Eigen::VectorXd g(point.size());
  for (Eigen::Index j = 0; j < point.size(); ++j) {
    Eigen::VectorXd up = point, dn = point;
    up[j] += h;
    dn[j] -= h;
    g[j] = (loss.value(up) - loss.value(dn)) / (2.0 * h);
  }
  return g;
}

LossHandle random_logistic(int n, int p, std::uint64_t seed) {
  Rng rng(seed);
  GlmData d;
  d.X = Eigen::MatrixXd::NullaryExpr(n, p, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  d.y = Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) { return rng.bernoulli(0.5) ? 1.0 : 0.0; });
  d.family = GlmFamily::Logistic;
  return LossHandle::glm(std::move(d));
}

}  // namespace

TEST_CASE("corrected linear loss basics") {
  Rng rng(1);
  const int p = 5;
  CorrectedLinearData d;
  d.gamma_hat = Eigen::MatrixXd::NullaryExpr(p, p, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  d.gamma_vec = rng.normal_vector(p);
  const LossHandle loss = LossHandle::corrected_linear(d);

  CHECK(loss.value(Eigen::VectorXd::Zero(p)) == 0.0);
  CHECK((loss.gradient(Eigen::VectorXd::Zero(p)) + d.gamma_vec).norm() == doctest::Approx(0.0));

  // handle symmetrizes Gamma
  const auto& gh = loss.linear_data().gamma_hat;
  CHECK((gh - gh.transpose()).norm() == doctest::Approx(0.0));

  const Eigen::VectorXd b = rng.normal_vector(p);
  const Eigen::VectorXd fd = numeric_gradient(loss, b);
  CHECK((loss.gradient(b) - fd).norm() / std::max(1.0, fd.norm()) <= 1e-5);
}

TEST_CASE("logistic loss value and gradient") {
  const LossHandle loss = random_logistic(40, 6, 3);
  const auto& d = loss.glm_data();

  // beta = 0: per-sample log 2, gradient (1/n) sum (1/2 - y_i) x_i
  CHECK(loss.value(Eigen::VectorXd::Zero(6)) == doctest::Approx(std::log(2.0)));
  const Eigen::VectorXd expected =
      d.X.transpose() * (Eigen::VectorXd::Constant(40, 0.5) - d.y) / 40.0;
  CHECK((loss.gradient(Eigen::VectorXd::Zero(6)) - expected).norm() == doctest::Approx(0.0));

  Rng rng(5);
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd b = rng.normal_vector(6);
    const Eigen::VectorXd fd = numeric_gradient(loss, b);
    CHECK((loss.gradient(b) - fd).norm() / std::max(1.0, fd.norm()) <= 1e-5);
  }
}

TEST_CASE("overflow-safe cumulant") {
  CHECK(log1pexp(800.0) == doctest::Approx(800.0));
  CHECK(log1pexp(-800.0) == doctest::Approx(0.0));
  CHECK(log1pexp(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(std::isfinite(log1pexp(1e8)));
}

TEST_CASE("gaussian family reduces to least squares") {
  Rng rng(9);
  GlmData d;
  d.X = Eigen::MatrixXd::NullaryExpr(30, 4, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  d.y = rng.normal_vector(30);
  d.family = GlmFamily::Gaussian;
  const LossHandle loss = LossHandle::glm(d);
  const Eigen::VectorXd b = rng.normal_vector(4);
  const double expect = (0.5 * (d.X * b).squaredNorm() - d.y.dot(d.X * b)) / 30.0;
  CHECK(loss.value(b) == doctest::Approx(expect));
}

TEST_CASE("graphical lasso value, gradient, and PD guard") {
  const int p = 2;
  GlassoData d;
  d.sigma_hat = Eigen::MatrixXd::Identity(p, p);
  const LossHandle loss = LossHandle::glasso(d);

  const Eigen::VectorXd eye = loss.from_matrix(Eigen::MatrixXd::Identity(p, p));
  CHECK(loss.value(eye) == doctest::Approx(2.0));  // trace 2, logdet 0

  // gradient vanishes at Theta = Sigma^{-1}
  CHECK(loss.gradient(eye).norm() == doctest::Approx(0.0).epsilon(1e-12));

  // non-PD point raises the typed error
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(p, p);
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(loss.value(loss.from_matrix(bad)), NonPdError);
  CHECK_THROWS_AS(loss.gradient(loss.from_matrix(bad)), NonPdError);

  // finite-difference agreement on a random PD point
  Rng rng(11);
  Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(p, p, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  Eigen::MatrixXd theta = A * A.transpose() + Eigen::MatrixXd::Identity(p, p);
  const Eigen::VectorXd tvec = loss.from_matrix(theta);
  const Eigen::VectorXd fd = numeric_gradient(loss, tvec, 1e-5);
  CHECK((loss.gradient(tvec) - fd).norm() / std::max(1.0, fd.norm()) <= 1e-5);
}

TEST_CASE("corrected gamma builder") {
  // p=1 arithmetic: Z=(1,1), y=(2,2), Sigma_w=0.04 -> Gamma=0.96, gamma=2
  Eigen::MatrixXd Z(2, 1);
  Z << 1.0, 1.0;
  Eigen::VectorXd y(2);
  y << 2.0, 2.0;
  Eigen::MatrixXd sw(1, 1);
  sw << 0.04;
  const auto d = build_corrected_gamma(Z, y, sw);
  CHECK(d.gamma_hat(0, 0) == doctest::Approx(0.96));
  CHECK(d.gamma_vec[0] == doctest::Approx(2.0));
  CHECK(d.provenance == CorruptionProvenance::AdditiveNoise);
  CHECK(d.n_samples == 2);

  // Sigma_w = 0 reduces to the clean Gram matrix
  const auto clean = build_corrected_gamma(Z, y, Eigen::MatrixXd::Zero(1, 1));
  CHECK(clean.gamma_hat(0, 0) == doctest::Approx(1.0));
  CHECK(clean.provenance == CorruptionProvenance::Clean);

  CHECK_THROWS_AS(build_corrected_gamma(Z, y, Eigen::MatrixXd::Zero(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("corrected gamma is indefinite when p > n") {
  Rng rng(13);
  const int n = 10, p = 30;
  const Eigen::MatrixXd X =
      Eigen::MatrixXd::NullaryExpr(n, p, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  const Eigen::MatrixXd Z =
      X + 0.2 * Eigen::MatrixXd::NullaryExpr(n, p, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  const Eigen::VectorXd y = rng.normal_vector(n);
  const auto d =
      build_corrected_gamma(Z, y, 0.04 * Eigen::MatrixXd::Identity(p, p));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.gamma_hat);
  CHECK(es.eigenvalues().minCoeff() < 0.0);
}

TEST_CASE("missing-data plug-ins are unbiased") {
  const int n = 40, p = 4;
  const double vartheta = 0.3;
  const int reps = 2000;
  Eigen::MatrixXd mean_gamma = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd second_moment = Eigen::MatrixXd::Zero(p, p);
  TargetSpec ts;
  ts.p = p;
  ts.k = p;
  ts.seed = 99;
  const Eigen::VectorXd beta_star = gen_target(ts);
  Eigen::VectorXd mean_gvec = Eigen::VectorXd::Zero(p);
  for (int r = 0; r < reps; ++r) {
    DesignSpec ds;
    ds.n = n;
    ds.p = p;
    ds.seed = child_seed(12345, static_cast<std::uint64_t>(r));
    const Eigen::MatrixXd X = gen_design(ds);
    const Eigen::VectorXd y =
        gen_linear_response(X, beta_star, 0.1, child_seed(777, static_cast<std::uint64_t>(r)));
    CorruptionSpec cs;
    cs.mode = CorruptionMode::Missing;
    cs.vartheta = vartheta;
    const Eigen::MatrixXd Z = corrupt(X, cs, child_seed(4242, static_cast<std::uint64_t>(r)));
    const auto d = build_missing_gamma(Z, y, vartheta);
    mean_gamma += d.gamma_hat / reps;
    second_moment += d.gamma_hat.cwiseProduct(d.gamma_hat) / reps;
    mean_gvec += d.gamma_vec / reps;
  }
  // E[Gamma] = I within 3 standard errors, entrywise
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      const double target = i == j ? 1.0 : 0.0;
      const double var = second_moment(i, j) - mean_gamma(i, j) * mean_gamma(i, j);
      const double se = std::sqrt(std::max(var, 1e-12) / reps);
      CHECK(std::abs(mean_gamma(i, j) - target) <= 3.5 * se);
    }
  // E[gamma] = Sigma beta* = beta* for identity design
  CHECK((mean_gvec - beta_star).lpNorm<Eigen::Infinity>() <= 0.05);
}

TEST_CASE("missing-data edge cases") {
  Eigen::MatrixXd Z(3, 2);
  Z << 1.0, std::nan(""), 2.0, std::nan(""), -1.0, std::nan("");
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 3.0;
  const auto d = build_missing_gamma(Z, y, 0.5);
  CHECK(d.gamma_hat.row(1).isZero(0.0));
  CHECK(d.gamma_hat.col(1).isZero(0.0));
  CHECK(d.warnings.size() == 1);

  CHECK_THROWS_AS(build_missing_gamma(Z, y, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_missing_gamma(Z, y, -0.1), std::invalid_argument);

  // vartheta = 0 with no missing marks matches the clean builder
  Eigen::MatrixXd X(3, 2);
  X << 1.0, 0.5, 2.0, -0.25, -1.0, 1.5;
  const auto clean = build_missing_gamma(X, y, 0.0);
  const auto ref = build_corrected_gamma(X, y, Eigen::MatrixXd::Zero(2, 2));
  CHECK((clean.gamma_hat - ref.gamma_hat).norm() == doctest::Approx(0.0));
  CHECK((clean.gamma_vec - ref.gamma_vec).norm() == doctest::Approx(0.0));
}

TEST_CASE("taylor error identities") {
  Rng rng(17);
  const int p = 6;
  CorrectedLinearData d;
  Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(p, p, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  d.gamma_hat = 0.5 * (A + A.transpose());
  d.gamma_vec = rng.normal_vector(p);
  const LossHandle quad = LossHandle::corrected_linear(d);

  const Eigen::VectorXd b1 = rng.normal_vector(p);
  const Eigen::VectorXd b2 = rng.normal_vector(p);
  CHECK(taylor_error(quad, b1, b1) == 0.0);
  const Eigen::VectorXd diff = b1 - b2;
  CHECK(taylor_error(quad, b1, b2) ==
        doctest::Approx(0.5 * diff.dot(quad.linear_data().gamma_hat * diff)).epsilon(1e-10));

  // convex loss: nonnegative Taylor error on random pairs
  const LossHandle logit = random_logistic(50, p, 19);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd x1 = rng.normal_vector(p);
    const Eigen::VectorXd x2 = rng.normal_vector(p);
    CHECK(taylor_error(logit, x1, x2) >= -1e-10);
  }
}

TEST_CASE("prediction error identities") {
  Rng rng(23);
  const int n = 60, p = 5;
  const Eigen::MatrixXd X =
      Eigen::MatrixXd::NullaryExpr(n, p, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  const Eigen::VectorXd y = rng.normal_vector(n);
  const auto d = build_corrected_gamma(X, y, Eigen::MatrixXd::Zero(p, p));
  const LossHandle loss = LossHandle::corrected_linear(d);

  const Eigen::VectorXd bt = rng.normal_vector(p);
  const Eigen::VectorXd bs = rng.normal_vector(p);
  CHECK(prediction_error(loss, bs, bs) == 0.0);

  const Eigen::VectorXd nu = bt - bs;
  CHECK(prediction_error(loss, bt, bs) ==
        doctest::Approx(nu.dot(d.gamma_hat * nu)).epsilon(1e-10));
  // clean least squares: equals (1/n)||X nu||^2
  CHECK(prediction_error(loss, bt, bs) ==
        doctest::Approx((X * nu).squaredNorm() / n).epsilon(1e-10));
}

TEST_CASE("gradient at the target shrinks with n") {
  TargetSpec ts;
  ts.p = 16;
  ts.seed = 5;
  const Eigen::VectorXd beta_star = gen_target(ts);
  std::vector<double> medians;
  for (const int n : {250, 1000, 4000}) {
    std::vector<double> norms;
    for (int r = 0; r < 31; ++r) {
      const std::uint64_t seed = child_seed(1000 + n, static_cast<std::uint64_t>(r));
      DesignSpec ds;
      ds.n = n;
      ds.p = 16;
      ds.seed = child_seed(seed, 1);
      const Eigen::MatrixXd X = gen_design(ds);
      const Eigen::VectorXd y = gen_linear_response(X, beta_star, 0.1, child_seed(seed, 2));
      CorruptionSpec cs;
      cs.mode = CorruptionMode::AdditiveNoise;
      cs.sigma_w = 0.2;
      const Eigen::MatrixXd Z = corrupt(X, cs, child_seed(seed, 3));
      const auto d =
          build_corrected_gamma(Z, y, 0.04 * Eigen::MatrixXd::Identity(16, 16));
      const LossHandle loss = LossHandle::corrected_linear(d);
      norms.push_back(loss.gradient(beta_star).lpNorm<Eigen::Infinity>());
    }
    std::sort(norms.begin(), norms.end());
    medians.push_back(norms[norms.size() / 2]);
  }
  // median roughly halves per 4x n, with 50% slack
  CHECK(medians[1] <= 0.5 * medians[0] * 1.5);
  CHECK(medians[2] <= 0.5 * medians[1] * 1.5);
}

TEST_CASE("glm data validation") {
  GlmData d;
  d.X = Eigen::MatrixXd::Ones(3, 2);
  d.y = Eigen::VectorXd::Ones(3);
  d.y[1] = 0.5;
  d.family = GlmFamily::Logistic;
  CHECK_THROWS_AS(LossHandle::glm(d), std::invalid_argument);
  d.y[1] = 0.0;
  CHECK_NOTHROW(LossHandle::glm(d));
}
