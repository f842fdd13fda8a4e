#include "woesb/glm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "testutil.hpp"

using namespace woesb::glm;

namespace {

std::vector<int> bernoulli(std::mt19937_64& g, const Eigen::VectorXd& p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> y(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) y[i] = u(g) < p(i) ? 1 : 0;
  return y;
}

}  // namespace

TEST_SUITE("glm") {

TEST_CASE("intercept-only fits the empirical log-odds") {
  const int n = 100;
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(n, 1);
  std::vector<int> y(n, 0);
  for (int i = 0; i < 50; ++i) y[i] = 1;
  auto fit = fit_glm(X, y);
  CHECK(fit.converged);
  CHECK(fit.beta(0) == doctest::Approx(0.0).epsilon(1e-10));
  // balanced binary deviance is n * 2 log 2
  CHECK(fit.deviance == doctest::Approx(n * 2 * std::log(2.0)).epsilon(1e-10));

  std::fill(y.begin(), y.end(), 0);
  for (int i = 0; i < 30; ++i) y[i] = 1;
  auto fit3 = fit_glm(X, y);
  CHECK(fit3.beta(0) == doctest::Approx(std::log(0.3 / 0.7)).epsilon(1e-8));
  CHECK(fit3.beta(0) == doctest::Approx(-0.847298).epsilon(1e-6));
}

TEST_CASE("recovers known coefficients on a large simulation") {
  auto g = testutil::rng(6021023);
  const int n = 20000;
  Eigen::MatrixXd X(n, 3);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = nd(g);
    X(i, 2) = nd(g);
  }
  Eigen::VectorXd truth(3);
  truth << -1.0, 0.8, -0.5;
  Eigen::VectorXd p = (X * truth).unaryExpr(
      [](double e) { return 1.0 / (1.0 + std::exp(-e)); });
  auto y = bernoulli(g, p);
  auto fit = fit_glm(X, y);
  CHECK(fit.converged);
  for (int j = 0; j < 3; ++j)
    CHECK(fit.beta(j) == doctest::Approx(truth(j)).epsilon(0.08));
  // score equations hold coordinate-wise
  Eigen::VectorXd yv(n);
  for (int i = 0; i < n; ++i) yv(i) = y[i];
  Eigen::VectorXd fitted = predict_glm(fit, X);
  CHECK((X.transpose() * (yv - fitted)).cwiseAbs().maxCoeff() <= 1e-8);
  // deviance is recomputable from the fitted probabilities
  CHECK(fit.deviance ==
        doctest::Approx(binomial_deviance(y, fitted)).epsilon(1e-9));
  CHECK(fit.aic == doctest::Approx(fit.deviance + 6.0).epsilon(1e-12));
}

TEST_CASE("covariance is symmetric positive definite and calibrated") {
  auto g = testutil::rng(40);
  const int n = 5000;
  Eigen::MatrixXd X(n, 2);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = nd(g);
  }
  Eigen::VectorXd truth(2);
  truth << 0.3, 0.6;
  Eigen::VectorXd p = (X * truth).unaryExpr(
      [](double e) { return 1.0 / (1.0 + std::exp(-e)); });
  auto y = bernoulli(g, p);
  auto fit = fit_glm(X, y);
  const auto& V = fit.covariance;
  CHECK((V - V.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  // standard errors shrink like 1/sqrt(n): with n=5000 they are small
  CHECK(std::sqrt(V(1, 1)) < 0.1);
}

TEST_CASE("separation is flagged and the linear predictor stays capped") {
  const int n = 40;
  Eigen::MatrixXd X(n, 2);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = i < n / 2 ? -1.0 : 1.0;
    y[i] = i < n / 2 ? 0 : 1;
  }
  auto fit = fit_glm(X, y);
  CHECK_FALSE(fit.converged);
  CHECK_FALSE(fit.warnings.empty());
  CHECK((X * fit.beta).cwiseAbs().maxCoeff() <= 30.0 + 1e-9);
}

TEST_CASE("rank deficiency and shape errors are rejected") {
  Eigen::MatrixXd X(6, 2);
  X << 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2;
  std::vector<int> y{0, 1, 0, 1, 0, 1};
  CHECK_THROWS_AS(fit_glm(X, y), std::runtime_error);

  Eigen::MatrixXd X1 = Eigen::MatrixXd::Ones(3, 1);
  CHECK_THROWS_AS(fit_glm(X1, std::vector<int>{0, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_glm(X1, std::vector<int>{0, 2, 1}),
                  std::invalid_argument);
}

TEST_CASE("predictions") {
  GlmFit fit;
  fit.beta = Eigen::VectorXd(2);
  fit.beta << -12.55, 1.0;
  fit.names = {"(Intercept)", "x1"};
  Eigen::MatrixXd X(3, 2);
  X << 1, 0, 1, 12.55, 1, 20;
  auto p = predict_glm(fit, X);
  CHECK(p(0) == doctest::Approx(1.0 / (1.0 + std::exp(12.55))).epsilon(1e-9));
  CHECK(p(0) == doctest::Approx(3.55e-6).epsilon(0.01));
  CHECK(p(1) == doctest::Approx(0.5).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) {
    CHECK(p(i) > 0.0);
    CHECK(p(i) < 1.0);
  }
  // monotone in a positive-coefficient predictor
  CHECK(p(2) > p(1));
  Eigen::MatrixXd bad(1, 3);
  CHECK_THROWS_AS(predict_glm(fit, bad), std::invalid_argument);
}

TEST_CASE("wald tests") {
  GlmFit fit;
  fit.beta = Eigen::VectorXd(2);
  fit.beta << 0.0, 1.96;
  fit.covariance = Eigen::MatrixXd::Identity(2, 2);
  fit.names = {"a", "b"};
  auto rows = wald_tests(fit);
  CHECK(rows[0].p == doctest::Approx(1.0));
  CHECK(rows[1].z == doctest::Approx(1.96));
  CHECK(rows[1].p == doctest::Approx(0.0499958).epsilon(1e-4));
}

TEST_CASE("null predictor p-values are approximately uniform") {
  auto g = testutil::rng(505);
  const int reps = 500, n = 400;
  std::vector<double> pvals;
  pvals.reserve(reps);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < reps; ++r) {
    Eigen::MatrixXd X(n, 2);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = nd(g);
      y[i] = u(g) < 0.3 ? 1 : 0;
    }
    auto fit = fit_glm(X, y);
    pvals.push_back(wald_tests(fit)[1].p);
  }
  std::sort(pvals.begin(), pvals.end());
  double ks = 0.0;
  for (int i = 0; i < reps; ++i) {
    const double ecdf_hi = static_cast<double>(i + 1) / reps;
    const double ecdf_lo = static_cast<double>(i) / reps;
    ks = std::max({ks, std::abs(ecdf_hi - pvals[i]),
                   std::abs(pvals[i] - ecdf_lo)});
  }
  CHECK(ks < 0.1);
}

TEST_CASE("affine invariance of the fitted model") {
  auto g = testutil::rng(8888);
  const int n = 800;
  Eigen::MatrixXd X(n, 3);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = nd(g);
    X(i, 2) = 2.0 + nd(g);
  }
  Eigen::VectorXd truth(3);
  truth << -0.5, 0.7, 0.2;
  Eigen::VectorXd p = (X * truth).unaryExpr(
      [](double e) { return 1.0 / (1.0 + std::exp(-e)); });
  auto y = bernoulli(g, p);
  auto f1 = fit_glm(X, y);
  Eigen::MatrixXd Xs = X;
  const double c = 100.0;
  Xs.col(1) *= c;
  auto f2 = fit_glm(Xs, y);
  CHECK(f2.beta(1) == doctest::Approx(f1.beta(1) / c).epsilon(1e-8));
  auto p1 = predict_glm(f1, X);
  auto p2 = predict_glm(f2, Xs);
  CHECK((p1 - p2).cwiseAbs().maxCoeff() < 1e-10);
}

}  // TEST_SUITE
