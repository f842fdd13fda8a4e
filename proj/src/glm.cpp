#include "woesb/glm.hpp"

#include <cmath>
#include <stdexcept>

namespace woesb::glm {

namespace {

constexpr double kEtaCap = 30.0;
constexpr double kWeightFloor = 1e-10;

double sigmoid(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

Eigen::VectorXd probabilities(const Eigen::VectorXd& eta) {
  Eigen::VectorXd p(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    p(i) = sigmoid(std::clamp(eta(i), -kEtaCap, kEtaCap));
  return p;
}

}  // namespace

double binomial_deviance(std::span<const int> y, const Eigen::VectorXd& p) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = std::clamp(p(i), 1e-15, 1.0 - 1e-15);
    ll += y[i] ? std::log(pi) : std::log(1.0 - pi);
  }
  return -2.0 * ll;
}

GlmFit fit_glm(const Eigen::MatrixXd& X, std::span<const int> y,
               std::vector<std::string> names) {
  const Eigen::Index n = X.rows(), k = X.cols();
  if (static_cast<Eigen::Index>(y.size()) != n)
    throw std::invalid_argument("glm: X/y length mismatch");
  if (n <= k)
    throw std::invalid_argument("glm: need more rows than columns");
  for (int v : y)
    if (v != 0 && v != 1)
      throw std::invalid_argument("glm: response must be 0 or 1");
  if (!X.allFinite()) throw std::invalid_argument("glm: non-finite design");
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < k)
      throw std::runtime_error("glm: design matrix is rank deficient");
  }

  GlmFit fit;
  fit.names = std::move(names);
  if (fit.names.empty()) {
    fit.names.resize(k);
    fit.names[0] = "(Intercept)";
    for (Eigen::Index j = 1; j < k; ++j)
      fit.names[j] = "x" + std::to_string(j);
  }
  if (static_cast<Eigen::Index>(fit.names.size()) != k)
    throw std::invalid_argument("glm: name count mismatch");

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd p = probabilities(eta);
  double dev = binomial_deviance(y, p);
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[i];

  bool capped = false;
  for (fit.iterations = 1; fit.iterations <= 100; ++fit.iterations) {
    Eigen::VectorXd w(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      w(i) = std::max(p(i) * (1.0 - p(i)), kWeightFloor);
      z(i) = eta(i) + (yv(i) - p(i)) / w(i);
    }
    const Eigen::MatrixXd XtW = X.transpose() * w.asDiagonal();
    Eigen::VectorXd beta_new = (XtW * X).ldlt().solve(XtW * z);

    // Step-halving: never accept a step that increases the deviance.
    Eigen::VectorXd beta_try = beta_new;
    Eigen::VectorXd eta_try, p_try;
    double dev_try = 0.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      eta_try = X * beta_try;
      p_try = probabilities(eta_try);
      dev_try = binomial_deviance(y, p_try);
      if (std::isfinite(dev_try) && dev_try <= dev + 1e-12) {
        accepted = true;
        break;
      }
      beta_try = 0.5 * (beta_try + beta);
    }
    if (!accepted) break;  // stalled at the current optimum

    const double rel_change = std::abs(dev - dev_try) / (std::abs(dev_try) + 0.1);
    beta = beta_try;
    eta = eta_try;
    p = p_try;
    dev = dev_try;

    if (eta.cwiseAbs().maxCoeff() > kEtaCap) {
      // Quasi-separation: scale the coefficients back so |eta| <= cap and
      // report a usable but unconverged fit.
      beta *= kEtaCap / eta.cwiseAbs().maxCoeff();
      eta = X * beta;
      p = probabilities(eta);
      dev = binomial_deviance(y, p);
      fit.warnings.push_back(
          "linear predictor capped at |eta| = 30; possible separation");
      capped = true;
      break;
    }

    if (rel_change < 1e-10 &&
        (X.transpose() * (yv - p)).cwiseAbs().maxCoeff() <= 1e-8)
      break;
  }
  if (!capped && (p.minCoeff() <= 1e-10 || p.maxCoeff() >= 1.0 - 1e-10)) {
    fit.warnings.push_back(
        "fitted probabilities numerically 0 or 1; possible separation");
    capped = true;
  }
  // The convergence flag certifies the score equations, not just a stalled
  // deviance.
  fit.converged =
      !capped && (X.transpose() * (yv - p)).cwiseAbs().maxCoeff() <= 1e-8;

  fit.beta = beta;
  fit.deviance = dev;
  fit.aic = dev + 2.0 * static_cast<double>(k);

  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i)
    w(i) = std::max(p(i) * (1.0 - p(i)), kWeightFloor);
  const Eigen::MatrixXd info = X.transpose() * w.asDiagonal() * X;
  fit.covariance = info.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();
  return fit;
}

Eigen::VectorXd predict_glm(const GlmFit& fit, const Eigen::MatrixXd& X_new) {
  if (X_new.cols() != fit.beta.size())
    throw std::invalid_argument("glm: prediction design has wrong width");
  return probabilities(X_new * fit.beta);
}

std::vector<WaldRow> wald_tests(const GlmFit& fit) {
  std::vector<WaldRow> rows(fit.beta.size());
  for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
    WaldRow& r = rows[j];
    r.name = fit.names[j];
    r.estimate = fit.beta(j);
    r.se = std::sqrt(std::max(fit.covariance(j, j), 0.0));
    r.z = r.se > 0.0 ? r.estimate / r.se : 0.0;
    r.p = std::erfc(std::abs(r.z) / std::sqrt(2.0));
  }
  return rows;
}

}  // namespace woesb::glm
