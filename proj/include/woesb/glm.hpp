#ifndef WOESB_GLM_HPP
#define WOESB_GLM_HPP

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace woesb::glm {

struct GlmFit {
  std::vector<std::string> names;  // one per design column
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;  // inverse Fisher information
  double deviance = 0.0;
  double aic = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> warnings;
};

struct WaldRow {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p = 0.0;
};

// Logistic regression by iteratively reweighted least squares. X must carry
// its own intercept column and have full column rank. Separation is reported
// through converged=false plus a warning, with the linear predictor capped
// at |eta| <= 30 so the fit remains usable.
GlmFit fit_glm(const Eigen::MatrixXd& X, std::span<const int> y,
               std::vector<std::string> names = {});

Eigen::VectorXd predict_glm(const GlmFit& fit, const Eigen::MatrixXd& X_new);

std::vector<WaldRow> wald_tests(const GlmFit& fit);

// Binomial deviance -2 log L at given probabilities.
double binomial_deviance(std::span<const int> y, const Eigen::VectorXd& p);

}  // namespace woesb::glm

#endif
