#ifndef WOESB_GAM_HPP
#define WOESB_GAM_HPP

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "woesb/splines.hpp"

namespace woesb::gam {

enum class TermKind { linear, smooth, cyclic_smooth };

// One additive term: the column it consumes, how it enters the linear
// predictor, and (for smooths) its basis size and smoothing parameter.
struct TermInput {
  std::string name;
  TermKind kind = TermKind::linear;
  std::vector<double> x;
  int q = 10;           // basis dimension, smooths only
  double period = 0.0;  // cyclic smooths only
  double lambda = 0.0;  // smoothing parameter, smooths only
};

struct GamTerm {
  std::string name;
  TermKind kind = TermKind::linear;
  std::optional<splines::SmoothBasis> basis;  // smooths only
  int col_start = 0;  // block within the full design (0 = intercept)
  int col_count = 0;
  double lambda = 0.0;
  double edf = 0.0;
};

struct GamFit {
  std::vector<GamTerm> terms;
  double intercept = 0.0;
  Eigen::VectorXd beta;        // full vector, intercept first
  Eigen::MatrixXd covariance;  // inverse penalized information
  double deviance = 0.0;
  double total_edf = 0.0;      // includes the intercept
  double aic = 0.0;            // deviance + 2 * total_edf
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> warnings;
};

// Penalized IRLS for the additive logistic model. Stops when the relative
// penalized-deviance change drops below 1e-8 and the penalized score is
// within 1e-6, with step-halving and an |eta| <= 30 separation cap.
GamFit fit_gam(std::span<const int> y, const std::vector<TermInput>& terms);

std::vector<double> default_smoothing_grid();  // e^-8 .. e^8, 17 points

// Coordinate-wise AIC grid search (two sweeps) over the smoothing
// parameters of all smooth terms, in term order. Returns one lambda per
// smooth term.
std::vector<double> select_smoothing(
    std::span<const int> y, const std::vector<TermInput>& terms,
    const std::vector<double>& grid = default_smoothing_grid());

// Fitted term values and pointwise variances at arbitrary x for a smooth
// term (the inverse-variance weights used downstream).
void term_values_and_variance(const GamFit& fit, int term_index,
                              std::span<const double> x,
                              std::vector<double>& z, std::vector<double>& var);

double term_edf(const GamFit& fit, int term_index);

// Whether a smooth term has collapsed to an effectively linear shape.
bool effectively_linear(const GamFit& fit, int term_index,
                        double threshold = 1.1);

// Predicted probabilities on new data; columns supplied per term in the
// fit's term order.
Eigen::VectorXd predict_gam(const GamFit& fit,
                            const std::vector<std::vector<double>>& columns);

}  // namespace woesb::gam

#endif
