#ifndef WOESB_SPLINES_HPP
#define WOESB_SPLINES_HPP

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace woesb::splines {

enum class Kind { cubic, cyclic };

// Cubic regression spline basis parameterized by the function values at the
// knots. The interpolating natural (or periodic) cubic spline through
// (knot_j, beta_j) defines both the basis functions and an exact curvature
// penalty: with the knot-to-second-derivative map F, the penalty
// S = D' B^{-1} D equals the integrated squared second derivative of the
// interpolant.
//
// Identifiability: the q value-space columns contain the constant function,
// so each basis also carries an orthonormal map Z (q x (q-1)) into the
// subspace of coefficient vectors whose fitted values sum to zero over the
// training x. Model fitting happens in that centered space; serialization
// and prediction use the value space, where rows depend on knots alone.
class SmoothBasis {
 public:
  // Builds from training values. Non-cyclic knots sit at evenly spaced
  // quantiles of the distinct x values; cyclic knots are even over
  // [0, period] with the closing knot stored explicitly.
  static SmoothBasis build(std::span<const double> x, Kind kind, int q,
                           double period = 0.0);

  // Rebuilds the value-space evaluator from stored knots (no training data,
  // no centering; prediction only).
  static SmoothBasis from_knots(std::vector<double> knots, Kind kind,
                                double period = 0.0);

  Kind kind() const { return kind_; }
  double period() const { return period_; }
  const std::vector<double>& knots() const { return knots_; }

  int value_dim() const { return q_; }                 // q
  int dim() const { return static_cast<int>(Z_.cols()); }  // q - 1

  // One design row in value space (length q).
  Eigen::RowVectorXd row_value(double x) const;
  Eigen::MatrixXd design_value(std::span<const double> x) const;

  // Centered design and penalty, the quantities the fitter consumes.
  Eigen::MatrixXd design(std::span<const double> x) const;
  const Eigen::MatrixXd& penalty() const { return penalty_c_; }
  const Eigen::MatrixXd& penalty_value() const { return penalty_v_; }
  const Eigen::MatrixXd& centering() const { return Z_; }

 private:
  void assemble();  // F_ and penalty_v_ from knots

  Kind kind_ = Kind::cubic;
  double period_ = 0.0;
  int q_ = 0;
  std::vector<double> knots_;  // q entries (cubic) or q+1 (cyclic, closed)
  Eigen::MatrixXd F_;          // q x q: knot values -> second derivatives
  Eigen::MatrixXd penalty_v_;  // q x q value-space penalty
  Eigen::MatrixXd Z_;          // q x (q-1) sum-to-zero absorption
  Eigen::MatrixXd penalty_c_;  // (q-1) x (q-1) centered penalty
};

}  // namespace woesb::splines

#endif
