#include "woesb/splines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace woesb::splines {

namespace {

std::vector<double> distinct_sorted(std::span<const double> x) {
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Type-7 interpolated quantiles over the distinct values, which keeps the
// knot sequence strictly increasing whenever there are at least q of them.
std::vector<double> quantile_knots(const std::vector<double>& distinct,
                                   int q) {
  const int m = static_cast<int>(distinct.size());
  std::vector<double> knots(q);
  for (int j = 0; j < q; ++j) {
    const double pos = static_cast<double>(j) * (m - 1) / (q - 1);
    const int lo = static_cast<int>(std::floor(pos));
    const int hi = std::min(lo + 1, m - 1);
    const double frac = pos - lo;
    knots[j] = (1.0 - frac) * distinct[lo] + frac * distinct[hi];
  }
  return knots;
}

}  // namespace

SmoothBasis SmoothBasis::build(std::span<const double> x, Kind kind, int q,
                               double period) {
  if (q < 3) throw std::invalid_argument("splines: basis dimension q < 3");
  if (kind == Kind::cyclic && !(period > 0.0))
    throw std::invalid_argument("splines: cyclic basis needs period > 0");
  for (double v : x)
    if (!std::isfinite(v))
      throw std::invalid_argument("splines: x must be finite");
  const auto distinct = distinct_sorted(x);
  if (static_cast<int>(distinct.size()) < q)
    throw std::invalid_argument(
        "splines: fewer distinct x values than basis dimension");

  SmoothBasis b;
  b.kind_ = kind;
  b.period_ = kind == Kind::cyclic ? period : 0.0;
  b.q_ = q;
  if (kind == Kind::cubic) {
    b.knots_ = quantile_knots(distinct, q);
  } else {
    b.knots_.resize(q + 1);
    for (int j = 0; j <= q; ++j) b.knots_[j] = period * j / q;
  }
  b.assemble();

  // Sum-to-zero centering over the training sample, absorbed by a
  // Householder reflection of the mean basis row: Z spans its orthogonal
  // complement, so every centered coefficient vector satisfies c'beta = 0.
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(q);
  for (double v : x) c += b.row_value(v);
  c /= static_cast<double>(x.size());
  Eigen::VectorXd u = c.transpose();
  const double norm = u.norm();
  u(0) += (u(0) >= 0.0 ? norm : -norm);
  Eigen::MatrixXd H =
      Eigen::MatrixXd::Identity(q, q) - (2.0 / u.squaredNorm()) * u * u.transpose();
  b.Z_ = H.rightCols(q - 1);
  b.penalty_c_ = b.Z_.transpose() * b.penalty_v_ * b.Z_;
  b.penalty_c_ = 0.5 * (b.penalty_c_ + b.penalty_c_.transpose()).eval();
  return b;
}

SmoothBasis SmoothBasis::from_knots(std::vector<double> knots, Kind kind,
                                    double period) {
  SmoothBasis b;
  b.kind_ = kind;
  b.period_ = period;
  b.knots_ = std::move(knots);
  b.q_ = static_cast<int>(b.knots_.size()) - (kind == Kind::cyclic ? 1 : 0);
  if (b.q_ < 3) throw std::invalid_argument("splines: too few knots");
  for (size_t j = 1; j < b.knots_.size(); ++j)
    if (!(b.knots_[j] > b.knots_[j - 1]))
      throw std::invalid_argument("splines: knots must be ascending");
  b.assemble();
  b.Z_.resize(b.q_, b.q_ - 1);
  b.Z_.setZero();
  b.penalty_c_.resize(0, 0);
  return b;
}

void SmoothBasis::assemble() {
  const int q = q_;
  if (kind_ == Kind::cubic) {
    // Natural spline: second derivatives vanish at the end knots; the
    // interior ones solve the tridiagonal continuity system B delta = D beta.
    std::vector<double> h(q - 1);
    for (int j = 0; j < q - 1; ++j) h[j] = knots_[j + 1] - knots_[j];
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(q - 2, q - 2);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(q - 2, q);
    for (int i = 0; i < q - 2; ++i) {
      B(i, i) = (h[i] + h[i + 1]) / 3.0;
      if (i + 1 < q - 2) {
        B(i, i + 1) = h[i + 1] / 6.0;
        B(i + 1, i) = h[i + 1] / 6.0;
      }
      D(i, i) = 1.0 / h[i];
      D(i, i + 1) = -1.0 / h[i] - 1.0 / h[i + 1];
      D(i, i + 2) = 1.0 / h[i + 1];
    }
    const Eigen::MatrixXd Finner = B.llt().solve(D);
    F_ = Eigen::MatrixXd::Zero(q, q);
    F_.middleRows(1, q - 2) = Finner;
    penalty_v_ = D.transpose() * Finner;
  } else {
    // Periodic spline: all q second derivatives are free and the continuity
    // system wraps around.
    std::vector<double> h(q);
    for (int j = 0; j < q; ++j) h[j] = knots_[j + 1] - knots_[j];
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(q, q);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(q, q);
    for (int i = 0; i < q; ++i) {
      const int prev = (i + q - 1) % q;
      const int next = (i + 1) % q;
      B(i, i) = (h[prev] + h[i]) / 3.0;
      B(i, next) += h[i] / 6.0;
      B(i, prev) += h[prev] / 6.0;
      D(i, next) += 1.0 / h[i];
      D(i, i) += -1.0 / h[i] - 1.0 / h[prev];
      D(i, prev) += 1.0 / h[prev];
    }
    F_ = B.llt().solve(D);
    penalty_v_ = D.transpose() * F_;
  }
  penalty_v_ = 0.5 * (penalty_v_ + penalty_v_.transpose()).eval();
}

Eigen::RowVectorXd SmoothBasis::row_value(double x) const {
  const int q = q_;
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(q);

  if (kind_ == Kind::cubic) {
    const double lo = knots_.front(), hi = knots_.back();
    if (x <= lo || x >= hi) {
      // Natural boundary: continue the spline linearly using its value and
      // first derivative at the end knot.
      const bool left = x <= lo;
      const int j = left ? 0 : q - 1;
      const int nb = left ? 1 : q - 2;
      const double hh = left ? knots_[1] - knots_[0]
                             : knots_[q - 1] - knots_[q - 2];
      const double dx = x - knots_[j];
      row(j) += 1.0;
      const double slope_sign = left ? 1.0 : -1.0;
      // f'(end) = +-(beta_nb - beta_j)/h -+ (h/6) delta_nb
      row(j) += dx * (-slope_sign / hh);
      row(nb) += dx * (slope_sign / hh);
      row -= dx * slope_sign * (hh / 6.0) * F_.row(nb);
      return row;
    }
    const int j = static_cast<int>(
                      std::upper_bound(knots_.begin(), knots_.end(), x) -
                      knots_.begin()) -
                  1;
    const int jj = std::min(j, q - 2);
    const double h = knots_[jj + 1] - knots_[jj];
    const double am = (knots_[jj + 1] - x) / h;
    const double ap = (x - knots_[jj]) / h;
    const double cm =
        ((knots_[jj + 1] - x) * (knots_[jj + 1] - x) * (knots_[jj + 1] - x) / h -
         h * (knots_[jj + 1] - x)) /
        6.0;
    const double cp =
        ((x - knots_[jj]) * (x - knots_[jj]) * (x - knots_[jj]) / h -
         h * (x - knots_[jj])) /
        6.0;
    row(jj) += am;
    row(jj + 1) += ap;
    row += cm * F_.row(jj) + cp * F_.row(jj + 1);
    return row;
  }

  // Cyclic: wrap into [first knot, first knot + period).
  const double base = knots_.front();
  double xm = std::fmod(x - base, period_);
  if (xm < 0.0) xm += period_;
  xm += base;
  int j = static_cast<int>(std::upper_bound(knots_.begin(), knots_.end(), xm) -
                           knots_.begin()) -
          1;
  j = std::clamp(j, 0, q - 1);
  const int next = (j + 1) % q;
  const double h = knots_[j + 1] - knots_[j];
  const double am = (knots_[j + 1] - xm) / h;
  const double ap = (xm - knots_[j]) / h;
  const double cm = ((knots_[j + 1] - xm) * (knots_[j + 1] - xm) *
                         (knots_[j + 1] - xm) / h -
                     h * (knots_[j + 1] - xm)) /
                    6.0;
  const double cp =
      ((xm - knots_[j]) * (xm - knots_[j]) * (xm - knots_[j]) / h -
       h * (xm - knots_[j])) /
      6.0;
  row(j) += am;
  row(next) += ap;
  row += cm * F_.row(j) + cp * F_.row(next);
  return row;
}

Eigen::MatrixXd SmoothBasis::design_value(std::span<const double> x) const {
  Eigen::MatrixXd X(x.size(), q_);
  for (size_t i = 0; i < x.size(); ++i) X.row(i) = row_value(x[i]);
  return X;
}

Eigen::MatrixXd SmoothBasis::design(std::span<const double> x) const {
  return design_value(x) * Z_;
}

}  // namespace woesb::splines
