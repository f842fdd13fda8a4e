#include "woesb/gam.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace woesb::gam {

namespace {

constexpr double kEtaCap = 30.0;
constexpr double kWeightFloor = 1e-10;

Eigen::VectorXd probabilities(const Eigen::VectorXd& eta) {
  Eigen::VectorXd p(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    p(i) = 1.0 / (1.0 + std::exp(-std::clamp(eta(i), -kEtaCap, kEtaCap)));
  return p;
}

double deviance_of(std::span<const int> y, const Eigen::VectorXd& p) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = std::clamp(p(i), 1e-15, 1.0 - 1e-15);
    ll += y[i] ? std::log(pi) : std::log(1.0 - pi);
  }
  return -2.0 * ll;
}

struct Assembled {
  Eigen::MatrixXd X;  // intercept column plus one block per term
  std::vector<GamTerm> terms;
  std::vector<int> smooth_index;  // positions of smooth terms within terms
};

Assembled assemble(std::span<const int> y,
                   const std::vector<TermInput>& inputs) {
  const size_t n = y.size();
  if (n == 0) throw std::invalid_argument("gam: empty response");
  for (int v : y)
    if (v != 0 && v != 1)
      throw std::invalid_argument("gam: response must be 0 or 1");

  Assembled a;
  int p = 1;
  for (const auto& t : inputs) {
    if (t.x.size() != n)
      throw std::invalid_argument("gam: column length mismatch for term '" +
                                  t.name + "'");
    p += t.kind == TermKind::linear ? 1 : t.q - 1;
  }
  a.X.resize(n, p);
  a.X.col(0).setOnes();
  int col = 1;
  for (const auto& t : inputs) {
    GamTerm term;
    term.name = t.name;
    term.kind = t.kind;
    term.lambda = t.kind == TermKind::linear ? 0.0 : t.lambda;
    term.col_start = col;
    if (t.kind == TermKind::linear) {
      term.col_count = 1;
      for (size_t i = 0; i < n; ++i) a.X(i, col) = t.x[i];
    } else {
      const auto kind = t.kind == TermKind::cyclic_smooth
                            ? splines::Kind::cyclic
                            : splines::Kind::cubic;
      term.basis = splines::SmoothBasis::build(t.x, kind, t.q, t.period);
      term.col_count = term.basis->dim();
      a.X.middleCols(col, term.col_count) = term.basis->design(t.x);
      a.smooth_index.push_back(static_cast<int>(a.terms.size()));
    }
    col += term.col_count;
    a.terms.push_back(std::move(term));
  }
  if (!a.X.allFinite())
    throw std::invalid_argument("gam: non-finite design matrix");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.X);
  if (qr.rank() < p)
    throw std::runtime_error("gam: design matrix is rank deficient");
  if (static_cast<int>(n) <= p)
    throw std::invalid_argument("gam: need more rows than coefficients");
  return a;
}

Eigen::MatrixXd penalty_of(const Assembled& a,
                           const std::vector<double>& lambdas) {
  const int p = static_cast<int>(a.X.cols());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
  size_t s = 0;
  for (const auto& term : a.terms) {
    if (!term.basis) continue;
    const double lam = lambdas[s++];
    if (!(lam >= 0.0))
      throw std::invalid_argument("gam: lambda must be >= 0");
    S.block(term.col_start, term.col_start, term.col_count, term.col_count) =
        lam * term.basis->penalty();
  }
  return S;
}

// Square root of the total penalty: rows stack sqrt(lambda_t) * L_t where
// L_t' L_t equals the term penalty. Working with the square root keeps the
// penalized least-squares solves well conditioned even at extreme lambda.
Eigen::MatrixXd penalty_root(const Assembled& a,
                             const std::vector<double>& lambdas) {
  const int p = static_cast<int>(a.X.cols());
  int rows = 0;
  for (const auto& term : a.terms)
    if (term.basis) rows += term.col_count;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(rows, p);
  int r = 0;
  size_t s = 0;
  for (const auto& term : a.terms) {
    if (!term.basis) continue;
    const double lam = lambdas[s++];
    if (!(lam >= 0.0))
      throw std::invalid_argument("gam: lambda must be >= 0");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(term.basis->penalty());
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    C.block(r, term.col_start, term.col_count, term.col_count) =
        std::sqrt(lam) * ev.cwiseSqrt().asDiagonal() *
        es.eigenvectors().transpose();
    r += term.col_count;
  }
  return C;
}

GamFit fit_assembled(std::span<const int> y, const Assembled& a,
                     const std::vector<double>& lambdas) {
  const Eigen::MatrixXd& X = a.X;
  const Eigen::Index n = X.rows(), p = X.cols();
  const Eigen::MatrixXd S = penalty_of(a, lambdas);
  const Eigen::MatrixXd C = penalty_root(a, lambdas);
  const Eigen::Index nc = C.rows();

  GamFit fit;
  fit.terms = a.terms;
  size_t s = 0;
  for (auto& term : fit.terms)
    if (term.basis) term.lambda = lambdas[s++];

  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[i];
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd prob = probabilities(eta);
  double dev = deviance_of(y, prob);
  double pdev = dev;  // beta = 0 has zero penalty

  auto penalized_gradient = [&](const Eigen::VectorXd& b,
                                const Eigen::VectorXd& pr) {
    return (X.transpose() * (yv - pr) - C.transpose() * (C * b)).eval();
  };

  Eigen::MatrixXd M(n + nc, p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + nc);
  M.bottomRows(nc) = C;

  bool capped = false;
  for (fit.iterations = 1; fit.iterations <= 200; ++fit.iterations) {
    Eigen::VectorXd w(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      w(i) = std::max(prob(i) * (1.0 - prob(i)), kWeightFloor);
      z(i) = eta(i) + (yv(i) - prob(i)) / w(i);
    }
    // Penalized weighted least squares as one augmented QR solve.
    const Eigen::ArrayXd sw = w.array().sqrt();
    M.topRows(n) = sw.matrix().asDiagonal() * X;
    rhs.head(n) = sw * z.array();
    const Eigen::VectorXd beta_new =
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(M).solve(rhs);

    Eigen::VectorXd beta_try = beta_new;
    Eigen::VectorXd eta_try, prob_try;
    double dev_try = 0.0, pdev_try = 0.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      eta_try = X * beta_try;
      prob_try = probabilities(eta_try);
      dev_try = deviance_of(y, prob_try);
      pdev_try = dev_try + (C * beta_try).squaredNorm();
      if (std::isfinite(pdev_try) && pdev_try <= pdev + 1e-12) {
        accepted = true;
        break;
      }
      beta_try = 0.5 * (beta_try + beta);
    }
    if (!accepted) break;

    const double rel =
        std::abs(pdev - pdev_try) / (std::abs(pdev_try) + 0.1);
    beta = beta_try;
    eta = eta_try;
    prob = prob_try;
    dev = dev_try;
    pdev = pdev_try;

    if (eta.cwiseAbs().maxCoeff() > kEtaCap) {
      beta *= kEtaCap / eta.cwiseAbs().maxCoeff();
      eta = X * beta;
      prob = probabilities(eta);
      dev = deviance_of(y, prob);
      fit.warnings.push_back(
          "linear predictor capped at |eta| = 30; possible separation");
      capped = true;
      break;
    }
    if (rel < 1e-8 &&
        penalized_gradient(beta, prob).cwiseAbs().maxCoeff() <= 1e-6)
      break;
  }
  fit.converged =
      !capped && penalized_gradient(beta, prob).cwiseAbs().maxCoeff() <= 1e-6;

  fit.beta = beta;
  fit.intercept = beta(0);
  fit.deviance = dev;

  // Covariance through the final augmented QR: with M P = Q R,
  // (X'WX + S)^{-1} = P R^{-1} R^{-T} P'.
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i)
    w(i) = std::max(prob(i) * (1.0 - prob(i)), kWeightFloor);
  M.topRows(n) = w.array().sqrt().matrix().asDiagonal() * X;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  const Eigen::MatrixXd R =
      qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  fit.covariance = qr.colsPermutation() * (Rinv * Rinv.transpose()) *
                   qr.colsPermutation().transpose();
  fit.covariance =
      0.5 * (fit.covariance + fit.covariance.transpose()).eval();

  // Effective degrees of freedom: diag of (X'WX + S)^{-1} X'WX, written as
  // 1 - diag((X'WX + S)^{-1} S) so unpenalized columns contribute exactly 1.
  Eigen::VectorXd edf_diag = Eigen::VectorXd::Ones(p);
  for (Eigen::Index j = 0; j < p; ++j)
    edf_diag(j) -= fit.covariance.row(j).dot(S.col(j));
  fit.total_edf = edf_diag.sum();
  for (auto& term : fit.terms)
    term.edf = edf_diag.segment(term.col_start, term.col_count).sum();
  fit.aic = fit.deviance + 2.0 * fit.total_edf;
  return fit;
}

}  // namespace

std::vector<double> default_smoothing_grid() {
  std::vector<double> grid;
  for (int e = -8; e <= 8; ++e) grid.push_back(std::exp(e));
  return grid;
}

GamFit fit_gam(std::span<const int> y, const std::vector<TermInput>& terms) {
  const Assembled a = assemble(y, terms);
  std::vector<double> lambdas;
  for (const auto& t : terms)
    if (t.kind != TermKind::linear) lambdas.push_back(t.lambda);
  return fit_assembled(y, a, lambdas);
}

std::vector<double> select_smoothing(std::span<const int> y,
                                     const std::vector<TermInput>& terms,
                                     const std::vector<double>& grid) {
  if (grid.empty())
    throw std::invalid_argument("gam: empty smoothing grid");
  const Assembled a = assemble(y, terms);
  const size_t m = a.smooth_index.size();
  std::vector<double> lambdas(m, 1.0);
  if (m == 0) return lambdas;
  if (grid.size() == 1) return std::vector<double>(m, grid[0]);

  for (int sweep = 0; sweep < 2; ++sweep) {
    for (size_t t = 0; t < m; ++t) {
      double best_aic = std::numeric_limits<double>::infinity();
      double best_lambda = lambdas[t];
      std::vector<double> cur = lambdas;
      for (double lam : grid) {
        cur[t] = lam;
        const GamFit fit = fit_assembled(y, a, cur);
        // <= so exact ties resolve toward the smoother (larger) lambda
        if (fit.aic <= best_aic) {
          best_aic = fit.aic;
          best_lambda = lam;
        }
      }
      lambdas[t] = best_lambda;
    }
  }
  return lambdas;
}

void term_values_and_variance(const GamFit& fit, int term_index,
                              std::span<const double> x,
                              std::vector<double>& z,
                              std::vector<double>& var) {
  const GamTerm& term = fit.terms.at(term_index);
  if (!term.basis)
    throw std::invalid_argument("gam: term is not a smooth");
  const auto& B = *term.basis;
  const Eigen::MatrixXd& Z = B.centering();
  const Eigen::VectorXd beta_v =
      Z * fit.beta.segment(term.col_start, term.col_count);
  const Eigen::MatrixXd V_v =
      Z *
      fit.covariance.block(term.col_start, term.col_start, term.col_count,
                           term.col_count) *
      Z.transpose();
  z.resize(x.size());
  var.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const Eigen::RowVectorXd row = B.row_value(x[i]);
    z[i] = row.dot(beta_v);
    var[i] = row * V_v * row.transpose();
    if (!(var[i] > 0.0))
      throw std::runtime_error("gam: non-positive term variance");
  }
}

double term_edf(const GamFit& fit, int term_index) {
  return fit.terms.at(term_index).edf;
}

bool effectively_linear(const GamFit& fit, int term_index, double threshold) {
  const GamTerm& term = fit.terms.at(term_index);
  return term.basis && term.edf <= threshold;
}

Eigen::VectorXd predict_gam(const GamFit& fit,
                            const std::vector<std::vector<double>>& columns) {
  if (columns.size() != fit.terms.size())
    throw std::invalid_argument("gam: column count mismatch");
  const size_t n = columns.empty() ? 1 : columns.front().size();
  Eigen::VectorXd eta =
      Eigen::VectorXd::Constant(n, fit.intercept);
  for (size_t t = 0; t < fit.terms.size(); ++t) {
    const GamTerm& term = fit.terms[t];
    if (columns[t].size() != n)
      throw std::invalid_argument("gam: ragged prediction columns");
    if (term.kind == TermKind::linear) {
      for (size_t i = 0; i < n; ++i)
        eta(i) += fit.beta(term.col_start) * columns[t][i];
    } else {
      const Eigen::VectorXd beta_v =
          term.basis->centering() *
          fit.beta.segment(term.col_start, term.col_count);
      for (size_t i = 0; i < n; ++i)
        eta(i) += term.basis->row_value(columns[t][i]).dot(beta_v);
    }
  }
  return probabilities(eta);
}

}  // namespace woesb::gam
