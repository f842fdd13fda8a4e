#include "woesb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

namespace woesb::metrics {

namespace {

struct ClassCounts {
  long long n0 = 0;
  long long n1 = 0;
};

ClassCounts check_labels(std::span<const double> scores,
                         std::span<const int> y) {
  if (scores.size() != y.size())
    throw std::invalid_argument("metrics: score/label length mismatch");
  if (y.empty()) throw std::invalid_argument("metrics: empty input");
  ClassCounts c;
  for (size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1)
      throw std::invalid_argument("metrics: labels must be 0 or 1");
    if (!std::isfinite(scores[i]))
      throw std::invalid_argument("metrics: scores must be finite");
    ++(y[i] == 1 ? c.n1 : c.n0);
  }
  if (c.n0 == 0 || c.n1 == 0)
    throw std::invalid_argument("metrics: both classes must be present");
  return c;
}

// Upper convex hull of the ROC polyline; collinear interior points drop out.
std::vector<RocPoint> upper_hull(const std::vector<RocPoint>& pts) {
  std::vector<RocPoint> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull[hull.size() - 1];
      const double turn = (b.fpr - a.fpr) * (p.tpr - a.tpr) -
                          (b.tpr - a.tpr) * (p.fpr - a.fpr);
      if (turn < 0.0) break;  // strict right turn: b is a true hull vertex
      hull.pop_back();
    }
    hull.push_back(p);
  }
  return hull;
}

}  // namespace

std::vector<RocPoint> roc_points(std::span<const double> scores,
                                 std::span<const int> y) {
  const auto counts = check_labels(scores, y);
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> pts{{0.0, 0.0}};
  long long c0 = 0, c1 = 0;
  for (size_t r = 0; r < order.size();) {
    size_t s = r;
    while (s < order.size() && scores[order[s]] == scores[order[r]]) {
      ++(y[order[s]] == 1 ? c1 : c0);
      ++s;
    }
    pts.push_back({static_cast<double>(c0) / counts.n0,
                   static_cast<double>(c1) / counts.n1});
    r = s;
  }
  return pts;
}

double auc(std::span<const double> scores, std::span<const int> y) {
  const auto counts = check_labels(scores, y);
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });

  // Rank sum of the positives with average ranks across ties.
  double rank_sum = 0.0;
  for (size_t r = 0; r < order.size();) {
    size_t s = r;
    long long pos = 0;
    while (s < order.size() && scores[order[s]] == scores[order[r]]) {
      pos += y[order[s]];
      ++s;
    }
    const double avg_rank = 0.5 * (static_cast<double>(r + 1) + s);
    rank_sum += avg_rank * pos;
    r = s;
  }
  const double n1 = static_cast<double>(counts.n1);
  return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (counts.n0 * n1);
}

double weighted_brier(std::span<const double> p, std::span<const int> y) {
  const auto counts = check_labels(p, y);
  const double n = static_cast<double>(y.size());
  const double pi0 = counts.n0 / n;
  const double pi1 = counts.n1 / n;
  double total = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || p[i] > 1.0)
      throw std::invalid_argument("metrics: probabilities must lie in [0,1]");
    const double e = p[i] - y[i];
    total += (y[i] == 1 ? 1.0 / pi1 : 1.0 / pi0) * e * e;
  }
  return total / n;
}

double h_measure(std::span<const double> scores, std::span<const int> y,
                 std::optional<double> severity_ratio) {
  const auto counts = check_labels(scores, y);
  const double n = static_cast<double>(y.size());
  const double pi0 = counts.n0 / n;
  const double pi1 = counts.n1 / n;
  const double sr = severity_ratio.value_or(pi1 / pi0);
  if (!(sr > 0.0) || !std::isfinite(sr))
    throw std::invalid_argument("metrics: severity ratio must be positive");

  // Cost distribution: Beta with mode m = sr/(1+sr) and alpha+beta = 3, so
  // the default severity ratio pi1/pi0 yields Beta(pi1+1, pi0+1). A cost c
  // prices a false positive at c and a false negative at 1-c.
  const double m = sr / (1.0 + sr);
  const double a = 1.0 + m;
  const double b = 2.0 - m;
  // Partial moments of the cost density u: integral of t*u(t) resp.
  // (1-t)*u(t) over [0,c], via the regularized incomplete beta function.
  const auto m1 = [&](double c) {
    return a / (a + b) * boost::math::ibeta(a + 1.0, b, c);
  };
  const auto m0 = [&](double c) {
    return b / (a + b) * boost::math::ibeta(a, b + 1.0, c);
  };

  const auto hull = upper_hull(roc_points(scores, y));

  // Expected loss of the hull classifier: hull vertex j is the cost-optimal
  // operating point on a cost interval [c_j, c_{j-1}] whose endpoints are
  // where adjacent vertices tie; intervals sweep downward from c = 1 at
  // (0,0) to c = 0 at (1,1) as the hull slope decreases.
  double loss = 0.0;
  double hi = 1.0;
  for (size_t j = 0; j + 1 < hull.size(); ++j) {
    const double dx = hull[j + 1].fpr - hull[j].fpr;
    const double dy = hull[j + 1].tpr - hull[j].tpr;
    const double lo = pi1 * dy / (pi1 * dy + pi0 * dx);
    loss += pi0 * hull[j].fpr * (m1(hi) - m1(lo)) +
            pi1 * (1.0 - hull[j].tpr) * (m0(hi) - m0(lo));
    hi = lo;
  }
  loss += pi0 * hull.back().fpr * m1(hi) +
          pi1 * (1.0 - hull.back().tpr) * m0(hi);

  // Best trivial classifier: flag everything when c < pi1, nothing above.
  const double lmax = pi0 * m1(pi1) + pi1 * (m0(1.0) - m0(pi1));
  return 1.0 - loss / lmax;
}

MetricReport evaluate_probabilities(std::span<const double> p,
                                    std::span<const int> y,
                                    std::optional<double> severity_ratio) {
  const auto counts = check_labels(p, y);
  const double n = static_cast<double>(y.size());
  MetricReport r;
  r.n = static_cast<long long>(y.size());
  r.positives = counts.n1;
  r.pi0 = counts.n0 / n;
  r.pi1 = counts.n1 / n;
  r.severity_ratio = severity_ratio.value_or(r.pi1 / r.pi0);
  r.auc = auc(p, y);
  r.wbrier = weighted_brier(p, y);
  r.h = h_measure(p, y, r.severity_ratio);
  return r;
}

}  // namespace woesb::metrics
