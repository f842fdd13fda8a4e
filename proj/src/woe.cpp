#include "woesb/woe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "woesb/cluster1d.hpp"

namespace woesb::woe {

namespace {

// Proportion with the boundary offset applied: exact 0 -> c/n_j and exact
// 1 -> 1 - c/n_j, so log-odds and inverse-variance weights stay finite.
double offset_proportion(double p, long long nj, double c) {
  if (p <= 0.0) return c / static_cast<double>(nj);
  if (p >= 1.0) return 1.0 - c / static_cast<double>(nj);
  return p;
}

double log_odds(double p) { return std::log(p / (1.0 - p)); }

void validate_offset(double c) {
  if (!(c > 0.0 && c < 1.0))
    throw std::invalid_argument("woe: offset c must lie in (0, 1)");
}

}  // namespace

double WoeMap::value_for(const std::string& level,
                         UnseenPolicy policy) const {
  for (size_t i = 0; i < levels.size(); ++i)
    if (levels[i] == level) return values[i];
  if (policy == UnseenPolicy::error)
    throw std::runtime_error("woe: unseen category level '" + level + "'");
  return unseen_value;
}

CategoricalSummary summarize_categories(std::span<const std::string> x,
                                        std::span<const int> y) {
  if (x.empty()) throw std::invalid_argument("woe: empty input");
  if (x.size() != y.size())
    throw std::invalid_argument("woe: x/y length mismatch");
  CategoricalSummary s;
  std::unordered_map<std::string, int> index;
  for (size_t i = 0; i < x.size(); ++i) {
    if (y[i] != 0 && y[i] != 1)
      throw std::invalid_argument("woe: response must be 0 or 1");
    auto [it, inserted] = index.try_emplace(x[i], s.J());
    if (inserted) {
      s.levels.push_back(x[i]);
      s.n_j.push_back(0);
      s.pos_j.push_back(0);
    }
    ++s.n_j[it->second];
    s.pos_j[it->second] += y[i];
    ++s.n;
    s.pos += y[i];
  }
  return s;
}

WoeMap woe_raw(const CategoricalSummary& s, double c) {
  validate_offset(c);
  WoeMap m;
  m.variant = WoeVariant::raw;
  m.c = c;
  m.levels = s.levels;
  m.values.resize(s.J());
  for (int j = 0; j < s.J(); ++j)
    m.values[j] = log_odds(offset_proportion(s.p_hat_j(j), s.n_j[j], c));
  m.unseen_value = log_odds(offset_proportion(s.p_hat(), s.n, c));
  return m;
}

ShrinkageEstimate shrinkage_proportions(const CategoricalSummary& s) {
  if (s.J() < 1) throw std::invalid_argument("woe: empty summary");
  const int J = s.J();
  const double n = static_cast<double>(s.n);
  const double p = s.p_hat();
  ShrinkageEstimate e;
  e.v = p * (1.0 - p) / n;
  e.v_j.resize(J);
  e.b.resize(J);
  e.p_tilde.resize(J);

  // ANOVA-type moment estimator of the between-level variance: the observed
  // dispersion of p_hat_j around p_hat, less its expectation under pure
  // binomial noise, scaled by the effective group size.
  double dispersion = 0.0, nj_sq = 0.0;
  for (int j = 0; j < J; ++j) {
    const double d = s.p_hat_j(j) - p;
    dispersion += static_cast<double>(s.n_j[j]) * d * d;
    nj_sq += static_cast<double>(s.n_j[j]) * static_cast<double>(s.n_j[j]);
  }
  const double denom = n - nj_sq / n;
  e.sigma2 = denom > 0.0
                 ? std::max(0.0, (dispersion - (J - 1) * p * (1.0 - p)) / denom)
                 : 0.0;

  for (int j = 0; j < J; ++j) {
    const double fj = static_cast<double>(s.n_j[j]) / n;
    e.v_j[j] = p * (1.0 - p) / static_cast<double>(s.n_j[j]);
    const double num = e.v_j[j] * (1.0 - fj);
    const double den = e.v_j[j] * (1.0 - 2.0 * fj) + e.v + e.sigma2;
    double b = den != 0.0 ? num / den : 1.0;
    if (!std::isfinite(b)) b = 1.0;
    e.b[j] = std::clamp(b, 0.0, 1.0);
    e.p_tilde[j] = (1.0 - e.b[j]) * s.p_hat_j(j) + e.b[j] * p;
  }
  return e;
}

WoeMap woe_shrunk(const CategoricalSummary& s, double c) {
  validate_offset(c);
  const ShrinkageEstimate e = shrinkage_proportions(s);
  WoeMap m;
  m.variant = WoeVariant::shrunk;
  m.c = c;
  m.levels = s.levels;
  m.values.resize(s.J());
  for (int j = 0; j < s.J(); ++j)
    m.values[j] = log_odds(offset_proportion(e.p_tilde[j], s.n_j[j], c));
  m.unseen_value = log_odds(offset_proportion(s.p_hat(), s.n, c));
  return m;
}

ClusterPoints woe_cluster_points(const CategoricalSummary& s, double c) {
  validate_offset(c);
  ClusterPoints pts;
  pts.values = woe_raw(s, c).values;
  pts.weights.resize(s.J());
  for (int j = 0; j < s.J(); ++j) {
    const double pj = offset_proportion(s.p_hat_j(j), s.n_j[j], c);
    pts.weights[j] = static_cast<double>(s.n_j[j]) * pj * (1.0 - pj);
  }
  return pts;
}

WoeMap woe_clustered(const CategoricalSummary& s, int k, double c) {
  validate_offset(c);
  WoeMap raw = woe_raw(s, c);
  const auto pts = woe_cluster_points(s, c);
  const auto part = cluster1d::kmeans_weighted(pts.values, pts.weights, k);
  WoeMap m;
  m.variant = WoeVariant::clustered;
  m.c = c;
  m.levels = s.levels;
  m.unseen_value = raw.unseen_value;
  m.cluster = part.assignment;
  m.values.resize(s.J());
  for (int j = 0; j < s.J(); ++j) m.values[j] = part.centers[part.assignment[j]];
  return m;
}

std::vector<double> apply_woe(std::span<const std::string> x,
                              const WoeMap& map, UnseenPolicy policy) {
  std::unordered_map<std::string, double> lookup;
  lookup.reserve(map.levels.size());
  for (size_t i = 0; i < map.levels.size(); ++i)
    lookup[map.levels[i]] = map.values[i];
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    auto it = lookup.find(x[i]);
    if (it != lookup.end()) {
      out[i] = it->second;
    } else if (policy == UnseenPolicy::error) {
      throw std::runtime_error("woe: unseen category level '" + x[i] + "'");
    } else {
      out[i] = map.unseen_value;
    }
  }
  return out;
}

}  // namespace woesb::woe
