#include "woesb/binning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "woesb/cluster1d.hpp"

namespace woesb::binning {

namespace {

std::vector<double> inverse_variance_weights(std::span<const double> var) {
  const double n = static_cast<double>(var.size());
  std::vector<double> w(var.size());
  double total = 0.0;
  for (size_t i = 0; i < var.size(); ++i) {
    if (!(var[i] > 0.0))
      throw std::invalid_argument("binning: variances must be positive");
    w[i] = 1.0 / var[i];
    total += w[i];
  }
  for (double& wi : w) wi *= n / total;
  return w;
}

// Weighted mean of z over the members of each bin, recomputed from the raw
// observations so bin values honor their definition independent of any
// intermediate grouping. A bin whose members all share one z value gets that
// value exactly, so constant stretches compare equal across bins.
std::vector<double> bin_means(std::span<const double> z,
                              std::span<const double> w,
                              const std::vector<int>& assign, int K) {
  std::vector<double> wsum(K, 0.0), zsum(K, 0.0);
  std::vector<double> zlo(K, std::numeric_limits<double>::infinity());
  std::vector<double> zhi(K, -std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < z.size(); ++i) {
    const int b = assign[i];
    wsum[b] += w[i];
    zsum[b] += w[i] * z[i];
    zlo[b] = std::min(zlo[b], z[i]);
    zhi[b] = std::max(zhi[b], z[i]);
  }
  std::vector<double> means(K);
  for (int b = 0; b < K; ++b)
    means[b] = zlo[b] == zhi[b] ? zlo[b] : zsum[b] / wsum[b];
  return means;
}

StepFunction bin_unconstrained(std::span<const double> z,
                               const std::vector<double>& w, int k,
                               std::string source) {
  const auto part = cluster1d::kmeans_weighted(z, w, k);
  StepFunction step;
  step.mode = StepMode::unconstrained;
  step.source = std::move(source);
  step.K = part.k;
  step.values = bin_means(z, w, part.assignment, part.k);
  // Edge between adjacent bins sits midway between their centers, so new
  // points get the nearest bin value. At an optimal clustering the midpoint
  // falls in the gap between the bins' value ranges; nudge it off a training
  // value if rounding (or an exactly equidistant point) lands it on one, so
  // training points always map back to their own bin.
  std::vector<double> lo(part.k, std::numeric_limits<double>::infinity());
  std::vector<double> hi(part.k, -std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < z.size(); ++i) {
    lo[part.assignment[i]] = std::min(lo[part.assignment[i]], z[i]);
    hi[part.assignment[i]] = std::max(hi[part.assignment[i]], z[i]);
  }
  step.z_edges.resize(part.k - 1);
  for (int b = 0; b + 1 < part.k; ++b) {
    double edge = 0.5 * (step.values[b] + step.values[b + 1]);
    edge = std::max(edge, hi[b]);
    if (edge >= lo[b + 1])
      edge = std::nextafter(lo[b + 1], -std::numeric_limits<double>::infinity());
    step.z_edges[b] = edge;
  }
  return step;
}

// Observations sharing an x value form one atom, since a step function of x
// cannot separate them. Collapsing an atom to its weighted mean shifts every
// partition's cost by the same within-atom term, so the optimal segmentation
// is unchanged.
struct Atoms {
  std::vector<double> x, z, w;  // position, mean z, total weight
  std::vector<int> atom_of;     // raw observation -> atom
  double within_sse = 0.0;      // cost hidden from the atom-level DP
};

Atoms collapse_by_x(std::span<const double> x, std::span<const double> z,
                    const std::vector<double>& w, bool cyclic, double period) {
  const size_t n = x.size();
  std::vector<double> xs(n);
  for (size_t i = 0; i < n; ++i) {
    double v = x[i];
    if (cyclic) {
      v = std::fmod(v, period);
      if (v < 0.0) v += period;
    }
    xs[i] = v;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return xs[a] < xs[b]; });
  Atoms at;
  at.atom_of.resize(n);
  for (size_t r = 0; r < n; ++r) {
    const int i = order[r];
    if (at.x.empty() || xs[i] != at.x.back()) {
      at.x.push_back(xs[i]);
      at.z.push_back(0.0);
      at.w.push_back(0.0);
    }
    at.atom_of[i] = static_cast<int>(at.x.size()) - 1;
    at.z.back() += w[i] * z[i];
    at.w.back() += w[i];
  }
  for (size_t a = 0; a < at.x.size(); ++a)
    at.z[a] = at.w[a] > 0.0 ? at.z[a] / at.w[a] : at.z[a];
  for (size_t i = 0; i < n; ++i) {
    const double d = z[i] - at.z[at.atom_of[i]];
    at.within_sse += w[i] * d * d;
  }
  return at;
}

StepFunction bin_constrained(std::span<const double> x,
                             std::span<const double> z,
                             const std::vector<double>& w, int k, bool cyclic,
                             double period, std::string source) {
  const size_t n = x.size();
  if (cyclic && !(period > 0.0))
    throw std::invalid_argument("binning: cyclic step needs period > 0");

  const Atoms at = collapse_by_x(x, z, w, cyclic, period);
  const auto& ax = at.x;
  const auto& atom_of = at.atom_of;

  const auto part = cluster1d::ksegments_weighted(at.x, at.z, at.w, k);

  std::vector<int> assign(n);
  for (size_t i = 0; i < n; ++i) assign[i] = part.assignment[atom_of[i]];
  std::vector<double> values = bin_means(z, w, assign, part.k);

  // Breakpoints midway between the adjacent atoms across each bin boundary,
  // nudged off the upper atom if rounding lands on it so training points map
  // back to their own bin.
  std::vector<double> breaks;
  for (size_t a = 1; a < ax.size(); ++a)
    if (part.assignment[a] != part.assignment[a - 1]) {
      double bp = 0.5 * (ax[a - 1] + ax[a]);
      if (bp >= ax[a])
        bp = std::nextafter(ax[a], -std::numeric_limits<double>::infinity());
      breaks.push_back(bp);
    }

  // Merge adjacent intervals that ended up with identical values (a constant
  // stretch split only to satisfy the requested k).
  std::vector<double> mvals{values[0]};
  std::vector<double> mbreaks;
  for (size_t b = 1; b < values.size(); ++b) {
    if (values[b] == mvals.back()) continue;
    mvals.push_back(values[b]);
    mbreaks.push_back(breaks[b - 1]);
  }

  StepFunction step;
  step.mode = StepMode::constrained;
  step.source = std::move(source);
  step.cyclic = cyclic;
  step.period = cyclic ? period : 0.0;
  if (!cyclic) {
    step.values = std::move(mvals);
    step.breakpoints = std::move(mbreaks);
    step.K = static_cast<int>(step.values.size());
    return step;
  }

  // Cyclic: intervals are arcs. Arc i starts at starts[i]; the first arc's
  // start is the wrap boundary, midway between the last and first atoms
  // measured around the circle.
  if (mvals.size() == 1) {
    step.values = std::move(mvals);
    step.K = 1;
    return step;
  }
  double wrap = 0.5 * (ax.back() + ax.front() + period);
  if (wrap >= period) wrap -= period;
  if (!(wrap > ax.back() || wrap < ax.front()))
    wrap = std::nextafter(ax.back(), std::numeric_limits<double>::infinity());
  std::vector<double> starts;
  starts.reserve(mvals.size());
  starts.push_back(wrap);
  starts.insert(starts.end(), mbreaks.begin(), mbreaks.end());
  // First and last arcs merge across the wrap when they share a value: the
  // merged arc keeps the last arc's start and the wrap boundary disappears.
  if (mvals.front() == mvals.back()) {
    starts.front() = starts.back();
    starts.pop_back();
    mvals.pop_back();
  }
  if (mvals.size() == 1) {
    step.values = std::move(mvals);
    step.K = 1;
    return step;
  }
  // Rotate so boundaries ascend, keeping values aligned: arc i runs from
  // breakpoints[i] to breakpoints[(i+1) % K].
  const auto mn = std::min_element(starts.begin(), starts.end());
  const auto shift = mn - starts.begin();
  std::rotate(starts.begin(), starts.begin() + shift, starts.end());
  std::rotate(mvals.begin(), mvals.begin() + shift, mvals.end());
  step.values = std::move(mvals);
  step.breakpoints = std::move(starts);
  step.K = static_cast<int>(step.values.size());
  return step;
}

}  // namespace

StepFunction bin_smooth(std::span<const double> x, std::span<const double> z,
                        std::span<const double> var, StepMode mode, int k,
                        bool cyclic, double period, std::string source) {
  if (x.size() != z.size() || z.size() != var.size())
    throw std::invalid_argument("binning: x/z/var length mismatch");
  if (x.empty()) throw std::invalid_argument("binning: empty input");
  const auto w = inverse_variance_weights(var);
  if (mode == StepMode::unconstrained)
    return bin_unconstrained(z, w, k, std::move(source));
  return bin_constrained(x, z, w, k, cyclic, period, std::move(source));
}

std::vector<double> bin_profile(std::span<const double> x,
                                std::span<const double> z,
                                std::span<const double> var, StepMode mode,
                                int kmax, bool cyclic, double period) {
  if (x.size() != z.size() || z.size() != var.size())
    throw std::invalid_argument("binning: x/z/var length mismatch");
  if (x.empty()) throw std::invalid_argument("binning: empty input");
  if (kmax < 1) throw std::invalid_argument("binning: kmax must be positive");
  const auto w = inverse_variance_weights(var);

  if (mode == StepMode::constrained) {
    const Atoms at = collapse_by_x(x, z, w, cyclic, period);
    const int kcap = std::min<int>(kmax, static_cast<int>(at.x.size()));
    cluster1d::DpProfile dp(at.z, at.w, kcap, /*monotone_argmin=*/false);
    std::vector<double> out(kcap);
    for (int k = 1; k <= kcap; ++k) out[k - 1] = dp.wcss(k) + at.within_sse;
    return out;
  }

  // Unconstrained: sort by fitted value and pool exact duplicates, which is
  // how the k-means solver treats them; duplicate pooling hides no cost.
  std::vector<int> order(z.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return z[a] < z[b]; });
  std::vector<double> vals, wsum;
  for (int i : order) {
    if (vals.empty() || z[i] != vals.back()) {
      vals.push_back(z[i]);
      wsum.push_back(0.0);
    }
    wsum.back() += w[i];
  }
  const int kcap = std::min<int>(kmax, static_cast<int>(vals.size()));
  cluster1d::DpProfile dp(vals, wsum, kcap, /*monotone_argmin=*/true);
  std::vector<double> out(kcap);
  for (int k = 1; k <= kcap; ++k) out[k - 1] = dp.wcss(k);
  return out;
}

std::vector<double> apply_step(const StepFunction& step,
                               std::span<const double> x_new,
                               std::span<const double> z_new) {
  if (step.mode == StepMode::unconstrained) {
    if (z_new.empty() && !x_new.empty())
      throw std::invalid_argument(
          "binning: unconstrained apply needs z values");
    std::vector<double> out(z_new.size());
    for (size_t i = 0; i < z_new.size(); ++i) {
      const auto it = std::upper_bound(step.z_edges.begin(),
                                       step.z_edges.end(), z_new[i]);
      out[i] = step.values[it - step.z_edges.begin()];
    }
    return out;
  }

  std::vector<double> out(x_new.size());
  for (size_t i = 0; i < x_new.size(); ++i) {
    double v = x_new[i];
    if (step.cyclic) {
      v = std::fmod(v, step.period);
      if (v < 0.0) v += step.period;
      if (step.K == 1) {
        out[i] = step.values[0];
        continue;
      }
      // interval j covers [breakpoints[j], breakpoints[j+1]) with the last
      // wrapping around through the period
      const auto it = std::upper_bound(step.breakpoints.begin(),
                                       step.breakpoints.end(), v);
      const int idx =
          (static_cast<int>(it - step.breakpoints.begin()) - 1 + step.K) %
          step.K;
      out[i] = step.values[idx];
    } else {
      const auto it = std::upper_bound(step.breakpoints.begin(),
                                       step.breakpoints.end(), v);
      out[i] = step.values[it - step.breakpoints.begin()];
    }
  }
  return out;
}

}  // namespace woesb::binning
