#include "woesb/cluster1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace woesb::cluster1d {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_inputs(std::span<const double> values,
                     std::span<const double> weights, int k) {
  if (values.empty()) throw std::invalid_argument("cluster1d: empty input");
  if (values.size() != weights.size())
    throw std::invalid_argument("cluster1d: values/weights length mismatch");
  if (k < 1) throw std::invalid_argument("cluster1d: k must be >= 1");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0))
      throw std::invalid_argument("cluster1d: weights must be non-negative");
    total += w;
  }
  if (total <= 0.0)
    throw std::invalid_argument("cluster1d: all weights are zero");
  for (double v : values)
    if (!std::isfinite(v))
      throw std::invalid_argument("cluster1d: values must be finite");
}

// Centers and wcss recomputed directly from bin members so the partition
// satisfies its own invariants independent of DP rounding.
Partition build_partition(std::span<const double> values,
                          std::span<const double> weights,
                          const std::vector<int>& starts, Ordering ordering) {
  const int n = static_cast<int>(values.size());
  const int k = static_cast<int>(starts.size());
  Partition p;
  p.k = k;
  p.ordering = ordering;
  p.assignment.resize(n);
  p.centers.resize(k);
  p.wcss = 0.0;
  for (int b = 0; b < k; ++b) {
    const int lo = starts[b];
    const int hi = (b + 1 < k) ? starts[b + 1] : n;
    double wsum = 0.0, mean = 0.0;
    for (int i = lo; i < hi; ++i) wsum += weights[i];
    if (wsum > 0.0) {
      double s = 0.0;
      for (int i = lo; i < hi; ++i) s += weights[i] * values[i];
      mean = s / wsum;
    } else {
      double s = 0.0;
      for (int i = lo; i < hi; ++i) s += values[i];
      mean = s / (hi - lo);
    }
    double sse = 0.0;
    for (int i = lo; i < hi; ++i) {
      const double d = values[i] - mean;
      sse += weights[i] * d * d;
      p.assignment[i] = b;
    }
    p.centers[b] = mean;
    p.wcss += sse;
  }
  return p;
}

}  // namespace

DpProfile::DpProfile(std::vector<double> values, std::vector<double> weights,
                     int kmax, bool monotone_argmin)
    : n_(static_cast<int>(values.size())),
      kmax_(std::min(kmax, static_cast<int>(values.size()))),
      values_(std::move(values)),
      weights_(std::move(weights)) {
  // Shift by the weighted mean so the prefix sums of wz^2 do not swamp the
  // within-segment variation.
  double wsum = 0.0, mu = 0.0;
  for (int i = 0; i < n_; ++i) wsum += weights_[i];
  for (int i = 0; i < n_; ++i) mu += weights_[i] * values_[i];
  mu /= wsum;
  pw_.assign(n_ + 1, 0.0);
  pwz_.assign(n_ + 1, 0.0);
  pwzz_.assign(n_ + 1, 0.0);
  for (int i = 0; i < n_; ++i) {
    const double z = values_[i] - mu;
    pw_[i + 1] = pw_[i] + weights_[i];
    pwz_[i + 1] = pwz_[i] + weights_[i] * z;
    pwzz_[i + 1] = pwzz_[i] + weights_[i] * z * z;
  }

  cost_.assign(kmax_, std::vector<double>(n_ + 1, kInf));
  for (int i = 0; i < n_; ++i) cost_[0][i] = segment_cost(i, n_ - 1);
  for (int m = 2; m <= kmax_; ++m) {
    if (monotone_argmin)
      fill_layer_dc(m, 0, n_ - m, 1, n_ - m + 1);
    else
      fill_layer_scan(m);
  }
}

double DpProfile::segment_cost(int i, int j) const {
  const double w = pw_[j + 1] - pw_[i];
  if (w <= 0.0) return 0.0;
  const double s = pwz_[j + 1] - pwz_[i];
  const double q = pwzz_[j + 1] - pwzz_[i];
  return std::max(0.0, q - s * s / w);
}

void DpProfile::fill_layer_scan(int m) {
  // E[m][i] = min over splits s of cost(i, s-1) + E[m-1][s].
  for (int i = 0; i <= n_ - m; ++i) {
    double best = kInf;
    for (int s = i + 1; s <= n_ - m + 1; ++s) {
      const double c = segment_cost(i, s - 1) + cost_[m - 2][s];
      if (c < best) best = c;
    }
    cost_[m - 1][i] = best;
  }
}

// The wcss cost on value-sorted points is concave Monge, so the optimal
// split index is non-decreasing in the row index; divide and conquer over
// rows keeps each layer at O(n log n) candidate evaluations.
void DpProfile::fill_layer_dc(int m, int lo, int hi, int clo, int chi) {
  if (lo > hi) return;
  const int mid = lo + (hi - lo) / 2;
  double best = kInf;
  int arg = std::max(clo, mid + 1);
  const int last = std::min(chi, n_ - m + 1);
  for (int s = std::max(clo, mid + 1); s <= last; ++s) {
    const double c = segment_cost(mid, s - 1) + cost_[m - 2][s];
    if (c < best) {
      best = c;
      arg = s;
    }
  }
  cost_[m - 1][mid] = best;
  fill_layer_dc(m, lo, mid - 1, clo, arg);
  fill_layer_dc(m, mid + 1, hi, arg, chi);
}

double DpProfile::wcss(int k) const {
  const int kk = std::clamp(k, 1, kmax_);
  return cost_[kk - 1][0];
}

std::vector<int> DpProfile::bin_starts(int k) const {
  const int kk = std::clamp(k, 1, kmax_);
  std::vector<int> starts;
  starts.reserve(kk);
  int i = 0;
  for (int m = kk; m >= 1; --m) {
    starts.push_back(i);
    if (m == 1) break;
    // Earliest split that attains the stored optimum; the expression below
    // is the one the fill evaluated, so exact equality is reachable.
    const double target = cost_[m - 1][i];
    int chosen = -1;
    for (int s = i + 1; s <= n_ - m + 1; ++s) {
      if (segment_cost(i, s - 1) + cost_[m - 2][s] == target) {
        chosen = s;
        break;
      }
    }
    if (chosen < 0) {
      // Fallback for pathological rounding: take the true argmin.
      double best = kInf;
      for (int s = i + 1; s <= n_ - m + 1; ++s) {
        const double c = segment_cost(i, s - 1) + cost_[m - 2][s];
        if (c < best) {
          best = c;
          chosen = s;
        }
      }
    }
    i = chosen;
  }
  return starts;
}

namespace {

// Equal values collapsed to blocks: every optimal clustering of sorted data
// has an optimal representative that keeps ties together, and the contract
// requires equal values to share a bin, so the DP runs on the block
// sequence.
struct Blocks {
  std::vector<double> value;   // representative value per block
  std::vector<double> weight;  // summed weight per block
  std::vector<int> point_start;  // first point index of each block
};

Blocks group_ties(std::span<const double> values,
                  std::span<const double> weights) {
  Blocks b;
  const int n = static_cast<int>(values.size());
  for (int i = 0; i < n; ++i) {
    if (b.value.empty() || values[i] != b.value.back()) {
      b.value.push_back(values[i]);
      b.weight.push_back(weights[i]);
      b.point_start.push_back(i);
    } else {
      b.weight.back() += weights[i];
    }
  }
  return b;
}

Partition cluster_sorted_impl(std::span<const double> values,
                              std::span<const double> weights, int k) {
  const Blocks blocks = group_ties(values, weights);
  DpProfile dp(blocks.value, blocks.weight, k, /*monotone_argmin=*/true);
  const std::vector<int> block_starts = dp.bin_starts(k);
  std::vector<int> starts(block_starts.size());
  for (size_t b = 0; b < block_starts.size(); ++b)
    starts[b] = blocks.point_start[block_starts[b]];
  return build_partition(values, weights, starts, Ordering::by_value);
}

}  // namespace

Partition cluster_sorted(std::span<const double> values,
                         std::span<const double> weights, int k) {
  validate_inputs(values, weights, k);
  for (size_t i = 1; i < values.size(); ++i)
    if (values[i] < values[i - 1])
      throw std::invalid_argument("cluster_sorted: values not sorted");
  return cluster_sorted_impl(values, weights, k);
}

Partition kmeans_weighted(std::span<const double> values,
                          std::span<const double> weights, int k) {
  validate_inputs(values, weights, k);
  const int n = static_cast<int>(values.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a] < values[b]; });
  std::vector<double> sv(n), sw(n);
  for (int i = 0; i < n; ++i) {
    sv[i] = values[order[i]];
    sw[i] = weights[order[i]];
  }
  Partition sorted = cluster_sorted_impl(sv, sw, k);
  Partition p = sorted;
  for (int i = 0; i < n; ++i) p.assignment[order[i]] = sorted.assignment[i];
  return p;
}

Partition ksegments_weighted(std::span<const double> positions,
                             std::span<const double> z,
                             std::span<const double> weights, int k) {
  validate_inputs(z, weights, k);
  if (positions.size() != z.size())
    throw std::invalid_argument("ksegments: positions/z length mismatch");
  for (size_t i = 1; i < positions.size(); ++i)
    if (!(positions[i] > positions[i - 1]))
      throw std::invalid_argument(
          "ksegments: positions must be strictly increasing");
  DpProfile dp(std::vector<double>(z.begin(), z.end()),
               std::vector<double>(weights.begin(), weights.end()), k,
               /*monotone_argmin=*/false);
  return build_partition(z, weights, dp.bin_starts(k), Ordering::by_position);
}

SelectKResult select_k(std::span<const double> values,
                       std::span<const double> weights, int kmax,
                       double lambda, Mode mode,
                       std::span<const double> positions) {
  validate_inputs(values, weights, kmax);
  if (!(lambda >= 0.0))
    throw std::invalid_argument("select_k: lambda must be >= 0");

  SelectKResult res;
  res.wcss_by_k.resize(kmax);

  if (mode == Mode::kmeans) {
    const int n = static_cast<int>(values.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return values[a] < values[b]; });
    std::vector<double> sv(n), sw(n);
    for (int i = 0; i < n; ++i) {
      sv[i] = values[order[i]];
      sw[i] = weights[order[i]];
    }
    const Blocks blocks = group_ties(sv, sw);
    DpProfile dp(blocks.value, blocks.weight, kmax, /*monotone_argmin=*/true);
    int k_star = 1;
    double best = kInf;
    for (int k = 1; k <= kmax; ++k) {
      res.wcss_by_k[k - 1] = dp.wcss(k);
      const double score = res.wcss_by_k[k - 1] + lambda * k;
      if (score < best) {
        best = score;
        k_star = k;
      }
    }
    res.k_star = k_star;
    const std::vector<int> block_starts = dp.bin_starts(k_star);
    std::vector<int> starts(block_starts.size());
    for (size_t b = 0; b < block_starts.size(); ++b)
      starts[b] = blocks.point_start[block_starts[b]];
    const Partition sorted =
        build_partition(sv, sw, starts, Ordering::by_value);
    res.partition = sorted;
    for (int i = 0; i < n; ++i)
      res.partition.assignment[order[i]] = sorted.assignment[i];
    return res;
  }

  if (positions.size() != values.size())
    throw std::invalid_argument("select_k: positions required for ksegments");
  for (size_t i = 1; i < positions.size(); ++i)
    if (!(positions[i] > positions[i - 1]))
      throw std::invalid_argument(
          "select_k: positions must be strictly increasing");
  DpProfile dp(std::vector<double>(values.begin(), values.end()),
               std::vector<double>(weights.begin(), weights.end()), kmax,
               /*monotone_argmin=*/false);
  int k_star = 1;
  double best = kInf;
  for (int k = 1; k <= kmax; ++k) {
    res.wcss_by_k[k - 1] = dp.wcss(k);
    const double score = res.wcss_by_k[k - 1] + lambda * k;
    if (score < best) {
      best = score;
      k_star = k;
    }
  }
  res.k_star = k_star;
  res.partition = build_partition(values, weights, dp.bin_starts(k_star),
                                  Ordering::by_position);
  return res;
}

}  // namespace woesb::cluster1d
