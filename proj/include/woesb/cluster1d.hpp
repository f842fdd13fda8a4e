#ifndef WOESB_CLUSTER1D_HPP
#define WOESB_CLUSTER1D_HPP

#include <span>
#include <vector>

namespace woesb::cluster1d {

enum class Ordering { by_value, by_position };
enum class Mode { kmeans, ksegments };

// Result of a univariate weighted partition. Bins are contiguous runs in the
// stated ordering; centers are weighted means; wcss is
//   sum_k sum_{i in B_k} w_i (z_i - zbar_k)^2
// recomputed directly from the bin members (not the DP tables).
struct Partition {
  int k = 0;                      // effective bin count (can be < requested)
  std::vector<int> assignment;    // bin index per input point, 0-based
  std::vector<double> centers;    // one per bin
  double wcss = 0.0;
  Ordering ordering = Ordering::by_value;
};

// Dynamic program for the weighted within-bin sum-of-squares objective over a
// fixed point sequence. Solves all bin counts 1..kmax in one pass so that
// lambda sweeps can query the profile without re-running the DP.
//
// The table is filled over suffixes, E[m][i] = optimal cost of covering
// points i..n-1 with m bins; extraction walks forward choosing the smallest
// split that attains each stored minimum, which yields the lexicographically
// earliest optimal break vector. Segment costs are O(1) via prefix sums of
// w, wz, wz^2 (values shifted by the weighted mean for conditioning). The
// sorted (k-means) case exploits the monotone argmin structure of the cost
// matrix with divide-and-conquer per layer; the position-constrained case
// scans all splits.
class DpProfile {
 public:
  // points must already be in bin order (sorted by value for kmeans mode,
  // position order for ksegments mode).
  DpProfile(std::vector<double> values, std::vector<double> weights, int kmax,
            bool monotone_argmin);

  int kmax() const { return kmax_; }
  int max_bins() const { return n_; }

  // Optimal wcss using min(k, max_bins()) bins, as stored by the DP.
  double wcss(int k) const;

  // Start index of each bin for the earliest optimal partition at
  // min(k, max_bins()) bins; result[0] == 0.
  std::vector<int> bin_starts(int k) const;

 private:
  double segment_cost(int i, int j) const;  // points i..j inclusive
  void fill_layer_scan(int m);
  void fill_layer_dc(int m, int lo, int hi, int clo, int chi);

  int n_ = 0;
  int kmax_ = 0;
  std::vector<double> values_;
  std::vector<double> weights_;
  std::vector<double> pw_, pwz_, pwzz_;  // prefix sums over shifted values
  std::vector<std::vector<double>> cost_;  // cost_[m][i] = E[m][i]
};

// Exact weighted k-means on presorted values (ascending). Equal values are
// kept together; the effective bin count is min(k, number of distinct
// values).
Partition cluster_sorted(std::span<const double> values,
                         std::span<const double> weights, int k);

// Exact weighted k-means on arbitrary input: sorts by value, solves, and maps
// assignments back to the input order.
Partition kmeans_weighted(std::span<const double> values,
                          std::span<const double> weights, int k);

// Exact weighted k-segments: bins must be contiguous in the presented
// (position) order. positions are a validation key and must be strictly
// increasing.
Partition ksegments_weighted(std::span<const double> positions,
                             std::span<const double> z,
                             std::span<const double> weights, int k);

struct SelectKResult {
  int k_star = 0;
  Partition partition;
  std::vector<double> wcss_by_k;  // index k-1, for k = 1..kmax
};

// Picks k in 1..kmax minimizing wcss_k + lambda * k (ties toward smaller k)
// and returns the corresponding partition. positions are required for
// ksegments mode only.
SelectKResult select_k(std::span<const double> values,
                       std::span<const double> weights, int kmax,
                       double lambda, Mode mode,
                       std::span<const double> positions = {});

}  // namespace woesb::cluster1d

#endif
