#ifndef WOESB_WOE_HPP
#define WOESB_WOE_HPP

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace woesb::woe {

// Per-level counts of a categorical column against a binary response.
struct CategoricalSummary {
  std::vector<std::string> levels;   // first-appearance order
  std::vector<long long> n_j;        // rows per level
  std::vector<long long> pos_j;      // positive rows per level
  long long n = 0;
  long long pos = 0;

  double p_hat() const { return static_cast<double>(pos) / n; }
  double p_hat_j(int j) const {
    return static_cast<double>(pos_j[j]) / n_j[j];
  }
  int J() const { return static_cast<int>(levels.size()); }
};

// James-Stein style shrinkage of the per-level proportions toward the
// overall proportion, entries aligned with CategoricalSummary::levels.
struct ShrinkageEstimate {
  double v = 0.0;       // sampling variance of p_hat
  double sigma2 = 0.0;  // between-level variance estimate (>= 0)
  std::vector<double> v_j;
  std::vector<double> b;        // shrinkage coefficients in [0, 1]
  std::vector<double> p_tilde;  // shrunk proportions
};

enum class WoeVariant { raw, shrunk, clustered };
enum class UnseenPolicy { overall_logodds, error };

struct WoeMap {
  WoeVariant variant = WoeVariant::raw;
  double c = 0.01;            // boundary offset used during the fit
  double unseen_value = 0.0;  // overall log-odds fallback
  std::vector<std::string> levels;
  std::vector<double> values;    // aligned with levels
  std::vector<int> cluster;      // clustered variant only, else empty

  double value_for(const std::string& level, UnseenPolicy policy) const;
};

CategoricalSummary summarize_categories(std::span<const std::string> x,
                                        std::span<const int> y);

// Empirical log-odds per level. Proportions of exactly 0 or 1 are replaced
// by c/n_j and 1 - c/n_j so every value stays finite.
WoeMap woe_raw(const CategoricalSummary& s, double c = 0.01);

ShrinkageEstimate shrinkage_proportions(const CategoricalSummary& s);

// Per-level points fed to the clustering step: raw log-odds values with
// weights n_j * p_j (1 - p_j), offset-adjusted at the boundary. Exposed so
// cluster-count selection can share the exact inputs woe_clustered uses.
struct ClusterPoints {
  std::vector<double> values;
  std::vector<double> weights;
};

ClusterPoints woe_cluster_points(const CategoricalSummary& s, double c = 0.01);

// Log-odds of the shrunk proportions.
WoeMap woe_shrunk(const CategoricalSummary& s, double c = 0.01);

// Raw log-odds pooled by exact weighted k-means over the level values, one
// point per level with weight n_j * p_j (1 - p_j) (offset-adjusted at the
// boundary); each level maps to its cluster's weighted mean.
WoeMap woe_clustered(const CategoricalSummary& s, int k, double c = 0.01);

std::vector<double> apply_woe(std::span<const std::string> x,
                              const WoeMap& map, UnseenPolicy policy);

}  // namespace woesb::woe

#endif
