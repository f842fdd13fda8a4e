#ifndef WOESB_METRICS_HPP
#define WOESB_METRICS_HPP

#include <optional>
#include <span>
#include <vector>

namespace woesb::metrics {

// Evaluation summary for a binary classifier on one dataset.
struct MetricReport {
  double auc = 0.0;
  double wbrier = 0.0;
  double h = 0.0;
  double pi0 = 0.0;
  double pi1 = 0.0;
  double severity_ratio = 0.0;  // the ratio h was computed with
  long long n = 0;
  long long positives = 0;
};

// One vertex of the empirical ROC curve; tied scores collapse into a single
// vertex. Vertices run from (0,0) to (1,1) with both coordinates
// nondecreasing.
struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

// Full tie-grouped ROC polyline (exposed for plot export and for the
// H-measure hull construction).
std::vector<RocPoint> roc_points(std::span<const double> scores,
                                 std::span<const int> y);

// Mann-Whitney AUC with ties counting one half.
double auc(std::span<const double> scores, std::span<const int> y);

// Mean squared error with class weights 1/pi0 and 1/pi1, so each class
// contributes equally when per-case errors are comparable.
double weighted_brier(std::span<const double> p, std::span<const int> y);

// H-measure: expected minimum misclassification loss over the ROC convex
// hull, averaged over a Beta cost distribution with mode sr/(1+sr) and
// concentration alpha+beta = 3 (the class-prior default gives
// Beta(pi1+1, pi0+1)), normalized against the best trivial classifier.
// severity_ratio defaults to pi1/pi0.
double h_measure(std::span<const double> scores, std::span<const int> y,
                 std::optional<double> severity_ratio = std::nullopt);

// Convenience bundle: treats p as both score and probability estimate.
MetricReport evaluate_probabilities(
    std::span<const double> p, std::span<const int> y,
    std::optional<double> severity_ratio = std::nullopt);

}  // namespace woesb::metrics

#endif
