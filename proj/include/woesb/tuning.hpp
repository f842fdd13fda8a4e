#ifndef WOESB_TUNING_HPP
#define WOESB_TUNING_HPP

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "woesb/binning.hpp"
#include "woesb/data.hpp"
#include "woesb/gam.hpp"
#include "woesb/metrics.hpp"
#include "woesb/pipeline.hpp"
#include "woesb/woe.hpp"

namespace woesb::tuning {

// Candidate penalty values for the cluster-count selections: WOE clustering
// (lambda_cat), unconstrained and cyclic smooth binning (lambda_unconstrained)
// and ordered smooth binning (lambda_constrained). The selection objective is
// mean within-bin weighted SSE plus lambda times the bin count, so values are
// comparable across sample sizes.
struct TuningGrid {
  std::vector<double> lambda_cat = default_values();
  std::vector<double> lambda_unconstrained = default_values();
  std::vector<double> lambda_constrained = default_values();

  static std::vector<double> default_values();  // 13 points, e^-10 .. e^2
  void validate() const;  // each grid nonempty, finite, >= 0, ascending
};

// aic scores each grid point by the in-sample AIC of the stage model, with
// each tuned transform's estimated values counted as parameters: a k-cluster
// or K-bin transform adds 2 * (k - 1) on top of the fit's own AIC, since its
// pooled values were estimated from the same data but enter the design as a
// single column. Without that term the parameter count would not depend on k
// and the in-sample deviance would always favor the finest transform. auc and
// h score by the negated mean held-out metric over an internal
// cross-validation split (so smaller is better for every criterion).
enum class Criterion { aic, auc, h };

std::string criterion_name(Criterion c);
Criterion criterion_from_name(const std::string& name);

struct TuningOptions {
  TuningGrid grid;
  Criterion criterion = Criterion::aic;
  int folds = 5;           // internal validation folds (auc / h only)
  std::uint64_t seed = 0;  // internal fold split seed
};

struct TracePoint {
  double lambda_cat = std::numeric_limits<double>::quiet_NaN();
  double lambda_unconstrained = std::numeric_limits<double>::quiet_NaN();
  double lambda_constrained = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<std::string, int>> k_selected;
  double score = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;
  bool winner = false;
};

struct TuningTrace {
  std::string stage;  // "woe_clustering" or "binning"
  Criterion criterion = Criterion::aic;
  std::vector<TracePoint> points;
  int winner = -1;  // index into points; minimum score, ties to smaller
                    // lambda (earlier grid point)
};

// One row per grid point; unused lambdas print as NA, k_selected as
// name=k;name=k. Wall times are measured, so this column (alone) varies
// across otherwise identical runs.
std::string trace_tsv(const TuningTrace& trace);

// All traces under a single header row; the stage column tells them apart.
std::string traces_tsv(std::span<const TuningTrace> traces);

struct CatTuningResult {
  double lambda_cat = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<std::string, int>> clusters;  // per cwoe column
  std::vector<std::pair<std::string, woe::WoeMap>> maps;  // winning cwoe maps
  TuningTrace trace;
};

// Grid search for the WOE clustering penalty: per candidate, cluster each
// cwoe column's level log-odds, rebuild the maps, refit the stage GAM and
// score it. Columns with other treatments keep their fixed maps. With no
// cwoe columns this is a no-op with an empty trace.
CatTuningResult tune_lambda_cat(const data::Dataset& dataset,
                                const data::Schema& schema,
                                const TuningOptions& options = {});

struct ContinuousTuningResult {
  double lambda_unconstrained = std::numeric_limits<double>::quiet_NaN();
  double lambda_constrained = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<std::string, int>> bins;  // per smooth term
  std::vector<binning::StepFunction> steps;       // winning step functions
  std::vector<pipeline::SmoothRecord> smooths;    // value-space term records
  TuningTrace trace;
};

// Full cross-grid over (lambda_unconstrained, lambda_constrained). Per grid
// point: pick each smooth term's bin count from its precomputed cost profile,
// bin the term, fit the logistic model on binned + linear + WOE columns and
// score it. A side without terms collapses to a single pass (its lambda is
// reported as NA in the trace).
ContinuousTuningResult tune_lambda_continuous(
    const data::Dataset& dataset, const data::Schema& schema,
    const gam::GamFit& gamfit,
    const std::vector<std::pair<std::string, woe::WoeMap>>& woe_maps,
    const TuningOptions& options = {});

// End-to-end fit: (1) WOE maps per treatment (cwoe via tune_lambda_cat),
// (2) GAM with automatic smoothing selection, (3) demotion of effectively
// linear non-cyclic smooths to linear terms (refit until stable),
// (4) tune_lambda_continuous, (5) final logistic fit on the transformed
// design. Errors are annotated with the failing stage. When traces is given
// it receives the tuning traces of the stages that ran.
pipeline::PipelineModel fit_pipeline(const data::Dataset& dataset,
                                     const data::Schema& schema,
                                     const TuningOptions& options = {},
                                     std::vector<TuningTrace>* traces = nullptr);

struct FoldReport {
  int fold = 0;  // 1-based
  metrics::MetricReport report;
};

// Outer cross-validation: refits the whole pipeline per training split and
// evaluates on the held-out part. Deterministic given the seed.
std::vector<FoldReport> cross_validate(const data::Dataset& dataset,
                                       const data::Schema& schema, int folds,
                                       std::uint64_t seed,
                                       const TuningOptions& options = {});

std::string cv_tsv(const std::vector<FoldReport>& folds);

}  // namespace woesb::tuning

#endif
