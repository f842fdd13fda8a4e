#ifndef WOESB_PIPELINE_HPP
#define WOESB_PIPELINE_HPP

#include <Eigen/Dense>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "woesb/binning.hpp"
#include "woesb/data.hpp"
#include "woesb/gam.hpp"
#include "woesb/glm.hpp"
#include "woesb/splines.hpp"
#include "woesb/woe.hpp"

namespace woesb::pipeline {

// A fitted smooth term in self-contained form: knots plus coefficients and
// covariance on the value-parameterized basis, so the term value and its
// pointwise variance can be evaluated anywhere without the training fit.
struct SmoothRecord {
  std::string name;
  splines::Kind kind = splines::Kind::cubic;
  double period = 0.0;
  std::vector<double> knots;
  Eigen::VectorXd beta_value;
  Eigen::MatrixXd cov_value;
  double lambda = 0.0;
  double edf = 0.0;

  splines::SmoothBasis basis() const;
  void evaluate(std::span<const double> x, std::vector<double>& z,
                std::vector<double>& var) const;
};

// Extracts a fitted smooth term into its value-space record. Pure function of
// the fit, so repeated extraction is bit-identical.
SmoothRecord make_smooth_record(const gam::GamFit& fit, int term_index);

struct TuningSummary {
  double lambda_cat = std::numeric_limits<double>::quiet_NaN();
  double lambda_uc = std::numeric_limits<double>::quiet_NaN();
  double lambda_c = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<std::string, int>> k_selected;  // clusters or bins
  std::vector<std::string> demoted;  // smooths folded into linear terms
};

struct PipelineModel {
  int version = 1;
  data::Schema schema;
  std::vector<std::pair<std::string, woe::WoeMap>> woe_maps;
  std::vector<SmoothRecord> smooths;
  std::vector<binning::StepFunction> steps;  // source names the column
  glm::GlmFit glm;
  TuningSummary tuning;
  long long train_n = 0;
  double pi0 = 0.0;
  double pi1 = 0.0;
  std::string timestamp;

  const woe::WoeMap* woe_map(const std::string& name) const;
  const SmoothRecord* smooth(const std::string& name) const;
  const binning::StepFunction* step(const std::string& name) const;
};

// The design matrix of the final logistic model (intercept column included),
// rebuilt from the stored maps, smooths and step functions.
Eigen::MatrixXd transform(
    const PipelineModel& model, const data::Dataset& dataset,
    woe::UnseenPolicy policy = woe::UnseenPolicy::overall_logodds);

Eigen::VectorXd predict(
    const PipelineModel& model, const data::Dataset& dataset,
    woe::UnseenPolicy policy = woe::UnseenPolicy::overall_logodds);

// JSON serialization; save -> load -> save is byte-identical and a reloaded
// model predicts bit-identically.
std::string save_model(const PipelineModel& model);
PipelineModel load_model(const std::string& text);
void save_model_file(const std::string& path, const PipelineModel& model);
PipelineModel load_model_file(const std::string& path);

// ISO-8601 UTC; honors SOURCE_DATE_EPOCH so fits can be made reproducible.
std::string current_timestamp();

}  // namespace woesb::pipeline

#endif
