// Python bindings for the scorecard pipeline: schema/dataset loading, the
// end-to-end fit, prediction, serialization, cross-validation and the core
// metrics. Heavy calls release the GIL.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "woesb/cluster1d.hpp"
#include "woesb/data.hpp"
#include "woesb/glm.hpp"
#include "woesb/metrics.hpp"
#include "woesb/pipeline.hpp"
#include "woesb/tuning.hpp"
#include "woesb/woe.hpp"

namespace py = pybind11;
using namespace py::literals;
using namespace woesb;

namespace {

woe::UnseenPolicy policy_from_name(const std::string& name) {
  if (name == "overall_logodds") return woe::UnseenPolicy::overall_logodds;
  if (name == "error") return woe::UnseenPolicy::error;
  throw std::invalid_argument("unseen policy must be 'overall_logodds' or "
                              "'error', got '" + name + "'");
}

tuning::TuningOptions make_options(
    const std::string& criterion, int folds, std::uint64_t seed,
    const std::optional<std::vector<double>>& grid_cat,
    const std::optional<std::vector<double>>& grid_unconstrained,
    const std::optional<std::vector<double>>& grid_constrained) {
  tuning::TuningOptions options;
  options.criterion = tuning::criterion_from_name(criterion);
  options.folds = folds;
  options.seed = seed;
  if (grid_cat) options.grid.lambda_cat = *grid_cat;
  if (grid_unconstrained)
    options.grid.lambda_unconstrained = *grid_unconstrained;
  if (grid_constrained) options.grid.lambda_constrained = *grid_constrained;
  options.grid.validate();
  return options;
}

py::dict report_dict(const metrics::MetricReport& r) {
  py::dict d;
  d["n"] = r.n;
  d["positives"] = r.positives;
  d["pi0"] = r.pi0;
  d["pi1"] = r.pi1;
  d["severity_ratio"] = r.severity_ratio;
  d["auc"] = r.auc;
  d["wbrier"] = r.wbrier;
  d["h"] = r.h;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Interpretable scorecard pipeline: weight-of-evidence encodings, "
            "spline binning and logistic scoring (C++ core)";
  m.attr("__version__") = "1.0.0";

  py::class_<data::Schema>(m, "Schema",
                           "Column roles and treatments, parsed from the "
                           "schema text format")
      .def_static("parse", &data::Schema::parse, "text"_a,
                  "Parse schema text (one 'name role [key=value...]' line "
                  "per column)")
      .def_static("load", &data::Schema::load, "path"_a,
                  "Read and parse a schema file")
      .def("to_text", &data::Schema::to_text)
      .def("__repr__", [](const data::Schema& s) {
        return "Schema(" + std::to_string(s.columns.size()) + " columns)";
      });

  py::class_<data::Dataset>(m, "Dataset",
                            "Rows loaded against a schema; rows with "
                            "unparseable or missing fields are rejected")
      .def_property_readonly("n",
                             [](const data::Dataset& d) { return d.n; })
      .def_property_readonly(
          "rejected", [](const data::Dataset& d) { return d.rejected; })
      .def_property_readonly(
          "response", [](const data::Dataset& d) { return d.response; })
      .def_property_readonly("columns",
                             [](const data::Dataset& d) {
                               std::vector<std::string> names;
                               for (const auto& c : d.columns)
                                 names.push_back(c.name);
                               return names;
                             })
      .def("__len__",
           [](const data::Dataset& d) { return static_cast<size_t>(d.n); })
      .def("__repr__", [](const data::Dataset& d) {
        return "Dataset(n=" + std::to_string(d.n) +
               ", rejected=" + std::to_string(d.rejected) + ")";
      });

  m.def("load_csv", &data::load_csv, "path"_a, "schema"_a,
        py::call_guard<py::gil_scoped_release>(),
        "Load a CSV file against a schema");
  m.def("parse_csv", &data::parse_csv, "text"_a, "schema"_a,
        py::call_guard<py::gil_scoped_release>(),
        "Parse CSV text against a schema");

  py::class_<pipeline::PipelineModel>(m, "Model",
                                      "A fitted scorecard pipeline")
      .def_property_readonly("design_names",
                             [](const pipeline::PipelineModel& mod) {
                               return mod.glm.names;
                             })
      .def_property_readonly(
          "aic",
          [](const pipeline::PipelineModel& mod) { return mod.glm.aic; })
      .def_property_readonly("deviance",
                             [](const pipeline::PipelineModel& mod) {
                               return mod.glm.deviance;
                             })
      .def_property_readonly(
          "train_n",
          [](const pipeline::PipelineModel& mod) { return mod.train_n; })
      .def_property_readonly("smooth_names",
                             [](const pipeline::PipelineModel& mod) {
                               std::vector<std::string> names;
                               for (const auto& rec : mod.smooths)
                                 names.push_back(rec.name);
                               return names;
                             })
      .def_property_readonly(
          "clusters",
          [](const pipeline::PipelineModel& mod) {
            return mod.tuning.k_selected;
          },
          "Selected cluster/bin count per tuned transform")
      .def(
          "transform",
          [](const pipeline::PipelineModel& mod, const data::Dataset& ds,
             const std::string& unseen) {
            return pipeline::transform(mod, ds, policy_from_name(unseen));
          },
          "dataset"_a, py::kw_only(), "unseen"_a = "overall_logodds",
          "Design matrix of the final logistic model (intercept included)")
      .def(
          "predict",
          [](const pipeline::PipelineModel& mod, const data::Dataset& ds,
             const std::string& unseen) {
            return pipeline::predict(mod, ds, policy_from_name(unseen));
          },
          "dataset"_a, py::kw_only(), "unseen"_a = "overall_logodds",
          "Predicted probabilities")
      .def(
          "evaluate",
          [](const pipeline::PipelineModel& mod, const data::Dataset& ds,
             std::optional<double> severity_ratio, const std::string& unseen) {
            const Eigen::VectorXd p =
                pipeline::predict(mod, ds, policy_from_name(unseen));
            const std::vector<double> pv(p.data(), p.data() + p.size());
            return report_dict(metrics::evaluate_probabilities(
                pv, ds.response, severity_ratio));
          },
          "dataset"_a, py::kw_only(), "severity_ratio"_a = py::none(),
          "unseen"_a = "overall_logodds",
          "Score labeled data: auc, weighted brier and h-measure")
      .def("coefficients",
           [](const pipeline::PipelineModel& mod) {
             py::list rows;
             for (const auto& row : glm::wald_tests(mod.glm)) {
               py::dict d;
               d["term"] = row.name;
               d["estimate"] = row.estimate;
               d["std_error"] = row.se;
               d["z_value"] = row.z;
               d["p_value"] = row.p;
               rows.append(d);
             }
             return rows;
           })
      .def("to_json",
           [](const pipeline::PipelineModel& mod) {
             return pipeline::save_model(mod);
           })
      .def(
          "save",
          [](const pipeline::PipelineModel& mod, const std::string& path) {
            pipeline::save_model_file(path, mod);
          },
          "path"_a)
      .def("__repr__", [](const pipeline::PipelineModel& mod) {
        return "Model(" + std::to_string(mod.glm.names.size()) +
               " design columns, train_n=" + std::to_string(mod.train_n) +
               ")";
      });

  m.def(
      "fit",
      [](const data::Dataset& dataset, const data::Schema& schema,
         const std::string& criterion, int folds, std::uint64_t seed,
         const std::optional<std::vector<double>>& grid_cat,
         const std::optional<std::vector<double>>& grid_unconstrained,
         const std::optional<std::vector<double>>& grid_constrained) {
        const auto options =
            make_options(criterion, folds, seed, grid_cat, grid_unconstrained,
                         grid_constrained);
        py::gil_scoped_release release;
        return tuning::fit_pipeline(dataset, schema, options);
      },
      "dataset"_a, "schema"_a, py::kw_only(), "criterion"_a = "aic",
      "folds"_a = 5, "seed"_a = 0, "grid_cat"_a = py::none(),
      "grid_unconstrained"_a = py::none(), "grid_constrained"_a = py::none(),
      "Fit the full pipeline: WOE maps, smooths, binning and the final "
      "logistic model");

  m.def("load_model", &pipeline::load_model_file, "path"_a,
        "Load a model from a JSON file");
  m.def("load_model_json", &pipeline::load_model, "text"_a,
        "Load a model from a JSON string");

  m.def(
      "cross_validate",
      [](const data::Dataset& dataset, const data::Schema& schema, int folds,
         std::uint64_t seed, const std::string& criterion, int tuning_folds,
         const std::optional<std::vector<double>>& grid_cat,
         const std::optional<std::vector<double>>& grid_unconstrained,
         const std::optional<std::vector<double>>& grid_constrained) {
        const auto options =
            make_options(criterion, tuning_folds, seed, grid_cat,
                         grid_unconstrained, grid_constrained);
        std::vector<tuning::FoldReport> reports;
        {
          py::gil_scoped_release release;
          reports =
              tuning::cross_validate(dataset, schema, folds, seed, options);
        }
        py::list out;
        for (const auto& fr : reports) {
          py::dict d = report_dict(fr.report);
          d["fold"] = fr.fold;
          out.append(d);
        }
        return out;
      },
      "dataset"_a, "schema"_a, py::kw_only(), "folds"_a = 5, "seed"_a = 0,
      "criterion"_a = "aic", "tuning_folds"_a = 5, "grid_cat"_a = py::none(),
      "grid_unconstrained"_a = py::none(), "grid_constrained"_a = py::none(),
      "Refit the whole pipeline per training split; one metrics dict per "
      "held-out fold");

  m.def(
      "auc",
      [](const std::vector<double>& scores, const std::vector<int>& y) {
        return metrics::auc(scores, y);
      },
      "scores"_a, "y"_a, "Mann-Whitney AUC with ties counting one half");
  m.def(
      "weighted_brier",
      [](const std::vector<double>& p, const std::vector<int>& y) {
        return metrics::weighted_brier(p, y);
      },
      "p"_a, "y"_a,
      "Mean squared error with class weights 1/pi0 and 1/pi1");
  m.def(
      "h_measure",
      [](const std::vector<double>& scores, const std::vector<int>& y,
         std::optional<double> severity_ratio) {
        return metrics::h_measure(scores, y, severity_ratio);
      },
      "scores"_a, "y"_a, py::kw_only(), "severity_ratio"_a = py::none(),
      "ROC-hull H-measure under a Beta severity distribution");
  m.def(
      "evaluate",
      [](const std::vector<double>& p, const std::vector<int>& y,
         std::optional<double> severity_ratio) {
        return report_dict(
            metrics::evaluate_probabilities(p, y, severity_ratio));
      },
      "p"_a, "y"_a, py::kw_only(), "severity_ratio"_a = py::none(),
      "All metrics of predicted probabilities against labels");

  m.def(
      "kmeans_weighted",
      [](const std::vector<double>& values, const std::vector<double>& weights,
         int k) {
        const auto part = cluster1d::kmeans_weighted(values, weights, k);
        return py::make_tuple(part.assignment, part.centers, part.wcss);
      },
      "values"_a, "weights"_a, "k"_a,
      "Exact weighted univariate k-means; returns (assignment, centers, "
      "wcss)");
}
