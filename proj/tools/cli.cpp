#include "cli.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "woesb/data.hpp"
#include "woesb/glm.hpp"
#include "woesb/metrics.hpp"
#include "woesb/pipeline.hpp"
#include "woesb/tuning.hpp"

namespace woesb::cli {

namespace {

constexpr int kOk = 0;
constexpr int kDataError = 1;
constexpr int kUsageError = 2;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cli: cannot open '" + path + "' for writing");
  f << content;
  f.flush();
  if (!f) throw std::runtime_error("cli: failed writing '" + path + "'");
}

std::string safe_name(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_')
      c = '_';
  return out;
}

woe::UnseenPolicy policy_from_name(const std::string& name) {
  return name == "error" ? woe::UnseenPolicy::error
                         : woe::UnseenPolicy::overall_logodds;
}

// Writes to the path when given, otherwise to the primary output stream.
void emit(const std::string& path, const std::string& content,
          std::ostream& out) {
  if (path.empty())
    out << content;
  else
    write_file(path, content);
}

struct CommonOpts {
  std::string data_path;
  std::string schema_path;
  std::string model_path;
  std::string out_path;
  std::string unseen = "overall_logodds";
  tuning::TuningOptions tuning;
  std::string criterion = "aic";
  int folds = 5;
  std::uint64_t seed = 0;
  std::string trace_path;
  double severity_ratio = 0.0;
  bool severity_set = false;
};

// Usage-level validation of tuning flags, before any data is touched.
int check_tuning(const tuning::TuningOptions& opts, std::ostream& err) {
  try {
    opts.grid.validate();
    if (opts.criterion != tuning::Criterion::aic && opts.folds < 2)
      throw std::invalid_argument(
          "criterion '" + tuning::criterion_name(opts.criterion) +
          "' validates on folds; --folds must be >= 2");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kOk;
}

std::string metrics_tsv(const metrics::MetricReport& r) {
  std::string out = "n\tpositives\tpi0\tpi1\tseverity_ratio\tauc\twbrier\th\n";
  out += std::to_string(r.n);
  out += '\t';
  out += std::to_string(r.positives);
  for (double v : {r.pi0, r.pi1, r.severity_ratio, r.auc, r.wbrier, r.h}) {
    out += '\t';
    out += data::format_double(v);
  }
  out += '\n';
  return out;
}

int cmd_fit(const CommonOpts& o, std::ostream& err) {
  const auto schema = data::Schema::load(o.schema_path);
  const auto dataset = data::load_csv(o.data_path, schema);
  err << "fit: " << dataset.n << " rows (" << dataset.rejected
      << " rejected)\n";
  std::vector<tuning::TuningTrace> traces;
  const auto model = tuning::fit_pipeline(
      dataset, schema, o.tuning, o.trace_path.empty() ? nullptr : &traces);
  pipeline::save_model_file(o.out_path, model);
  if (!o.trace_path.empty())
    write_file(o.trace_path, tuning::traces_tsv(traces));
  err << "fit: " << model.glm.names.size() << " design columns, aic "
      << data::format_double(model.glm.aic) << "\n";
  err << "fit: model written to " << o.out_path << '\n';
  return kOk;
}

int cmd_transform(const CommonOpts& o, std::ostream& out) {
  const auto model = pipeline::load_model_file(o.model_path);
  const auto dataset = data::load_csv(o.data_path, model.schema);
  const Eigen::MatrixXd X =
      pipeline::transform(model, dataset, policy_from_name(o.unseen));
  std::string text;
  for (std::size_t j = 0; j < model.glm.names.size(); ++j) {
    if (j > 0) text += '\t';
    text += model.glm.names[j];
  }
  text += '\n';
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (j > 0) text += '\t';
      text += data::format_double(X(i, j));
    }
    text += '\n';
  }
  emit(o.out_path, text, out);
  return kOk;
}

int cmd_predict(const CommonOpts& o, std::ostream& out) {
  const auto model = pipeline::load_model_file(o.model_path);
  const auto dataset = data::load_csv(o.data_path, model.schema);
  const Eigen::VectorXd p =
      pipeline::predict(model, dataset, policy_from_name(o.unseen));
  std::string text = "p\n";
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    text += data::format_double(p[i]);
    text += '\n';
  }
  emit(o.out_path, text, out);
  return kOk;
}

int cmd_evaluate(const CommonOpts& o, std::ostream& out) {
  const auto model = pipeline::load_model_file(o.model_path);
  const auto dataset = data::load_csv(o.data_path, model.schema);
  const Eigen::VectorXd p =
      pipeline::predict(model, dataset, policy_from_name(o.unseen));
  const std::vector<double> pv(p.data(), p.data() + p.size());
  const auto report = metrics::evaluate_probabilities(
      pv, dataset.response,
      o.severity_set ? std::optional<double>(o.severity_ratio) : std::nullopt);
  emit(o.out_path, metrics_tsv(report), out);
  return kOk;
}

int cmd_cv(const CommonOpts& o, std::ostream& out, std::ostream& err) {
  const auto schema = data::Schema::load(o.schema_path);
  const auto dataset = data::load_csv(o.data_path, schema);
  err << "cv: " << dataset.n << " rows (" << dataset.rejected
      << " rejected), " << o.folds << " folds, seed " << o.seed << '\n';
  const auto reports =
      tuning::cross_validate(dataset, schema, o.folds, o.seed, o.tuning);
  emit(o.out_path, tuning::cv_tsv(reports), out);
  return kOk;
}

int cmd_export_plot(const CommonOpts& o, std::ostream& err) {
  const auto model = pipeline::load_model_file(o.model_path);
  std::filesystem::create_directories(o.out_path);
  int files = 0;

  for (const auto& rec : model.smooths) {
    const auto* step = model.step(rec.name);
    if (!step)
      throw std::runtime_error("cli: smooth term '" + rec.name +
                               "' has no step function");
    const double lo = rec.knots.front();
    const double hi = rec.knots.back();
    const int points = 201;
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i)
      grid[i] = lo + (hi - lo) * i / (points - 1);
    std::vector<double> z, var;
    rec.evaluate(grid, z, var);
    const auto binned = binning::apply_step(*step, grid, z);
    std::string text = "x\tsmooth\tvariance\tbinned\n";
    for (int i = 0; i < points; ++i) {
      text += data::format_double(grid[i]);
      text += '\t';
      text += data::format_double(z[i]);
      text += '\t';
      text += data::format_double(var[i]);
      text += '\t';
      text += data::format_double(binned[i]);
      text += '\n';
    }
    const auto path = std::filesystem::path(o.out_path) /
                      ("smooth_" + safe_name(rec.name) + ".tsv");
    write_file(path.string(), text);
    ++files;
  }

  for (const auto& [name, map] : model.woe_maps) {
    const bool clustered = map.variant == woe::WoeVariant::clustered;
    std::string text = clustered ? "level\twoe\tcluster\n" : "level\twoe\n";
    for (std::size_t i = 0; i < map.levels.size(); ++i) {
      text += map.levels[i];
      text += '\t';
      text += data::format_double(map.values[i]);
      if (clustered) {
        text += '\t';
        text += std::to_string(map.cluster[i]);
      }
      text += '\n';
    }
    const auto path = std::filesystem::path(o.out_path) /
                      ("categorical_" + safe_name(name) + ".tsv");
    write_file(path.string(), text);
    ++files;
  }

  err << "export-plot: " << files << " files written to " << o.out_path
      << '\n';
  return kOk;
}

int cmd_coef(const CommonOpts& o, std::ostream& out) {
  const auto model = pipeline::load_model_file(o.model_path);
  const auto rows = glm::wald_tests(model.glm);
  std::string text = "term\testimate\tstd_error\tz_value\tp_value\n";
  for (const auto& row : rows) {
    text += row.name;
    text += '\t';
    text += data::format_double(row.estimate);
    text += '\t';
    text += data::format_double(row.se);
    text += '\t';
    text += data::format_double(row.z);
    text += '\t';
    text += data::format_double(row.p);
    text += '\n';
  }
  emit(o.out_path, text, out);
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{
      "Interpretable scorecard pipeline: weight-of-evidence encodings, "
      "spline binning and logistic scoring"};
  app.require_subcommand(1);
  CommonOpts o;

  const auto add_tuning_flags = [&](CLI::App* cmd) {
    cmd->add_option("--grid-cat", o.tuning.grid.lambda_cat,
                    "Comma-separated lambda grid for WOE clustering")
        ->delimiter(',');
    cmd->add_option("--grid-uc", o.tuning.grid.lambda_unconstrained,
                    "Comma-separated lambda grid for unconstrained binning")
        ->delimiter(',');
    cmd->add_option("--grid-c", o.tuning.grid.lambda_constrained,
                    "Comma-separated lambda grid for constrained binning")
        ->delimiter(',');
    cmd->add_option("--criterion", o.criterion, "Tuning criterion")
        ->check(CLI::IsMember({"aic", "auc", "h"}));
    cmd->add_option("--seed", o.seed, "Random seed (default 0)");
  };
  const auto add_unseen_flag = [&](CLI::App* cmd) {
    cmd->add_option("--unseen", o.unseen, "Unseen-category policy")
        ->check(CLI::IsMember({"overall_logodds", "error"}));
  };

  auto* fit = app.add_subcommand("fit", "Fit a model from data and a schema");
  fit->add_option("--data", o.data_path, "Training CSV")->required();
  fit->add_option("--schema", o.schema_path, "Schema file")->required();
  fit->add_option("--out", o.out_path, "Model output path")->required();
  fit->add_option("--trace", o.trace_path, "Write the tuning trace TSV here");
  fit->add_option("--folds", o.folds,
                  "Internal validation folds (auc/h criteria)");
  add_tuning_flags(fit);

  auto* transform =
      app.add_subcommand("transform", "Write the model design matrix as TSV");
  transform->add_option("--model", o.model_path, "Model file")->required();
  transform->add_option("--data", o.data_path, "Input CSV")->required();
  transform->add_option("--out", o.out_path, "Output TSV (default stdout)");
  add_unseen_flag(transform);

  auto* predict =
      app.add_subcommand("predict", "Write predicted probabilities as TSV");
  predict->add_option("--model", o.model_path, "Model file")->required();
  predict->add_option("--data", o.data_path, "Input CSV")->required();
  predict->add_option("--out", o.out_path, "Output TSV (default stdout)");
  add_unseen_flag(predict);

  auto* evaluate =
      app.add_subcommand("evaluate", "Score labeled data and print metrics");
  evaluate->add_option("--model", o.model_path, "Model file")->required();
  evaluate->add_option("--data", o.data_path, "Input CSV")->required();
  evaluate->add_option("--out", o.out_path, "Output TSV (default stdout)");
  auto* sr = evaluate->add_option("--severity-ratio", o.severity_ratio,
                                  "H-measure severity ratio (default pi1/pi0)");
  add_unseen_flag(evaluate);

  auto* cv = app.add_subcommand("cv", "Cross-validate the full pipeline");
  cv->add_option("--data", o.data_path, "Training CSV")->required();
  cv->add_option("--schema", o.schema_path, "Schema file")->required();
  cv->add_option("--out", o.out_path, "Output TSV (default stdout)");
  cv->add_option("--folds", o.folds, "Outer fold count")
      ->check(CLI::Range(2, 1000000));
  add_tuning_flags(cv);

  auto* export_plot = app.add_subcommand(
      "export-plot", "Write per-term plot tables into a directory");
  export_plot->add_option("--model", o.model_path, "Model file")->required();
  export_plot->add_option("--out", o.out_path, "Output directory")->required();

  auto* coef =
      app.add_subcommand("coef", "Write the coefficient table as TSV");
  coef->add_option("--model", o.model_path, "Model file")->required();
  coef->add_option("--out", o.out_path, "Output TSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  o.severity_set = sr->count() > 0;
  try {
    o.tuning.criterion = tuning::criterion_from_name(o.criterion);
    o.tuning.folds = o.folds;
    o.tuning.seed = o.seed;
    if (fit->parsed() || cv->parsed()) {
      if (const int rc = check_tuning(o.tuning, err); rc != kOk) return rc;
    }
    if (fit->parsed()) return cmd_fit(o, err);
    if (transform->parsed()) return cmd_transform(o, out);
    if (predict->parsed()) return cmd_predict(o, out);
    if (evaluate->parsed()) return cmd_evaluate(o, out);
    if (cv->parsed()) return cmd_cv(o, out, err);
    if (export_plot->parsed()) return cmd_export_plot(o, err);
    if (coef->parsed()) return cmd_coef(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  err << "error: no subcommand\n";
  return kUsageError;
}

}  // namespace woesb::cli
