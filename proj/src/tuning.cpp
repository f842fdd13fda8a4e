#include "woesb/tuning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>

#include "woesb/cluster1d.hpp"
#include "woesb/glm.hpp"

namespace woesb::tuning {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

bool nonlinear_role(data::Role role) {
  return role == data::Role::continuous_nonlinear_unconstrained ||
         role == data::Role::continuous_nonlinear_constrained ||
         role == data::Role::continuous_cyclic;
}

std::vector<const data::ColumnSpec*> predictors(const data::Schema& schema) {
  std::vector<const data::ColumnSpec*> out;
  for (const auto& c : schema.columns)
    if (c.role != data::Role::response && c.role != data::Role::ignored)
      out.push_back(&c);
  return out;
}

int distinct_count(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  return static_cast<int>(std::unique(x.begin(), x.end()) - x.begin());
}

bool constant_values(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(),
                            [](double a, double b) { return a != b; }) ==
         v.end();
}

const woe::WoeMap* find_map(
    const std::vector<std::pair<std::string, woe::WoeMap>>& maps,
    const std::string& name) {
  for (const auto& [col, map] : maps)
    if (col == name) return &map;
  return nullptr;
}

// Nonlinear-role columns with too few distinct values to carry a smooth are
// treated as linear from the start.
std::set<std::string> degenerate_smooths(const data::Dataset& ds,
                                         const data::Schema& schema) {
  std::set<std::string> out;
  for (const auto* spec : predictors(schema))
    if (nonlinear_role(spec->role) &&
        distinct_count(ds.column(spec->name).numeric) < 3)
      out.insert(spec->name);
  return out;
}

// GAM term list: smooths for non-demoted nonlinear roles, WOE columns for
// categoricals (skipping maps collapsed to a single value, which would be
// collinear with the intercept), raw columns otherwise.
std::vector<gam::TermInput> gam_terms(
    const data::Dataset& ds, const data::Schema& schema,
    const std::vector<std::pair<std::string, woe::WoeMap>>& maps,
    const std::set<std::string>& demoted) {
  std::vector<gam::TermInput> terms;
  for (const auto* spec : predictors(schema)) {
    const data::Column& col = ds.column(spec->name);
    gam::TermInput t;
    t.name = spec->name;
    if (spec->role == data::Role::categorical) {
      const auto* map = find_map(maps, spec->name);
      if (map == nullptr)
        throw std::logic_error("tuning: no WOE map for column '" +
                               spec->name + "'");
      if (constant_values(map->values)) continue;
      t.x = woe::apply_woe(col.labels, *map,
                           woe::UnseenPolicy::overall_logodds);
    } else if (nonlinear_role(spec->role) && !demoted.contains(spec->name)) {
      t.x = col.numeric;
      t.kind = spec->role == data::Role::continuous_cyclic
                   ? gam::TermKind::cyclic_smooth
                   : gam::TermKind::smooth;
      t.period = spec->period;
      t.q = std::min(10, distinct_count(col.numeric));
    } else {
      t.x = col.numeric;
    }
    terms.push_back(std::move(t));
  }
  return terms;
}

bool any_smooth(const std::vector<gam::TermInput>& terms) {
  return std::any_of(terms.begin(), terms.end(), [](const auto& t) {
    return t.kind != gam::TermKind::linear;
  });
}

// Smoothing selection followed by the fit itself.
gam::GamFit fit_gam_auto(std::span<const int> y,
                         std::vector<gam::TermInput> terms) {
  if (any_smooth(terms)) {
    const auto lambdas = gam::select_smoothing(y, terms);
    std::size_t next = 0;
    for (auto& t : terms)
      if (t.kind != gam::TermKind::linear) t.lambda = lambdas[next++];
  }
  return gam::fit_gam(y, terms);
}

// Evaluation columns for predict_gam, in the fit's term order.
std::vector<std::vector<double>> gam_columns(
    const gam::GamFit& fit, const data::Dataset& ds,
    const std::vector<std::pair<std::string, woe::WoeMap>>& maps) {
  std::vector<std::vector<double>> cols;
  for (const auto& term : fit.terms) {
    const data::Column& col = ds.column(term.name);
    if (col.is_numeric()) {
      cols.push_back(col.numeric);
    } else {
      const auto* map = find_map(maps, term.name);
      if (map == nullptr)
        throw std::logic_error("tuning: no WOE map for column '" + term.name +
                               "'");
      cols.push_back(woe::apply_woe(col.labels, *map,
                                    woe::UnseenPolicy::overall_logodds));
    }
  }
  return cols;
}

double held_out_metric(Criterion criterion, std::span<const double> p,
                       std::span<const int> y) {
  if (criterion == Criterion::auc) return metrics::auc(p, y);
  return metrics::h_measure(p, y);
}

void fold_rows(const data::FoldAssignment& fa, int fold,
               std::vector<int>& train, std::vector<int>& val) {
  train.clear();
  val.clear();
  for (std::size_t i = 0; i < fa.fold_index.size(); ++i) {
    if (fa.fold_index[i] == fold)
      val.push_back(static_cast<int>(i));
    else
      train.push_back(static_cast<int>(i));
  }
}

// Final design column names: every predictor except smooths binned to one
// value and categoricals whose map collapsed to a constant.
std::vector<std::string> design_names(
    const data::Schema& schema,
    const std::vector<std::pair<std::string, woe::WoeMap>>& maps,
    const std::vector<binning::StepFunction>& steps) {
  std::vector<std::string> names{"(Intercept)"};
  for (const auto* spec : predictors(schema)) {
    if (spec->role == data::Role::categorical) {
      const auto* map = find_map(maps, spec->name);
      if (map == nullptr)
        throw std::logic_error("tuning: no WOE map for column '" +
                               spec->name + "'");
      if (!constant_values(map->values)) names.push_back(spec->name);
      continue;
    }
    const binning::StepFunction* step = nullptr;
    for (const auto& s : steps)
      if (s.source == spec->name) step = &s;
    if (step != nullptr && step->K <= 1) continue;
    names.push_back(spec->name);
  }
  return names;
}

std::string join_k_selected(
    const std::vector<std::pair<std::string, int>>& ks) {
  if (ks.empty()) return "NA";
  std::string out;
  for (const auto& [name, k] : ks) {
    if (!out.empty()) out += ';';
    out += name + "=" + std::to_string(k);
  }
  return out;
}

std::string format_or_na(double v) {
  return std::isnan(v) ? "NA" : data::format_double(v);
}

void check_ascending(const std::vector<double>& grid, const char* label) {
  if (grid.empty())
    throw std::invalid_argument(std::string("tuning: ") + label +
                                " grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || grid[i] < 0.0)
      throw std::invalid_argument(std::string("tuning: ") + label +
                                  " grid values must be finite and >= 0");
    if (i > 0 && grid[i] <= grid[i - 1])
      throw std::invalid_argument(std::string("tuning: ") + label +
                                  " grid must be strictly ascending");
  }
}

void check_options(const TuningOptions& options) {
  options.grid.validate();
  if (options.criterion != Criterion::aic && options.folds < 2)
    throw std::invalid_argument(
        "tuning: validation criteria need folds >= 2");
}

}  // namespace

std::vector<double> TuningGrid::default_values() {
  std::vector<double> out;
  for (int i = -10; i <= 2; ++i) out.push_back(std::exp(static_cast<double>(i)));
  return out;
}

void TuningGrid::validate() const {
  check_ascending(lambda_cat, "lambda_cat");
  check_ascending(lambda_unconstrained, "lambda_unconstrained");
  check_ascending(lambda_constrained, "lambda_constrained");
}

std::string criterion_name(Criterion c) {
  switch (c) {
    case Criterion::aic: return "aic";
    case Criterion::auc: return "auc";
    case Criterion::h: return "h";
  }
  throw std::logic_error("tuning: unknown criterion");
}

Criterion criterion_from_name(const std::string& name) {
  if (name == "aic") return Criterion::aic;
  if (name == "auc") return Criterion::auc;
  if (name == "h") return Criterion::h;
  throw std::invalid_argument("tuning: unknown criterion '" + name + "'");
}

std::string trace_tsv(const TuningTrace& trace) {
  std::string out =
      "stage\tcriterion\tlambda_cat\tlambda_unconstrained\t"
      "lambda_constrained\tk_selected\tscore\twall_ms\twinner\n";
  for (const auto& pt : trace.points) {
    out += trace.stage;
    out += '\t';
    out += criterion_name(trace.criterion);
    out += '\t';
    out += format_or_na(pt.lambda_cat);
    out += '\t';
    out += format_or_na(pt.lambda_unconstrained);
    out += '\t';
    out += format_or_na(pt.lambda_constrained);
    out += '\t';
    out += join_k_selected(pt.k_selected);
    out += '\t';
    out += format_or_na(pt.score);
    out += '\t';
    out += data::format_double(pt.wall_ms);
    out += '\t';
    out += pt.winner ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string traces_tsv(std::span<const TuningTrace> traces) {
  std::string out =
      "stage\tcriterion\tlambda_cat\tlambda_unconstrained\t"
      "lambda_constrained\tk_selected\tscore\twall_ms\twinner\n";
  for (const auto& trace : traces) {
    const std::string one = trace_tsv(trace);
    out.append(one, one.find('\n') + 1, std::string::npos);
  }
  return out;
}

CatTuningResult tune_lambda_cat(const data::Dataset& dataset,
                                const data::Schema& schema,
                                const TuningOptions& options) {
  check_options(options);

  CatTuningResult out;
  out.trace.stage = "woe_clustering";
  out.trace.criterion = options.criterion;

  // Fixed maps for raw/shrunk treatments; clustering inputs per cwoe column.
  std::vector<std::pair<std::string, woe::WoeMap>> maps;
  struct CwoeColumn {
    std::string name;
    woe::CategoricalSummary summary;
    woe::ClusterPoints points;
    std::size_t slot = 0;  // position in maps
  };
  std::vector<CwoeColumn> targets;
  for (const auto* spec : predictors(schema)) {
    if (spec->role != data::Role::categorical) continue;
    const data::Column& col = dataset.column(spec->name);
    auto summary = woe::summarize_categories(col.labels, dataset.response);
    switch (spec->treatment) {
      case data::Treatment::woe:
        maps.emplace_back(spec->name, woe::woe_raw(summary));
        break;
      case data::Treatment::swoe:
        maps.emplace_back(spec->name, woe::woe_shrunk(summary));
        break;
      case data::Treatment::cwoe: {
        CwoeColumn target;
        target.name = spec->name;
        target.points = woe::woe_cluster_points(summary);
        target.summary = std::move(summary);
        target.slot = maps.size();
        targets.push_back(std::move(target));
        maps.emplace_back(spec->name, woe::WoeMap{});
        break;
      }
    }
  }
  if (targets.empty()) return out;  // nothing to tune

  std::optional<data::FoldAssignment> fa;
  if (options.criterion != Criterion::aic)
    fa = data::split_folds(dataset, options.folds, options.seed);

  const auto demoted = degenerate_smooths(dataset, schema);
  const double n_rows = static_cast<double>(dataset.n);

  // The selection penalty lives in per-row units (mean wcss + lambda k).
  auto clusters_for = [&](double lambda) {
    std::vector<int> ks;
    ks.reserve(targets.size());
    for (const auto& target : targets) {
      const auto sel = cluster1d::select_k(
          target.points.values, target.points.weights, target.summary.J(),
          lambda * n_rows, cluster1d::Mode::kmeans);
      ks.push_back(sel.k_star);
    }
    return ks;
  };

  auto apply_clusters = [&](const std::vector<int>& ks) {
    for (std::size_t t = 0; t < targets.size(); ++t)
      maps[targets[t].slot].second =
          woe::woe_clustered(targets[t].summary, ks[t]);
  };

  auto score_point = [&](const std::vector<int>& ks) {
    if (options.criterion == Criterion::aic) {
      // The pooled WOE values are estimated from the data, so each cwoe
      // column adds k - 1 parameters beyond its design column (a k = 1
      // collapse drops the column and costs nothing).
      double extra_df = 0.0;
      for (int k : ks) extra_df += k - 1;
      auto terms = gam_terms(dataset, schema, maps, demoted);
      return fit_gam_auto(dataset.response, terms).aic + 2.0 * extra_df;
    }
    // Held-out scoring: the maps stay fixed (built on the full data); the
    // stage model is refit per training split with the full-data smoothing.
    auto full_terms = gam_terms(dataset, schema, maps, demoted);
    std::map<std::string, double> lambda_by_name;
    if (any_smooth(full_terms)) {
      const auto lambdas = gam::select_smoothing(dataset.response, full_terms);
      std::size_t next = 0;
      for (const auto& t : full_terms)
        if (t.kind != gam::TermKind::linear)
          lambda_by_name[t.name] = lambdas[next++];
    }
    std::vector<int> train_rows, val_rows;
    double total = 0.0;
    for (int fold = 1; fold <= fa->folds; ++fold) {
      fold_rows(*fa, fold, train_rows, val_rows);
      const auto train = data::select_rows(dataset, train_rows);
      const auto val = data::select_rows(dataset, val_rows);
      auto terms = gam_terms(train, schema, maps, demoted);
      for (auto& t : terms)
        if (t.kind != gam::TermKind::linear)
          t.lambda = lambda_by_name.at(t.name);
      const auto fit = gam::fit_gam(train.response, terms);
      const auto p = gam::predict_gam(fit, gam_columns(fit, val, maps));
      const std::vector<double> pv(p.data(), p.data() + p.size());
      total += held_out_metric(options.criterion, pv, val.response);
    }
    return -total / fa->folds;
  };

  std::map<std::vector<int>, double> score_cache;
  double best = std::numeric_limits<double>::infinity();
  int best_index = -1;
  for (double lambda : options.grid.lambda_cat) {
    const auto start = Clock::now();
    TracePoint pt;
    pt.lambda_cat = lambda;
    const auto ks = clusters_for(lambda);
    for (std::size_t t = 0; t < targets.size(); ++t)
      pt.k_selected.emplace_back(targets[t].name, ks[t]);
    if (const auto hit = score_cache.find(ks); hit != score_cache.end()) {
      pt.score = hit->second;
    } else {
      apply_clusters(ks);
      pt.score = score_point(ks);
      score_cache.emplace(ks, pt.score);
    }
    pt.wall_ms = elapsed_ms(start);
    if (pt.score < best) {
      best = pt.score;
      best_index = static_cast<int>(out.trace.points.size());
    }
    out.trace.points.push_back(std::move(pt));
  }

  out.trace.winner = best_index;
  out.trace.points[static_cast<std::size_t>(best_index)].winner = true;
  out.lambda_cat = options.grid.lambda_cat[static_cast<std::size_t>(best_index)];
  out.clusters =
      out.trace.points[static_cast<std::size_t>(best_index)].k_selected;
  for (std::size_t t = 0; t < targets.size(); ++t)
    out.maps.emplace_back(
        targets[t].name,
        woe::woe_clustered(targets[t].summary, out.clusters[t].second));
  return out;
}

ContinuousTuningResult tune_lambda_continuous(
    const data::Dataset& dataset, const data::Schema& schema,
    const gam::GamFit& gamfit,
    const std::vector<std::pair<std::string, woe::WoeMap>>& woe_maps,
    const TuningOptions& options) {
  check_options(options);

  ContinuousTuningResult out;
  out.trace.stage = "binning";
  out.trace.criterion = options.criterion;

  struct BinTarget {
    std::string name;
    binning::StepMode mode = binning::StepMode::unconstrained;
    std::vector<double> x, z, var;
    std::vector<double> profile;  // optimal wcss for k = 1..kmax
    std::map<int, binning::StepFunction> step_cache;
  };
  std::vector<BinTarget> targets;
  for (std::size_t i = 0; i < gamfit.terms.size(); ++i) {
    const auto& term = gamfit.terms[i];
    if (term.kind == gam::TermKind::linear) continue;
    const auto* spec = schema.find(term.name);
    if (spec == nullptr || !nonlinear_role(spec->role))
      throw std::invalid_argument(
          "tuning: smooth term '" + term.name +
          "' has no nonlinear schema entry");
    auto record = pipeline::make_smooth_record(gamfit, static_cast<int>(i));
    BinTarget target;
    target.name = term.name;
    target.mode = spec->role == data::Role::continuous_nonlinear_constrained
                      ? binning::StepMode::constrained
                      : binning::StepMode::unconstrained;
    target.x = dataset.column(term.name).numeric;
    record.evaluate(target.x, target.z, target.var);
    target.profile = binning::bin_profile(target.x, target.z, target.var,
                                          target.mode, spec->kmax);
    out.smooths.push_back(std::move(record));
    targets.push_back(std::move(target));
  }
  if (targets.empty()) return out;

  const bool any_unconstrained =
      std::any_of(targets.begin(), targets.end(), [](const auto& t) {
        return t.mode == binning::StepMode::unconstrained;
      });
  const bool any_constrained =
      std::any_of(targets.begin(), targets.end(), [](const auto& t) {
        return t.mode == binning::StepMode::constrained;
      });
  const std::vector<double> uc_grid =
      any_unconstrained ? options.grid.lambda_unconstrained
                        : std::vector<double>{kNaN};
  const std::vector<double> c_grid = any_constrained
                                         ? options.grid.lambda_constrained
                                         : std::vector<double>{kNaN};

  std::optional<data::FoldAssignment> fa;
  if (options.criterion != Criterion::aic)
    fa = data::split_folds(dataset, options.folds, options.seed);

  const double n_rows = static_cast<double>(dataset.n);

  // Penalized profile argmin in per-row units; ties toward fewer bins.
  auto bins_for = [&](double lambda_uc, double lambda_c) {
    std::vector<int> ks;
    ks.reserve(targets.size());
    for (const auto& target : targets) {
      const double lambda =
          target.mode == binning::StepMode::constrained ? lambda_c : lambda_uc;
      const double penalty = lambda * n_rows;
      int k_best = 1;
      double v_best = target.profile[0] + penalty;
      for (std::size_t k = 2; k <= target.profile.size(); ++k) {
        const double v =
            target.profile[k - 1] + penalty * static_cast<double>(k);
        if (v < v_best) {
          v_best = v;
          k_best = static_cast<int>(k);
        }
      }
      ks.push_back(k_best);
    }
    return ks;
  };

  auto steps_for = [&](const std::vector<int>& ks) {
    std::vector<binning::StepFunction> steps;
    steps.reserve(targets.size());
    for (std::size_t t = 0; t < targets.size(); ++t) {
      auto& target = targets[t];
      auto it = target.step_cache.find(ks[t]);
      if (it == target.step_cache.end()) {
        auto step = binning::bin_smooth(target.x, target.z, target.var,
                                        target.mode, ks[t], false, 0.0,
                                        target.name);
        it = target.step_cache.emplace(ks[t], std::move(step)).first;
      }
      steps.push_back(it->second);
    }
    return steps;
  };

  auto scratch_model = [&](std::vector<binning::StepFunction> steps) {
    pipeline::PipelineModel scratch;
    scratch.schema = schema;
    scratch.woe_maps = woe_maps;
    scratch.smooths = out.smooths;
    scratch.glm.names = design_names(schema, woe_maps, steps);
    scratch.steps = std::move(steps);
    return scratch;
  };

  auto score_point = [&](const pipeline::PipelineModel& scratch) {
    if (options.criterion == Criterion::aic) {
      // Each binned term's step values are estimated from the data, so a
      // K-bin step adds K - 1 parameters beyond its design column (a K = 1
      // collapse drops the column and costs nothing).
      double extra_df = 0.0;
      for (const auto& step : scratch.steps) extra_df += step.K - 1;
      const Eigen::MatrixXd X = pipeline::transform(scratch, dataset);
      return glm::fit_glm(X, dataset.response, scratch.glm.names).aic +
             2.0 * extra_df;
    }
    std::vector<int> train_rows, val_rows;
    double total = 0.0;
    for (int fold = 1; fold <= fa->folds; ++fold) {
      fold_rows(*fa, fold, train_rows, val_rows);
      const auto train = data::select_rows(dataset, train_rows);
      const auto val = data::select_rows(dataset, val_rows);
      const Eigen::MatrixXd Xtr = pipeline::transform(scratch, train);
      const auto fit = glm::fit_glm(Xtr, train.response, scratch.glm.names);
      const Eigen::VectorXd p =
          glm::predict_glm(fit, pipeline::transform(scratch, val));
      const std::vector<double> pv(p.data(), p.data() + p.size());
      total += held_out_metric(options.criterion, pv, val.response);
    }
    return -total / fa->folds;
  };

  std::map<std::vector<int>, double> score_cache;
  double best = std::numeric_limits<double>::infinity();
  int best_index = -1;
  for (double lambda_uc : uc_grid) {
    for (double lambda_c : c_grid) {
      const auto start = Clock::now();
      TracePoint pt;
      pt.lambda_unconstrained = lambda_uc;
      pt.lambda_constrained = lambda_c;
      const auto ks = bins_for(lambda_uc, lambda_c);
      const auto steps = steps_for(ks);
      for (std::size_t t = 0; t < targets.size(); ++t)
        pt.k_selected.emplace_back(targets[t].name, steps[t].K);
      if (const auto hit = score_cache.find(ks); hit != score_cache.end()) {
        pt.score = hit->second;
      } else {
        pt.score = score_point(scratch_model(steps));
        score_cache.emplace(ks, pt.score);
      }
      pt.wall_ms = elapsed_ms(start);
      if (pt.score < best) {
        best = pt.score;
        best_index = static_cast<int>(out.trace.points.size());
      }
      out.trace.points.push_back(std::move(pt));
    }
  }

  out.trace.winner = best_index;
  out.trace.points[static_cast<std::size_t>(best_index)].winner = true;
  const auto& won = out.trace.points[static_cast<std::size_t>(best_index)];
  out.lambda_unconstrained = won.lambda_unconstrained;
  out.lambda_constrained = won.lambda_constrained;
  out.bins = won.k_selected;
  out.steps = steps_for(bins_for(won.lambda_unconstrained,
                                 won.lambda_constrained));
  return out;
}

namespace {

template <typename F>
auto run_stage(const char* stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("fit_pipeline stage ") + stage +
                             ": " + e.what());
  }
}

}  // namespace

pipeline::PipelineModel fit_pipeline(const data::Dataset& dataset,
                                     const data::Schema& schema,
                                     const TuningOptions& options,
                                     std::vector<TuningTrace>* traces) {
  check_options(options);
  if (traces) traces->clear();

  pipeline::PipelineModel model;
  model.schema = schema;

  // Stage 1: WOE maps per treatment; cwoe columns tune their cluster count.
  std::vector<std::pair<std::string, woe::WoeMap>> maps;
  run_stage("woe", [&] {
    const bool any_cwoe =
        std::any_of(schema.columns.begin(), schema.columns.end(),
                    [](const data::ColumnSpec& c) {
                      return c.role == data::Role::categorical &&
                             c.treatment == data::Treatment::cwoe;
                    });
    CatTuningResult cat;
    if (any_cwoe) {
      cat = tune_lambda_cat(dataset, schema, options);
      if (traces) traces->push_back(cat.trace);
    }
    for (const auto* spec : predictors(schema)) {
      if (spec->role != data::Role::categorical) continue;
      if (spec->treatment == data::Treatment::cwoe) {
        const auto* map = find_map(cat.maps, spec->name);
        maps.emplace_back(spec->name, *map);
        continue;
      }
      const auto summary = woe::summarize_categories(
          dataset.column(spec->name).labels, dataset.response);
      maps.emplace_back(spec->name,
                        spec->treatment == data::Treatment::swoe
                            ? woe::woe_shrunk(summary)
                            : woe::woe_raw(summary));
    }
    model.tuning.lambda_cat = cat.lambda_cat;
    model.tuning.k_selected = cat.clusters;
  });

  // Stage 2: additive model with automatic smoothing selection.
  std::set<std::string> demoted;
  std::optional<gam::GamFit> gfit;
  run_stage("gam", [&] {
    demoted = degenerate_smooths(dataset, schema);
    auto terms = gam_terms(dataset, schema, maps, demoted);
    if (any_smooth(terms)) gfit = fit_gam_auto(dataset.response, terms);
  });

  // Stage 3: fold effectively linear (non-cyclic) smooths back into linear
  // terms and refit until the shape is stable.
  run_stage("demotion", [&] {
    while (gfit.has_value()) {
      std::vector<std::string> newly;
      for (std::size_t i = 0; i < gfit->terms.size(); ++i)
        if (gfit->terms[i].kind == gam::TermKind::smooth &&
            gam::effectively_linear(*gfit, static_cast<int>(i)))
          newly.push_back(gfit->terms[i].name);
      if (newly.empty()) break;
      demoted.insert(newly.begin(), newly.end());
      auto terms = gam_terms(dataset, schema, maps, demoted);
      if (!any_smooth(terms)) {
        gfit.reset();
        break;
      }
      gfit = fit_gam_auto(dataset.response, terms);
    }
  });

  // Stage 4: bin the surviving smooths.
  run_stage("binning", [&] {
    if (!gfit.has_value()) return;
    auto cont = tune_lambda_continuous(dataset, schema, *gfit, maps, options);
    if (traces) traces->push_back(cont.trace);
    model.tuning.lambda_uc = cont.lambda_unconstrained;
    model.tuning.lambda_c = cont.lambda_constrained;
    for (const auto& kb : cont.bins) model.tuning.k_selected.push_back(kb);
    model.smooths = std::move(cont.smooths);
    model.steps = std::move(cont.steps);
  });
  model.tuning.demoted.assign(demoted.begin(), demoted.end());

  // Stage 5: final logistic fit on the transformed design.
  run_stage("glm", [&] {
    model.woe_maps = std::move(maps);
    model.glm.names = design_names(model.schema, model.woe_maps, model.steps);
    const Eigen::MatrixXd X = pipeline::transform(model, dataset);
    model.glm = glm::fit_glm(X, dataset.response, model.glm.names);
  });

  model.train_n = dataset.n;
  long long positives = 0;
  for (int yi : dataset.response) positives += yi;
  model.pi1 = static_cast<double>(positives) / static_cast<double>(dataset.n);
  model.pi0 = static_cast<double>(dataset.n - positives) /
              static_cast<double>(dataset.n);
  model.timestamp = pipeline::current_timestamp();
  return model;
}

std::vector<FoldReport> cross_validate(const data::Dataset& dataset,
                                       const data::Schema& schema, int folds,
                                       std::uint64_t seed,
                                       const TuningOptions& options) {
  const auto fa = data::split_folds(dataset, folds, seed);
  std::vector<FoldReport> out;
  std::vector<int> train_rows, val_rows;
  for (int fold = 1; fold <= folds; ++fold) {
    fold_rows(fa, fold, train_rows, val_rows);
    const auto train = data::select_rows(dataset, train_rows);
    const auto val = data::select_rows(dataset, val_rows);
    const auto model = fit_pipeline(train, schema, options);
    const Eigen::VectorXd p = pipeline::predict(model, val);
    const std::vector<double> pv(p.data(), p.data() + p.size());
    out.push_back({fold, metrics::evaluate_probabilities(pv, val.response)});
  }
  return out;
}

std::string cv_tsv(const std::vector<FoldReport>& folds) {
  std::string out =
      "fold\tn\tpositives\tpi0\tpi1\tseverity_ratio\tauc\twbrier\th\n";
  for (const auto& fr : folds) {
    const auto& r = fr.report;
    out += std::to_string(fr.fold);
    out += '\t';
    out += std::to_string(r.n);
    out += '\t';
    out += std::to_string(r.positives);
    out += '\t';
    out += data::format_double(r.pi0);
    out += '\t';
    out += data::format_double(r.pi1);
    out += '\t';
    out += data::format_double(r.severity_ratio);
    out += '\t';
    out += data::format_double(r.auc);
    out += '\t';
    out += data::format_double(r.wbrier);
    out += '\t';
    out += data::format_double(r.h);
    out += '\n';
  }
  return out;
}

}  // namespace woesb::tuning
