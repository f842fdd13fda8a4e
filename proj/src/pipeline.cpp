#include "woesb/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace woesb::pipeline {

using ordered_json = nlohmann::ordered_json;

splines::SmoothBasis SmoothRecord::basis() const {
  return splines::SmoothBasis::from_knots(knots, kind, period);
}

void SmoothRecord::evaluate(std::span<const double> x, std::vector<double>& z,
                            std::vector<double>& var) const {
  const auto b = basis();
  const Eigen::MatrixXd B = b.design_value(x);
  const Eigen::VectorXd fitted = B * beta_value;
  const Eigen::VectorXd pointwise =
      (B * cov_value).cwiseProduct(B).rowwise().sum();
  z.assign(fitted.data(), fitted.data() + fitted.size());
  var.assign(pointwise.data(), pointwise.data() + pointwise.size());
}

SmoothRecord make_smooth_record(const gam::GamFit& fit, int term_index) {
  const auto& term = fit.terms.at(static_cast<std::size_t>(term_index));
  if (!term.basis.has_value())
    throw std::invalid_argument("model: term '" + term.name +
                                "' is not a smooth term");
  SmoothRecord rec;
  rec.name = term.name;
  rec.kind = term.basis->kind();
  rec.period = term.basis->period();
  rec.knots = term.basis->knots();
  const Eigen::MatrixXd& Z = term.basis->centering();
  const Eigen::VectorXd beta_c = fit.beta.segment(term.col_start, term.col_count);
  const Eigen::MatrixXd cov_c =
      fit.covariance.block(term.col_start, term.col_start, term.col_count,
                           term.col_count);
  rec.beta_value = Z * beta_c;
  rec.cov_value = Z * cov_c * Z.transpose();
  rec.lambda = term.lambda;
  rec.edf = term.edf;
  return rec;
}

const woe::WoeMap* PipelineModel::woe_map(const std::string& name) const {
  for (const auto& [col, map] : woe_maps)
    if (col == name) return &map;
  return nullptr;
}

const SmoothRecord* PipelineModel::smooth(const std::string& name) const {
  for (const auto& s : smooths)
    if (s.name == name) return &s;
  return nullptr;
}

const binning::StepFunction* PipelineModel::step(
    const std::string& name) const {
  for (const auto& s : steps)
    if (s.source == name) return &s;
  return nullptr;
}

Eigen::MatrixXd transform(const PipelineModel& model,
                          const data::Dataset& dataset,
                          woe::UnseenPolicy policy) {
  const auto& names = model.glm.names;
  if (names.empty())
    throw std::invalid_argument("transform: model has no fitted coefficients");
  const auto n = static_cast<Eigen::Index>(dataset.n);
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const std::string& name = names[j];
    const auto col_index = static_cast<Eigen::Index>(j);
    if (name == "(Intercept)") {
      X.col(col_index).setOnes();
      continue;
    }
    const data::Column& col = dataset.column(name);
    std::vector<double> values;
    if (const auto* step = model.step(name)) {
      std::vector<double> z;
      if (step->mode == binning::StepMode::unconstrained) {
        const auto* record = model.smooth(name);
        if (record == nullptr)
          throw std::runtime_error("transform: step function for '" + name +
                                   "' is missing its smooth record");
        std::vector<double> var;
        record->evaluate(col.numeric, z, var);
      }
      values = binning::apply_step(*step, col.numeric, z);
    } else if (const auto* map = model.woe_map(name)) {
      values = woe::apply_woe(col.labels, *map, policy);
    } else if (model.smooth(name) != nullptr) {
      throw std::runtime_error("transform: smooth term '" + name +
                               "' has no step function");
    } else {
      if (!col.is_numeric())
        throw std::runtime_error("transform: categorical column '" + name +
                                 "' has no WOE map");
      values = col.numeric;
    }
    for (Eigen::Index i = 0; i < n; ++i)
      X(i, col_index) = values[static_cast<std::size_t>(i)];
  }
  return X;
}

Eigen::VectorXd predict(const PipelineModel& model,
                        const data::Dataset& dataset,
                        woe::UnseenPolicy policy) {
  return glm::predict_glm(model.glm, transform(model, dataset, policy));
}

namespace {

const char* variant_text(woe::WoeVariant v) {
  switch (v) {
    case woe::WoeVariant::raw: return "raw";
    case woe::WoeVariant::shrunk: return "shrunk";
    case woe::WoeVariant::clustered: return "clustered";
  }
  throw std::logic_error("model: unknown WOE variant");
}

woe::WoeVariant variant_from_text(const std::string& s) {
  if (s == "raw") return woe::WoeVariant::raw;
  if (s == "shrunk") return woe::WoeVariant::shrunk;
  if (s == "clustered") return woe::WoeVariant::clustered;
  throw std::runtime_error("model: unknown WOE variant '" + s + "'");
}

const char* kind_text(splines::Kind k) {
  return k == splines::Kind::cyclic ? "cyclic" : "cubic";
}

splines::Kind kind_from_text(const std::string& s) {
  if (s == "cubic") return splines::Kind::cubic;
  if (s == "cyclic") return splines::Kind::cyclic;
  throw std::runtime_error("model: unknown smooth kind '" + s + "'");
}

const char* mode_text(binning::StepMode m) {
  return m == binning::StepMode::constrained ? "constrained" : "unconstrained";
}

binning::StepMode mode_from_text(const std::string& s) {
  if (s == "constrained") return binning::StepMode::constrained;
  if (s == "unconstrained") return binning::StepMode::unconstrained;
  throw std::runtime_error("model: unknown step mode '" + s + "'");
}

ordered_json vec_json(const Eigen::VectorXd& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd json_vec(const ordered_json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& e : j) v(i++) = e.get<double>();
  return v;
}

ordered_json mat_json(const Eigen::MatrixXd& m) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd json_mat(const ordered_json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index r = 0;
  for (const auto& row : j) {
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw std::runtime_error("model: ragged matrix in JSON");
    Eigen::Index c = 0;
    for (const auto& e : row) m(r, c++) = e.get<double>();
    ++r;
  }
  return m;
}

ordered_json optional_number(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

double number_or_nan(const ordered_json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

}  // namespace

std::string save_model(const PipelineModel& model) {
  ordered_json j;
  j["version"] = model.version;

  j["schema"] = ordered_json::array();
  for (const auto& col : model.schema.columns) {
    ordered_json c;
    c["name"] = col.name;
    c["role"] = data::role_name(col.role);
    c["treatment"] = data::treatment_name(col.treatment);
    c["period"] = col.period;
    c["kmax"] = col.kmax;
    j["schema"].push_back(std::move(c));
  }

  j["woe_maps"] = ordered_json::array();
  for (const auto& [name, map] : model.woe_maps) {
    ordered_json m;
    m["name"] = name;
    m["variant"] = variant_text(map.variant);
    m["c"] = map.c;
    m["unseen_value"] = map.unseen_value;
    m["levels"] = map.levels;
    m["values"] = map.values;
    m["cluster"] = map.cluster;
    j["woe_maps"].push_back(std::move(m));
  }

  j["smooths"] = ordered_json::array();
  for (const auto& s : model.smooths) {
    ordered_json m;
    m["name"] = s.name;
    m["kind"] = kind_text(s.kind);
    m["period"] = s.period;
    m["knots"] = s.knots;
    m["beta"] = vec_json(s.beta_value);
    m["covariance"] = mat_json(s.cov_value);
    m["lambda"] = s.lambda;
    m["edf"] = s.edf;
    j["smooths"].push_back(std::move(m));
  }

  j["steps"] = ordered_json::array();
  for (const auto& s : model.steps) {
    ordered_json m;
    m["name"] = s.source;
    m["mode"] = mode_text(s.mode);
    m["k"] = s.K;
    m["values"] = s.values;
    m["breakpoints"] = s.breakpoints;
    m["z_edges"] = s.z_edges;
    m["cyclic"] = s.cyclic;
    m["period"] = s.period;
    j["steps"].push_back(std::move(m));
  }

  {
    ordered_json g;
    g["names"] = model.glm.names;
    g["beta"] = vec_json(model.glm.beta);
    g["covariance"] = mat_json(model.glm.covariance);
    g["deviance"] = model.glm.deviance;
    g["aic"] = model.glm.aic;
    g["converged"] = model.glm.converged;
    g["iterations"] = model.glm.iterations;
    g["warnings"] = model.glm.warnings;
    j["glm"] = std::move(g);
  }

  {
    ordered_json t;
    t["lambda_cat"] = optional_number(model.tuning.lambda_cat);
    t["lambda_unconstrained"] = optional_number(model.tuning.lambda_uc);
    t["lambda_constrained"] = optional_number(model.tuning.lambda_c);
    ordered_json ks = ordered_json::object();
    for (const auto& [name, k] : model.tuning.k_selected) ks[name] = k;
    t["k_selected"] = std::move(ks);
    t["demoted"] = model.tuning.demoted;
    j["tuning"] = std::move(t);
  }

  {
    ordered_json m;
    m["n"] = model.train_n;
    m["pi0"] = model.pi0;
    m["pi1"] = model.pi1;
    m["timestamp"] = model.timestamp;
    j["meta"] = std::move(m);
  }

  return j.dump(2) + "\n";
}

PipelineModel load_model(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("model: invalid JSON: ") + e.what());
  }
  if (!j.contains("version") || !j["version"].is_number_integer())
    throw std::runtime_error("model: missing version field");
  const int version = j["version"].get<int>();
  if (version != 1)
    throw std::runtime_error("model: unsupported version " +
                             std::to_string(version));

  PipelineModel model;
  model.version = version;

  for (const auto& c : j.at("schema")) {
    data::ColumnSpec spec;
    spec.name = c.at("name").get<std::string>();
    spec.role = data::role_from_name(c.at("role").get<std::string>());
    spec.treatment =
        data::treatment_from_name(c.at("treatment").get<std::string>());
    spec.period = c.at("period").get<double>();
    spec.kmax = c.at("kmax").get<int>();
    model.schema.columns.push_back(std::move(spec));
  }

  for (const auto& m : j.at("woe_maps")) {
    woe::WoeMap map;
    map.variant = variant_from_text(m.at("variant").get<std::string>());
    map.c = m.at("c").get<double>();
    map.unseen_value = m.at("unseen_value").get<double>();
    map.levels = m.at("levels").get<std::vector<std::string>>();
    map.values = m.at("values").get<std::vector<double>>();
    map.cluster = m.at("cluster").get<std::vector<int>>();
    model.woe_maps.emplace_back(m.at("name").get<std::string>(),
                                std::move(map));
  }

  for (const auto& m : j.at("smooths")) {
    SmoothRecord s;
    s.name = m.at("name").get<std::string>();
    s.kind = kind_from_text(m.at("kind").get<std::string>());
    s.period = m.at("period").get<double>();
    s.knots = m.at("knots").get<std::vector<double>>();
    s.beta_value = json_vec(m.at("beta"));
    s.cov_value = json_mat(m.at("covariance"));
    s.lambda = m.at("lambda").get<double>();
    s.edf = m.at("edf").get<double>();
    model.smooths.push_back(std::move(s));
  }

  for (const auto& m : j.at("steps")) {
    binning::StepFunction s;
    s.source = m.at("name").get<std::string>();
    s.mode = mode_from_text(m.at("mode").get<std::string>());
    s.K = m.at("k").get<int>();
    s.values = m.at("values").get<std::vector<double>>();
    s.breakpoints = m.at("breakpoints").get<std::vector<double>>();
    s.z_edges = m.at("z_edges").get<std::vector<double>>();
    s.cyclic = m.at("cyclic").get<bool>();
    s.period = m.at("period").get<double>();
    model.steps.push_back(std::move(s));
  }

  {
    const auto& g = j.at("glm");
    model.glm.names = g.at("names").get<std::vector<std::string>>();
    model.glm.beta = json_vec(g.at("beta"));
    model.glm.covariance = json_mat(g.at("covariance"));
    model.glm.deviance = g.at("deviance").get<double>();
    model.glm.aic = g.at("aic").get<double>();
    model.glm.converged = g.at("converged").get<bool>();
    model.glm.iterations = g.at("iterations").get<int>();
    model.glm.warnings = g.at("warnings").get<std::vector<std::string>>();
  }

  {
    const auto& t = j.at("tuning");
    model.tuning.lambda_cat = number_or_nan(t.at("lambda_cat"));
    model.tuning.lambda_uc = number_or_nan(t.at("lambda_unconstrained"));
    model.tuning.lambda_c = number_or_nan(t.at("lambda_constrained"));
    for (const auto& [name, k] : t.at("k_selected").items())
      model.tuning.k_selected.emplace_back(name, k.get<int>());
    model.tuning.demoted = t.at("demoted").get<std::vector<std::string>>();
  }

  {
    const auto& m = j.at("meta");
    model.train_n = m.at("n").get<long long>();
    model.pi0 = m.at("pi0").get<double>();
    model.pi1 = m.at("pi1").get<double>();
    model.timestamp = m.at("timestamp").get<std::string>();
  }

  return model;
}

void save_model_file(const std::string& path, const PipelineModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("model: cannot open '" + path + "'");
  const std::string text = save_model(model);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("model: failed writing '" + path + "'");
}

PipelineModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("model: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) throw std::runtime_error("model: failed reading '" + path + "'");
  return load_model(text);
}

std::string current_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    long long v = 0;
    const char* end = env + std::strlen(env);
    auto [p, ec] = std::from_chars(env, end, v);
    if (ec == std::errc{} && p == end) t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace woesb::pipeline
