#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "testdata.hpp"
#include "testutil.hpp"
#include "woesb/data.hpp"
#include "woesb/pipeline.hpp"

using namespace woesb;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

RunResult run(std::initializer_list<std::string> args) {
  std::vector<std::string> full{"woesb"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& s : full) argv.push_back(s.c_str());
  std::ostringstream out, err;
  RunResult r;
  r.code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> fields_of(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

// Shared on-disk fixture: a fraud-style training file, its schema, and a
// model fitted through the CLI itself (singleton grids keep it fast).
struct CliEnv {
  std::filesystem::path dir;
  std::string data_csv;
  std::string schema_file;
  std::string model_file;
  data::Schema schema;
  data::Dataset dataset;
  pipeline::PipelineModel model;

  ~CliEnv() {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }
};

const CliEnv& fraud_env() {
  static CliEnv env = [] {
    CliEnv e;
    e.dir = std::filesystem::temp_directory_path() /
            ("woesb_cli_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(e.dir);

    auto g = testutil::rng(2026);
    const auto frame = testdata::gen_fraud(g, 600, -2.0, 1.6, 1.1, 0.9);
    e.schema = testdata::fraud_schema("continuous_nonlinear_constrained",
                                      "continuous_cyclic", "cwoe");
    const std::string schema_text = e.schema.to_text();
    e.dataset = testdata::fraud_dataset(e.schema, frame);

    e.data_csv = (e.dir / "train.csv").string();
    e.schema_file = (e.dir / "schema.txt").string();
    e.model_file = (e.dir / "model.json").string();
    data::write_csv(e.data_csv, e.dataset);
    std::ofstream(e.schema_file) << schema_text;

    const auto r = run({"fit", "--data", e.data_csv, "--schema",
                        e.schema_file, "--out", e.model_file, "--grid-cat",
                        "0.005", "--grid-uc", "0.002", "--grid-c", "0.002"});
    REQUIRE(r.code == 0);
    e.model = pipeline::load_model_file(e.model_file);
    return e;
  }();
  return env;
}

// Small separable fixture: the fitted model ranks classes perfectly.
struct SeparableEnv {
  std::filesystem::path dir;
  std::string data_csv;
  std::string schema_file;
  std::string model_file;

  ~SeparableEnv() {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }
};

const SeparableEnv& separable_env() {
  static SeparableEnv env = [] {
    SeparableEnv e;
    e.dir = std::filesystem::temp_directory_path() /
            ("woesb_cli_sep_" + std::to_string(::getpid()));
    std::filesystem::create_directories(e.dir);

    const auto schema_text = std::string("y response\nx continuous_linear\n");
    const auto schema = data::Schema::parse(schema_text);
    const int n = 80;
    std::vector<int> y(n);
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) {
      y[i] = i % 2;
      x[i] = y[i] ? 5.0 : -5.0;
    }
    const auto ds = testdata::make_dataset(schema, y, {{"x", x}}, {});

    e.data_csv = (e.dir / "train.csv").string();
    e.schema_file = (e.dir / "schema.txt").string();
    e.model_file = (e.dir / "model.json").string();
    data::write_csv(e.data_csv, ds);
    std::ofstream(e.schema_file) << schema_text;

    const auto r = run({"fit", "--data", e.data_csv, "--schema",
                        e.schema_file, "--out", e.model_file});
    REQUIRE(r.code == 0);
    return e;
  }();
  return env;
}

}  // namespace

TEST_CASE("cli: fit writes a loadable model and logs to stderr") {
  const auto& env = fraud_env();
  CHECK(std::filesystem::exists(env.model_file));
  CHECK(env.model.glm.names.front() == "(Intercept)");
  CHECK(env.model.woe_maps.size() == 1);
  CHECK(env.model.smooths.size() == 2);
  CHECK(env.model.steps.size() == 2);

  // Refitting into a second file produces byte-identical artifacts.
  const auto copy = (env.dir / "model2.json").string();
  const auto r = run({"fit", "--data", env.data_csv, "--schema",
                      env.schema_file, "--out", copy, "--grid-cat", "0.005",
                      "--grid-uc", "0.002", "--grid-c", "0.002"});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("rows") != std::string::npos);
  CHECK(r.out.empty());
  CHECK(slurp(copy) == slurp(env.model_file));
}

TEST_CASE("cli: predict on training data reproduces in-sample fits") {
  const auto& env = fraud_env();
  const auto pred_file = (env.dir / "pred.tsv").string();
  const auto r = run({"predict", "--model", env.model_file, "--data",
                      env.data_csv, "--out", pred_file});
  REQUIRE(r.code == 0);

  const auto lines = lines_of(slurp(pred_file));
  REQUIRE(lines.size() == static_cast<std::size_t>(env.dataset.n) + 1);
  CHECK(lines[0] == "p");

  const Eigen::VectorXd expected = pipeline::predict(env.model, env.dataset);
  for (Eigen::Index i = 0; i < expected.size(); ++i)
    CHECK(lines[static_cast<std::size_t>(i) + 1] ==
          data::format_double(expected[i]));
}

TEST_CASE("cli: transform emits the design matrix with a header") {
  const auto& env = fraud_env();
  const auto r = run(
      {"transform", "--model", env.model_file, "--data", env.data_csv});
  REQUIRE(r.code == 0);

  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == static_cast<std::size_t>(env.dataset.n) + 1);
  std::string header = env.model.glm.names[0];
  for (std::size_t j = 1; j < env.model.glm.names.size(); ++j)
    header += "\t" + env.model.glm.names[j];
  CHECK(lines[0] == header);
  const auto row = fields_of(lines[1]);
  REQUIRE(row.size() == env.model.glm.names.size());
  CHECK(row[0] == "1");
}

TEST_CASE("cli: evaluate on a perfect model prints auc=1 and h=1") {
  const auto& env = separable_env();
  const auto r =
      run({"evaluate", "--model", env.model_file, "--data", env.data_csv});
  REQUIRE(r.code == 0);

  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "n\tpositives\tpi0\tpi1\tseverity_ratio\tauc\twbrier\th");
  const auto row = fields_of(lines[1]);
  REQUIRE(row.size() == 8);
  CHECK(row[0] == "80");
  CHECK(row[1] == "40");
  CHECK(row[5] == "1");  // auc
  CHECK(row[7] == "1");  // h

  // An explicit severity ratio is passed through to the report.
  const auto r2 = run({"evaluate", "--model", env.model_file, "--data",
                       env.data_csv, "--severity-ratio", "2"});
  REQUIRE(r2.code == 0);
  CHECK(fields_of(lines_of(r2.out)[1])[4] == "2");
}

TEST_CASE("cli: cv with a fixed seed writes identical files") {
  const auto& env = separable_env();
  const auto f1 = (env.dir / "cv1.tsv").string();
  const auto f2 = (env.dir / "cv2.tsv").string();
  REQUIRE(run({"cv", "--data", env.data_csv, "--schema", env.schema_file,
               "--out", f1, "--folds", "3", "--seed", "7"})
              .code == 0);
  REQUIRE(run({"cv", "--data", env.data_csv, "--schema", env.schema_file,
               "--out", f2, "--folds", "3", "--seed", "7"})
              .code == 0);
  const auto text = slurp(f1);
  CHECK(text == slurp(f2));

  const auto lines = lines_of(text);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] ==
        "fold\tn\tpositives\tpi0\tpi1\tseverity_ratio\tauc\twbrier\th");
  CHECK(fields_of(lines[1])[0] == "1");
  CHECK(fields_of(lines[3])[0] == "3");
}

TEST_CASE("cli: coef lists one row per design column") {
  const auto& env = fraud_env();
  const auto r = run({"coef", "--model", env.model_file});
  REQUIRE(r.code == 0);

  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == env.model.glm.names.size() + 1);
  CHECK(lines[0] == "term\testimate\tstd_error\tz_value\tp_value");
  const auto row = fields_of(lines[1]);
  REQUIRE(row.size() == 5);
  CHECK(row[0] == "(Intercept)");
  CHECK(row[1] == data::format_double(env.model.glm.beta[0]));
}

TEST_CASE("cli: export-plot writes per-term tables") {
  const auto& env = fraud_env();
  const auto plot_dir = env.dir / "plots";
  const auto r = run({"export-plot", "--model", env.model_file, "--out",
                      plot_dir.string()});
  REQUIRE(r.code == 0);

  for (const auto& rec : env.model.smooths) {
    const auto path = plot_dir / ("smooth_" + rec.name + ".tsv");
    REQUIRE(std::filesystem::exists(path));
    const auto lines = lines_of(slurp(path));
    REQUIRE(lines.size() == 202);
    CHECK(lines[0] == "x\tsmooth\tvariance\tbinned");

    // Binned values come from the step function's bin table.
    const auto* step = env.model.step(rec.name);
    REQUIRE(step != nullptr);
    std::set<std::string> allowed;
    for (double v : step->values) allowed.insert(data::format_double(v));
    for (std::size_t i = 1; i < lines.size(); ++i)
      CHECK(allowed.count(fields_of(lines[i])[3]) == 1);
  }

  const auto cat_path = plot_dir / "categorical_country.tsv";
  REQUIRE(std::filesystem::exists(cat_path));
  const auto cat_lines = lines_of(slurp(cat_path));
  CHECK(cat_lines[0] == "level\twoe\tcluster");
  const auto& map = env.model.woe_maps[0].second;
  REQUIRE(cat_lines.size() == map.levels.size() + 1);
  CHECK(fields_of(cat_lines[1])[0] == map.levels[0]);
}

TEST_CASE("cli: fit --trace writes the tuning trace for both stages") {
  const auto& env = fraud_env();
  const auto model2 = (env.dir / "model_traced.json").string();
  const auto trace_file = (env.dir / "trace.tsv").string();
  const auto r = run({"fit", "--data", env.data_csv, "--schema",
                      env.schema_file, "--out", model2, "--trace", trace_file,
                      "--grid-cat", "0.005", "--grid-uc", "0.002", "--grid-c",
                      "0.002"});
  REQUIRE(r.code == 0);

  const auto lines = lines_of(slurp(trace_file));
  REQUIRE(lines.size() == 3);  // header + one singleton point per stage
  CHECK(lines[0] ==
        "stage\tcriterion\tlambda_cat\tlambda_unconstrained\t"
        "lambda_constrained\tk_selected\tscore\twall_ms\twinner");
  CHECK(fields_of(lines[1])[0] == "woe_clustering");
  CHECK(fields_of(lines[2])[0] == "binning");
  CHECK(fields_of(lines[1])[8] == "1");
  CHECK(fields_of(lines[2])[8] == "1");
}

TEST_CASE("cli: unseen categories follow the requested policy") {
  const auto& env = fraud_env();

  // One row with a country level the training data cannot contain.
  auto ds = data::select_rows(env.dataset, std::vector<int>{0, 1, 2, 3});
  for (auto& col : ds.columns)
    if (col.name == "country") col.labels[0] = "ZZ_unseen";
  const auto probe_csv = (env.dir / "probe.csv").string();
  data::write_csv(probe_csv, ds);

  const auto ok = run(
      {"transform", "--model", env.model_file, "--data", probe_csv});
  REQUIRE(ok.code == 0);
  const auto lines = lines_of(ok.out);
  const auto header = fields_of(lines[0]);
  std::size_t country_col = 0;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == "country") country_col = j;
  REQUIRE(country_col > 0);
  CHECK(fields_of(lines[1])[country_col] ==
        data::format_double(env.model.woe_maps[0].second.unseen_value));

  const auto bad = run({"transform", "--model", env.model_file, "--data",
                        probe_csv, "--unseen", "error"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("error") != std::string::npos);
}

TEST_CASE("cli: exit codes distinguish usage and data errors") {
  const auto& env = separable_env();

  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"fit", "--data", env.data_csv}).code == 2);  // missing required
  CHECK(run({"fit", "--data", env.data_csv, "--schema", env.schema_file,
             "--out", (env.dir / "m.json").string(), "--criterion", "gini"})
            .code == 2);
  CHECK(run({"cv", "--data", env.data_csv, "--schema", env.schema_file,
             "--folds", "1"})
            .code == 2);

  // Descending grid is a usage error, caught before any data is read.
  const auto grid = run({"fit", "--data", env.data_csv, "--schema",
                         env.schema_file, "--out",
                         (env.dir / "m.json").string(), "--grid-uc",
                         "0.2,0.1"});
  CHECK(grid.code == 2);
  CHECK(grid.err.find("ascending") != std::string::npos);

  CHECK(run({"predict", "--model", (env.dir / "nope.json").string(),
             "--data", env.data_csv})
            .code == 1);
  CHECK(run({"fit", "--data", (env.dir / "nope.csv").string(), "--schema",
             env.schema_file, "--out", (env.dir / "m.json").string()})
            .code == 1);

  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("fit") != std::string::npos);
  CHECK(help.out.find("export-plot") != std::string::npos);
}
