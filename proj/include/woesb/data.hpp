#ifndef WOESB_DATA_HPP
#define WOESB_DATA_HPP

#include <span>
#include <string>
#include <vector>

namespace woesb::data {

enum class Role {
  response,
  continuous_linear,
  continuous_nonlinear_unconstrained,
  continuous_nonlinear_constrained,
  continuous_cyclic,
  categorical,
  ignored,
};

enum class Treatment { woe, swoe, cwoe };

// Shortest decimal representation that round-trips exactly (std::to_chars).
std::string format_double(double v);

std::string role_name(Role role);
Role role_from_name(const std::string& name);
std::string treatment_name(Treatment t);
Treatment treatment_from_name(const std::string& name);

struct ColumnSpec {
  std::string name;
  Role role = Role::ignored;
  Treatment treatment = Treatment::woe;  // categorical columns only
  double period = 0.0;                   // continuous_cyclic columns only
  int kmax = 10;

  bool operator==(const ColumnSpec&) const = default;
};

// Typed description of a CSV file: one line per column,
//   name role [treatment=...] [period=...] [kmax=...]
// with '#' starting a comment. Exactly one column carries the response role.
struct Schema {
  std::vector<ColumnSpec> columns;

  const ColumnSpec* find(const std::string& name) const;
  const ColumnSpec& response() const;

  static Schema parse(const std::string& text);
  static Schema load(const std::string& path);
  std::string to_text() const;

  bool operator==(const Schema&) const = default;
};

// One ingested predictor column; numeric roles fill `numeric`, categorical
// fills `labels`.
struct Column {
  std::string name;
  Role role = Role::ignored;
  std::vector<double> numeric;
  std::vector<std::string> labels;

  bool is_numeric() const { return role != Role::categorical; }
  bool operator==(const Column&) const = default;
};

// Immutable after construction; safe for concurrent reads.
struct Dataset {
  long long n = 0;
  long long rejected = 0;  // rows dropped for missing values in used columns
  std::string response_name;
  std::vector<int> response;
  std::vector<Column> columns;  // predictors in schema order

  const Column& column(const std::string& name) const;
  bool operator==(const Dataset&) const = default;
};

Dataset parse_csv(const std::string& text, const Schema& schema);
Dataset load_csv(const std::string& path, const Schema& schema);

// Row subset in the given order (for cross-validation splits). The subset
// must still contain both response classes.
Dataset select_rows(const Dataset& dataset, std::span<const int> rows);

// Serializes the used columns; numbers print in shortest round-trip form so
// a reload reproduces the Dataset exactly.
std::string to_csv(const Dataset& dataset);
void write_csv(const std::string& path, const Dataset& dataset);

struct FoldAssignment {
  std::vector<int> fold_index;  // per row, in [1, folds]
  int folds = 0;
  unsigned long long seed = 0;
};

// Stratified assignment: class members are shuffled by the seeded generator
// and dealt round-robin, so fold sizes and per-fold positive counts each
// differ by at most one.
FoldAssignment split_folds(const Dataset& dataset, int folds,
                           unsigned long long seed);

}  // namespace woesb::data

#endif
