#include "woesb/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace woesb::data {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// RFC 4180 records: comma-separated fields, optional CRLF/LF terminators,
// double quotes wrap fields containing separators and escape as "".
// Unquoted fields are trimmed of surrounding whitespace.
std::vector<std::vector<std::string>> parse_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string raw;
  bool quoted = false;       // the field was ever quoted
  bool in_quotes = false;
  bool any_field = false;

  const auto end_field = [&] {
    record.push_back(quoted ? raw : trim(raw));
    raw.clear();
    quoted = false;
    any_field = true;
  };
  const auto end_record = [&] {
    end_field();
    // A line with nothing on it is not a record.
    if (record.size() > 1 || !record[0].empty()) records.push_back(record);
    record.clear();
    any_field = false;
  };

  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          raw.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        raw.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (trim(raw).empty() && !quoted) {
          in_quotes = true;
          quoted = true;
          raw.clear();
        } else {
          raw.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        // Whitespace trailing a closed quoted field is RFC noise; drop it.
        if (!(quoted && std::isspace(static_cast<unsigned char>(c))))
          raw.push_back(c);
    }
  }
  if (in_quotes) throw std::invalid_argument("csv: unterminated quoted field");
  if (any_field || !raw.empty()) end_record();
  return records;
}

double parse_numeric(const std::string& field, const std::string& col) {
  double v = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() ||
      !std::isfinite(v))
    throw std::invalid_argument("csv: unparseable numeric value '" + field +
                                "' in column '" + col + "'");
  return v;
}

int parse_response(const std::string& field, const std::string& col) {
  const std::string v = lower(field);
  if (v == "0" || v == "false") return 0;
  if (v == "1" || v == "true") return 1;
  throw std::invalid_argument("csv: non-binary response value '" + field +
                              "' in column '" + col + "'");
}

// Quote a field when it would otherwise change under RFC parsing + trim.
std::string csv_quote(const std::string& field) {
  const bool needs =
      field.find_first_of(",\"\r\n") != std::string::npos ||
      (!field.empty() && (std::isspace(static_cast<unsigned char>(field.front())) ||
                          std::isspace(static_cast<unsigned char>(field.back()))));
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string role_name(Role role) {
  switch (role) {
    case Role::response: return "response";
    case Role::continuous_linear: return "continuous_linear";
    case Role::continuous_nonlinear_unconstrained:
      return "continuous_nonlinear_unconstrained";
    case Role::continuous_nonlinear_constrained:
      return "continuous_nonlinear_constrained";
    case Role::continuous_cyclic: return "continuous_cyclic";
    case Role::categorical: return "categorical";
    case Role::ignored: return "ignored";
  }
  throw std::logic_error("unknown role");
}

Role role_from_name(const std::string& name) {
  for (Role r : {Role::response, Role::continuous_linear,
                 Role::continuous_nonlinear_unconstrained,
                 Role::continuous_nonlinear_constrained, Role::continuous_cyclic,
                 Role::categorical, Role::ignored})
    if (role_name(r) == name) return r;
  throw std::invalid_argument("schema: unknown role '" + name + "'");
}

std::string treatment_name(Treatment t) {
  switch (t) {
    case Treatment::woe: return "woe";
    case Treatment::swoe: return "swoe";
    case Treatment::cwoe: return "cwoe";
  }
  throw std::logic_error("unknown treatment");
}

Treatment treatment_from_name(const std::string& name) {
  for (Treatment t : {Treatment::woe, Treatment::swoe, Treatment::cwoe})
    if (treatment_name(t) == name) return t;
  throw std::invalid_argument("schema: unknown treatment '" + name + "'");
}

const ColumnSpec* Schema::find(const std::string& name) const {
  for (const auto& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

const ColumnSpec& Schema::response() const {
  for (const auto& c : columns)
    if (c.role == Role::response) return c;
  throw std::logic_error("schema: no response column");
}

Schema Schema::parse(const std::string& text) {
  Schema schema;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::istringstream tok(line);
    std::string name, role;
    if (!(tok >> name)) continue;
    if (!(tok >> role))
      throw std::invalid_argument("schema: column '" + name +
                                  "' is missing a role");
    ColumnSpec spec;
    spec.name = name;
    spec.role = role_from_name(role);

    bool has_treatment = false, has_period = false;
    std::string opt;
    while (tok >> opt) {
      const auto eq = opt.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("schema: malformed option '" + opt +
                                    "' for column '" + name + "'");
      const std::string key = opt.substr(0, eq);
      const std::string value = opt.substr(eq + 1);
      if (key == "treatment") {
        spec.treatment = treatment_from_name(value);
        has_treatment = true;
      } else if (key == "period") {
        spec.period = parse_numeric(value, name);
        has_period = true;
      } else if (key == "kmax") {
        spec.kmax = static_cast<int>(parse_numeric(value, name));
        if (spec.kmax < 1)
          throw std::invalid_argument("schema: kmax must be positive for '" +
                                      name + "'");
      } else {
        throw std::invalid_argument("schema: unknown option '" + key +
                                    "' for column '" + name + "'");
      }
    }
    if (has_treatment && spec.role != Role::categorical)
      throw std::invalid_argument(
          "schema: treatment only applies to categorical column '" + name +
          "'");
    if (spec.role == Role::continuous_cyclic && !(spec.period > 0.0))
      throw std::invalid_argument("schema: cyclic column '" + name +
                                  "' needs period=...");
    if (has_period && spec.role != Role::continuous_cyclic)
      throw std::invalid_argument(
          "schema: period only applies to cyclic column '" + name + "'");
    schema.columns.push_back(std::move(spec));
  }

  std::unordered_set<std::string> seen;
  int responses = 0;
  for (const auto& c : schema.columns) {
    if (!seen.insert(c.name).second)
      throw std::invalid_argument("schema: duplicate column '" + c.name + "'");
    responses += c.role == Role::response;
  }
  if (responses != 1)
    throw std::invalid_argument("schema: exactly one response column required");
  return schema;
}

Schema Schema::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("schema: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string Schema::to_text() const {
  std::string out;
  for (const auto& c : columns) {
    out += c.name + " " + role_name(c.role);
    if (c.role == Role::categorical)
      out += " treatment=" + treatment_name(c.treatment);
    if (c.role == Role::continuous_cyclic)
      out += " period=" + format_double(c.period);
    if (c.kmax != 10) out += " kmax=" + std::to_string(c.kmax);
    out += "\n";
  }
  return out;
}

const Column& Dataset::column(const std::string& name) const {
  for (const auto& c : columns)
    if (c.name == name) return c;
  throw std::invalid_argument("dataset: no column named '" + name + "'");
}

Dataset parse_csv(const std::string& text, const Schema& schema) {
  const auto records = parse_records(text);
  if (records.empty()) throw std::invalid_argument("csv: empty file");
  const auto& header = records.front();

  std::unordered_map<std::string, size_t> position;
  for (size_t j = 0; j < header.size(); ++j) position.emplace(header[j], j);

  struct Used {
    const ColumnSpec* spec;
    size_t pos;
  };
  std::vector<Used> used;
  for (const auto& spec : schema.columns) {
    if (spec.role == Role::ignored) continue;
    const auto it = position.find(spec.name);
    if (it == position.end())
      throw std::invalid_argument("csv: missing column '" + spec.name + "'");
    used.push_back({&spec, it->second});
  }

  Dataset ds;
  ds.response_name = schema.response().name;
  for (const auto& u : used) {
    if (u.spec->role == Role::response) continue;
    Column col;
    col.name = u.spec->name;
    col.role = u.spec->role;
    ds.columns.push_back(std::move(col));
  }

  for (size_t r = 1; r < records.size(); ++r) {
    const auto& row = records[r];
    if (row.size() != header.size())
      throw std::invalid_argument("csv: row " + std::to_string(r + 1) +
                                  " has " + std::to_string(row.size()) +
                                  " fields, expected " +
                                  std::to_string(header.size()));
    bool missing = false;
    for (const auto& u : used) missing = missing || row[u.pos].empty();
    if (missing) {
      ++ds.rejected;
      continue;
    }
    size_t c = 0;
    for (const auto& u : used) {
      const std::string& field = row[u.pos];
      if (u.spec->role == Role::response) {
        ds.response.push_back(parse_response(field, u.spec->name));
      } else if (u.spec->role == Role::categorical) {
        ds.columns[c++].labels.push_back(field);
      } else {
        ds.columns[c++].numeric.push_back(parse_numeric(field, u.spec->name));
      }
    }
    ++ds.n;
  }

  if (ds.n == 0)
    throw std::invalid_argument("csv: no usable rows (all rejected or empty)");
  const auto ones = std::count(ds.response.begin(), ds.response.end(), 1);
  if (ones == 0 || ones == ds.n)
    throw std::invalid_argument("csv: response must contain both classes");
  return ds;
}

Dataset load_csv(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema);
}

Dataset select_rows(const Dataset& dataset, std::span<const int> rows) {
  Dataset out;
  out.n = static_cast<long long>(rows.size());
  out.response_name = dataset.response_name;
  out.response.reserve(rows.size());
  for (int r : rows) {
    if (r < 0 || r >= dataset.n)
      throw std::invalid_argument("dataset: row index out of range");
    out.response.push_back(dataset.response[r]);
  }
  for (const auto& col : dataset.columns) {
    Column c;
    c.name = col.name;
    c.role = col.role;
    for (int r : rows) {
      if (col.is_numeric())
        c.numeric.push_back(col.numeric[r]);
      else
        c.labels.push_back(col.labels[r]);
    }
    out.columns.push_back(std::move(c));
  }
  const auto ones = std::count(out.response.begin(), out.response.end(), 1);
  if (ones == 0 || ones == out.n)
    throw std::invalid_argument(
        "dataset: row subset must contain both classes");
  return out;
}

std::string to_csv(const Dataset& dataset) {
  std::string out = csv_quote(dataset.response_name);
  for (const auto& col : dataset.columns) out += "," + csv_quote(col.name);
  out += "\n";
  for (long long i = 0; i < dataset.n; ++i) {
    out += dataset.response[i] ? '1' : '0';
    for (const auto& col : dataset.columns) {
      out += ',';
      out += col.is_numeric() ? format_double(col.numeric[i])
                              : csv_quote(col.labels[i]);
    }
    out += "\n";
  }
  return out;
}

void write_csv(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("csv: cannot write '" + path + "'");
  out << to_csv(dataset);
}

FoldAssignment split_folds(const Dataset& dataset, int folds,
                           unsigned long long seed) {
  if (folds < 2) throw std::invalid_argument("folds must be at least 2");
  std::vector<int> pos, neg;
  for (long long i = 0; i < dataset.n; ++i)
    (dataset.response[i] ? pos : neg).push_back(static_cast<int>(i));
  if (folds > static_cast<int>(pos.size()) ||
      folds > static_cast<int>(neg.size()))
    throw std::invalid_argument(
        "folds exceeds the size of the smaller class");

  std::mt19937_64 gen(seed);
  std::shuffle(pos.begin(), pos.end(), gen);
  std::shuffle(neg.begin(), neg.end(), gen);

  FoldAssignment fa;
  fa.folds = folds;
  fa.seed = seed;
  fa.fold_index.assign(dataset.n, 0);
  long long next = 0;
  for (int i : pos) fa.fold_index[i] = static_cast<int>(next++ % folds) + 1;
  for (int i : neg) fa.fold_index[i] = static_cast<int>(next++ % folds) + 1;
  return fa;
}

}  // namespace woesb::data
