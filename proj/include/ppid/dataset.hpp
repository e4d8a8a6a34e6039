#pragma once

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ppid/common.hpp"
#include "ppid/matrix.hpp"

namespace ppid {

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

struct DatasetSchema {
  std::vector<std::string> feature_columns;
  std::string label_column = "marker";
  char delimiter = ',';

  void validate() const {
    if (feature_columns.empty()) throw ConfigError("schema has no feature columns");
    std::set<std::string> seen;
    for (const auto& c : feature_columns) {
      if (c == label_column)
        throw ConfigError("label column '" + label_column + "' also listed as a feature");
      if (!seen.insert(c).second)
        throw ConfigError("duplicate feature column '" + c + "' in schema");
    }
  }
};

/// Numeric feature table plus per-row labels. Labels are raw scenario tokens
/// as read from the file until map_labels() replaces them with Normal/Attack.
struct LabeledMatrix {
  Matrix values;
  std::vector<std::string> feature_names;
  std::vector<std::string> labels;

  std::size_t row_count() const { return values.rows(); }
  std::size_t feature_count() const { return values.cols(); }

  bool labels_binary() const {
    ClassLabel c{};
    return std::all_of(labels.begin(), labels.end(),
                       [&](const std::string& s) { return try_parse_class_label(s, c); });
  }

  std::vector<ClassLabel> class_labels() const {
    std::vector<ClassLabel> out;
    out.reserve(labels.size());
    for (const auto& s : labels) out.push_back(parse_class_label(s));
    return out;
  }

  bool all_finite() const {
    for (std::size_t r = 0; r < values.rows(); ++r)
      for (double v : values.row(r))
        if (!std::isfinite(v)) return false;
    return true;
  }
};

/// Scenario identifier -> binary class.
struct LabelMap {
  std::map<std::string, ClassLabel> mapping;

  // 37-scenario power-system partition: short-circuit faults (1-6) and line
  // maintenance (13, 14) are natural events, 41 is the no-event scenario,
  // everything else (7-12, 15-30, 35-40) is an intrusion.
  static LabelMap power_system_default() {
    LabelMap m;
    auto add = [&](int lo, int hi, ClassLabel c) {
      for (int s = lo; s <= hi; ++s) m.mapping[std::to_string(s)] = c;
    };
    add(1, 6, ClassLabel::Normal);
    add(13, 14, ClassLabel::Normal);
    add(41, 41, ClassLabel::Normal);
    add(7, 12, ClassLabel::Attack);
    add(15, 30, ClassLabel::Attack);
    add(35, 40, ClassLabel::Attack);
    return m;
  }

  static LabelMap from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open label map file '" + path + "'");
    LabelMap m;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      if (line_no == 1 && t == "scenario,class") continue;  // optional header
      const auto fields = split_fields(t, ',');
      if (fields.size() != 2)
        throw DataError("label map '" + path + "' line " + std::to_string(line_no) +
                        ": expected 'scenario,class'");
      const std::string scenario = trim(fields[0]);
      ClassLabel c{};
      if (!try_parse_class_label(trim(fields[1]), c))
        throw DataError("label map '" + path + "' line " + std::to_string(line_no) +
                        ": class must be Normal or Attack");
      m.mapping[scenario] = c;
    }
    if (m.mapping.empty()) throw DataError("label map '" + path + "' is empty");
    return m;
  }
};

enum class NonfinitePolicy { DropRow, Clamp };

struct PreprocessConfig {
  NonfinitePolicy nonfinite_policy = NonfinitePolicy::Clamp;
  double clamp_sentinel = 1e12;
  bool standardize = true;
  double split_fraction = 0.7;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
      throw ConfigError("split_fraction must lie strictly between 0 and 1");
    if (!(clamp_sentinel > 0.0)) throw ConfigError("clamp_sentinel must be positive");
  }
};

/// Per-feature mean / population stddev captured at standardization time;
/// applying them to the training rows reproduces the standardized matrix
/// bit-for-bit, and unseen rows are transformed identically.
struct StandardizeStats {
  std::vector<double> mean;
  std::vector<double> stddev;          // 0 marks a zero-variance column
  std::vector<std::uint8_t> zero_variance;

  std::size_t size() const { return mean.size(); }

  double apply_one(std::size_t col, double v) const {
    if (zero_variance[col]) return 0.0;
    return (v - mean[col]) / stddev[col];
  }

  Matrix apply(const Matrix& m) const {
    if (m.cols() != size()) throw DataError("standardization stats dimension mismatch");
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c)
        out(r, c) = apply_one(c, m(r, c));
    return out;
  }
};

// ---------------------------------------------------------------------------
// CSV I/O
// ---------------------------------------------------------------------------

namespace detail {

// Full-token numeric parse. Unparseable cells become NaN so sanitize() decides
// their fate; literal Inf/NaN tokens come through as themselves.
inline double parse_cell(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size()) return std::numeric_limits<double>::quiet_NaN();
  return v;
}

inline std::vector<std::string> read_header(std::ifstream& in, const std::string& path,
                                            char delimiter) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("dataset '" + path + "' is empty (no header)");
  auto cols = split_fields(line, delimiter);
  for (auto& c : cols) c = trim(c);
  return cols;
}

}  // namespace detail

/// Builds a schema from the file header: every column except the label column
/// becomes a feature, in header order.
inline DatasetSchema schema_from_header(const std::string& path,
                                        const std::string& label_column = "marker",
                                        char delimiter = ',') {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file '" + path + "'");
  const auto header = detail::read_header(in, path, delimiter);
  DatasetSchema schema;
  schema.label_column = label_column;
  schema.delimiter = delimiter;
  bool saw_label = false;
  for (const auto& c : header) {
    if (c == label_column) { saw_label = true; continue; }
    schema.feature_columns.push_back(c);
  }
  if (!saw_label)
    throw DataError("label column '" + label_column + "' not found in '" + path + "'");
  schema.validate();
  return schema;
}

inline LabeledMatrix load_csv(const std::string& path, const DatasetSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file '" + path + "'");
  const auto header = detail::read_header(in, path, schema.delimiter);

  std::map<std::string, std::size_t> header_index;
  for (std::size_t i = 0; i < header.size(); ++i) header_index.emplace(header[i], i);

  std::vector<std::size_t> feature_idx;
  feature_idx.reserve(schema.feature_columns.size());
  for (const auto& name : schema.feature_columns) {
    const auto it = header_index.find(name);
    if (it == header_index.end())
      throw DataError("column '" + name + "' missing from '" + path + "'");
    feature_idx.push_back(it->second);
  }
  const auto label_it = header_index.find(schema.label_column);
  if (label_it == header_index.end())
    throw DataError("label column '" + schema.label_column + "' missing from '" + path + "'");
  const std::size_t label_idx = label_it->second;

  std::vector<double> flat;
  std::vector<std::string> labels;
  std::string line;
  std::size_t line_no = 1;  // header was line 1
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, schema.delimiter);
    if (fields.size() != header.size())
      throw DataError("row " + std::to_string(line_no) + " of '" + path + "' has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    for (const std::size_t idx : feature_idx) flat.push_back(detail::parse_cell(fields[idx]));
    labels.push_back(trim(fields[label_idx]));
  }
  if (labels.empty()) throw DataError("dataset '" + path + "' contains no data rows");

  LabeledMatrix m;
  m.feature_names = schema.feature_columns;
  m.labels = std::move(labels);
  m.values = Matrix(m.labels.size(), m.feature_names.size());
  std::size_t k = 0;
  for (std::size_t r = 0; r < m.values.rows(); ++r)
    for (std::size_t c = 0; c < m.values.cols(); ++c) m.values(r, c) = flat[k++];
  return m;
}

inline void write_csv(const LabeledMatrix& m, const std::string& path,
                      const std::string& label_column = "marker", char delimiter = ',') {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file '" + path + "'");
  for (const auto& name : m.feature_names) out << name << delimiter;
  out << label_column << "\n";
  for (std::size_t r = 0; r < m.row_count(); ++r) {
    for (std::size_t c = 0; c < m.feature_count(); ++c)
      out << fmt_full(m.values(r, c)) << delimiter;
    out << m.labels[r] << "\n";
  }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

inline LabeledMatrix map_labels(const LabeledMatrix& m, const LabelMap& map) {
  LabeledMatrix out = m;
  for (auto& label : out.labels) {
    auto it = map.mapping.find(label);
    if (it == map.mapping.end()) {
      // tolerate a float rendering of an integer scenario id ("7.0" -> "7")
      char* end = nullptr;
      const double v = std::strtod(label.c_str(), &end);
      if (end == label.c_str() + label.size() && v == std::floor(v))
        it = map.mapping.find(std::to_string(static_cast<long long>(v)));
      if (it == map.mapping.end())
        throw DataError("scenario identifier '" + label + "' not present in label map");
    }
    label = to_string(it->second);
  }
  return out;
}

inline LabeledMatrix sanitize(const LabeledMatrix& m, NonfinitePolicy policy,
                              double clamp_sentinel = 1e12) {
  LabeledMatrix out;
  out.feature_names = m.feature_names;

  if (policy == NonfinitePolicy::DropRow) {
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < m.row_count(); ++r) {
      bool finite = true;
      for (double v : m.values.row(r))
        if (!std::isfinite(v)) { finite = false; break; }
      if (finite) keep.push_back(r);
    }
    if (keep.empty()) throw DataError("sanitize dropped every row; dataset is empty");
    out.values = Matrix(keep.size(), m.feature_count());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      const auto src = m.values.row(keep[i]);
      std::copy(src.begin(), src.end(), out.values.row(i).begin());
      out.labels.push_back(m.labels[keep[i]]);
    }
    return out;
  }

  // Clamp: +-inf -> +-sentinel, NaN -> column median of finite values
  std::vector<double> medians(m.feature_count(), 0.0);
  for (std::size_t c = 0; c < m.feature_count(); ++c) {
    std::vector<double> finite;
    for (std::size_t r = 0; r < m.row_count(); ++r) {
      const double v = m.values(r, c);
      if (std::isfinite(v)) finite.push_back(v);
    }
    if (finite.empty()) continue;  // all-NaN column falls back to 0
    std::sort(finite.begin(), finite.end());
    const std::size_t n = finite.size();
    medians[c] = (n % 2 == 1) ? finite[n / 2] : 0.5 * (finite[n / 2 - 1] + finite[n / 2]);
  }
  out.labels = m.labels;
  out.values = Matrix(m.row_count(), m.feature_count());
  for (std::size_t r = 0; r < m.row_count(); ++r) {
    for (std::size_t c = 0; c < m.feature_count(); ++c) {
      const double v = m.values(r, c);
      if (std::isfinite(v)) out.values(r, c) = v;
      else if (std::isnan(v)) out.values(r, c) = medians[c];
      else out.values(r, c) = v > 0 ? clamp_sentinel : -clamp_sentinel;
    }
  }
  return out;
}

inline std::pair<LabeledMatrix, StandardizeStats> standardize(const LabeledMatrix& m) {
  if (!m.all_finite()) throw DataError("standardize requires a sanitized (all-finite) matrix");
  const std::size_t n = m.row_count();
  StandardizeStats stats;
  stats.mean.resize(m.feature_count());
  stats.stddev.resize(m.feature_count());
  stats.zero_variance.resize(m.feature_count());
  for (std::size_t c = 0; c < m.feature_count(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) sum += m.values(r, c);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = m.values(r, c) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));  // population stddev
    stats.mean[c] = mean;
    stats.stddev[c] = sd;
    stats.zero_variance[c] = sd == 0.0 ? 1 : 0;
  }
  LabeledMatrix out;
  out.feature_names = m.feature_names;
  out.labels = m.labels;
  out.values = stats.apply(m.values);
  return {std::move(out), std::move(stats)};
}

/// Stratified split, deterministic per seed. Per class: round(fraction * n)
/// training rows, clamped so both sides keep at least one row. Original row
/// order is preserved within each side.
inline std::pair<LabeledMatrix, LabeledMatrix> split(const LabeledMatrix& m,
                                                     double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ConfigError("split fraction must lie strictly between 0 and 1");

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t r = 0; r < m.row_count(); ++r) by_class[m.labels[r]].push_back(r);

  Rng rng(seed);
  std::vector<std::size_t> train_rows, test_rows;
  for (auto& [label, rows] : by_class) {
    if (rows.size() < 2)
      throw DataError("class '" + label + "' has fewer than 2 rows; cannot split");
    auto shuffled = rows;
    rng.shuffle(shuffled);
    const auto want = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(rows.size())));
    const std::size_t n_train = std::clamp<std::size_t>(want, 1, rows.size() - 1);
    train_rows.insert(train_rows.end(), shuffled.begin(), shuffled.begin() + n_train);
    test_rows.insert(test_rows.end(), shuffled.begin() + n_train, shuffled.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());

  auto take = [&](const std::vector<std::size_t>& rows) {
    LabeledMatrix out;
    out.feature_names = m.feature_names;
    out.values = Matrix(rows.size(), m.feature_count());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto src = m.values.row(rows[i]);
      std::copy(src.begin(), src.end(), out.values.row(i).begin());
      out.labels.push_back(m.labels[rows[i]]);
    }
    return out;
  };
  return {take(train_rows), take(test_rows)};
}

struct SynthClassSpec {
  std::string label;
  std::size_t count = 0;
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// Independent Gaussians per class, deterministic per seed. Feature names are
/// f1..fd.
inline LabeledMatrix synth_generate(const std::vector<SynthClassSpec>& specs,
                                    std::uint64_t seed) {
  if (specs.empty()) throw ConfigError("synthetic spec has no classes");
  const std::size_t dim = specs.front().mean.size();
  if (dim == 0) throw ConfigError("synthetic spec has zero dimensions");
  std::size_t total = 0;
  for (const auto& s : specs) {
    if (s.mean.size() != dim || s.stddev.size() != dim)
      throw ConfigError("synthetic spec dimension mismatch for class '" + s.label + "'");
    for (double sd : s.stddev)
      if (!(sd > 0.0))
        throw ConfigError("synthetic spec stddev must be positive for class '" + s.label + "'");
    total += s.count;
  }
  if (total == 0) throw ConfigError("synthetic spec generates zero rows");

  LabeledMatrix m;
  for (std::size_t d = 0; d < dim; ++d) m.feature_names.push_back("f" + std::to_string(d + 1));
  m.values = Matrix(total, dim);
  m.labels.reserve(total);
  Rng rng(seed);
  std::size_t r = 0;
  for (const auto& s : specs) {
    for (std::size_t i = 0; i < s.count; ++i, ++r) {
      for (std::size_t d = 0; d < dim; ++d)
        m.values(r, d) = s.mean[d] + s.stddev[d] * rng.normal();
      m.labels.push_back(s.label);
    }
  }
  return m;
}

}  // namespace ppid
