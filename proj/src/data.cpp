#include "steinflow/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "steinflow/errors.hpp"

namespace steinflow {

namespace {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<Record> split_whitespace_records(const std::string& text) {
  std::vector<Record> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    Record rec{{}, line_no};
    std::string field;
    while (fields >> field) rec.fields.push_back(field);
    if (!rec.fields.empty()) out.push_back(std::move(rec));
  }
  return out;
}

// RFC-4180: quoted fields may contain the delimiter, doubled quotes and
// line breaks.
std::vector<Record> split_delimited_records(const std::string& text, char delim) {
  std::vector<Record> out;
  Record rec;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line_no = 1;
  rec.line = 1;

  auto end_field = [&] {
    rec.fields.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = rec.fields.size() == 1 && trim(rec.fields[0]).empty();
    if (!blank) out.push_back(std::move(rec));
    rec = Record{};
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line_no;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (ch == delim) {
      end_field();
    } else if (ch == '\n') {
      end_record();
      ++line_no;
      rec.line = line_no;
    } else if (ch != '\r') {
      field.push_back(ch);
      if (ch != ' ' && ch != '\t') field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", line_no);
  if (!field.empty() || !rec.fields.empty()) end_record();
  return out;
}

double parse_number(std::string_view raw, std::size_t line) {
  const std::string_view s = trim(raw);
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (s.empty() || ec != std::errc() || ptr != last) {
    throw ParseError("non-numeric cell '" + std::string(s) + "'", line);
  }
  return value;
}

std::size_t resolve_label_column(const CsvSchema& schema, const std::vector<std::string>& header,
                                 std::size_t width) {
  if (const auto* name = std::get_if<std::string>(&schema.label_column)) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (trim(header[c]) == *name) return c;
    }
    throw InputError("label column '" + *name + "' not found in header");
  }
  const long idx = std::get<long>(schema.label_column);
  const long w = static_cast<long>(width);
  const long resolved = idx < 0 ? w + idx : idx;
  if (resolved < 0 || resolved >= w) throw InputError("label column index out of range");
  return static_cast<std::size_t>(resolved);
}

// Maps raw binary labels to {0, 1}.
void map_binary_labels(Vector& targets, const std::vector<std::size_t>& lines,
                       const std::optional<std::pair<double, double>>& declared) {
  if (declared) {
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
      if (targets[i] == declared->first) {
        targets[i] = 0.0;
      } else if (targets[i] == declared->second) {
        targets[i] = 1.0;
      } else {
        throw ParseError("unknown label value " + std::to_string(targets[i]),
                         lines[static_cast<std::size_t>(i)]);
      }
    }
    return;
  }
  std::set<double> seen;
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    seen.insert(targets[i]);
    if (seen.size() > 2) {
      throw ParseError("more than two distinct labels in a binary dataset",
                       lines[static_cast<std::size_t>(i)]);
    }
  }
  if (seen.size() == 1 || (*seen.begin() == 0.0 && *seen.rbegin() == 1.0)) {
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
      if (targets[i] != 0.0 && targets[i] != 1.0) {
        throw ParseError("single-valued binary labels must be 0 or 1",
                         lines[static_cast<std::size_t>(i)]);
      }
    }
    return;
  }
  const double negative = *seen.begin();
  for (Eigen::Index i = 0; i < targets.size(); ++i) targets[i] = targets[i] == negative ? 0.0 : 1.0;
}

ColumnStats stats_of(const Matrix& m) {
  ColumnStats s;
  const double n = static_cast<double>(m.rows());
  s.mean = m.colwise().mean().transpose();
  s.std.resize(m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double var = (m.col(c).array() - s.mean[c]).square().sum() / n;
    s.std[c] = std::sqrt(var);
  }
  return s;
}

double safe_scale(double std) { return std > 0.0 ? std : 1.0; }

}  // namespace

Dataset parse_csv(const std::string& text, const CsvSchema& schema, std::string name) {
  std::vector<Record> records = schema.delimiter == ' ' ? split_whitespace_records(text)
                                                        : split_delimited_records(text, schema.delimiter);
  std::vector<std::string> header;
  std::size_t first = 0;
  if (schema.has_header) {
    if (records.empty()) throw InputError("CSV has no header row");
    header = records.front().fields;
    first = 1;
  }
  if (records.size() <= first) throw InputError("CSV contains no data rows");

  const std::size_t width = schema.has_header ? header.size() : records[first].fields.size();
  if (width < 2) throw ParseError("need at least one feature column and a label", records[first].line);
  const std::size_t label_col = resolve_label_column(schema, header, width);

  const auto rows = static_cast<Eigen::Index>(records.size() - first);
  Dataset out;
  out.name = std::move(name);
  out.kind = schema.kind;
  out.features.resize(rows, static_cast<Eigen::Index>(width - 1));
  out.targets.resize(rows);
  std::vector<std::size_t> lines;
  lines.reserve(static_cast<std::size_t>(rows));

  for (Eigen::Index r = 0; r < rows; ++r) {
    const Record& rec = records[first + static_cast<std::size_t>(r)];
    if (rec.fields.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                           std::to_string(rec.fields.size()),
                       rec.line);
    }
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < width; ++c) {
      const double v = parse_number(rec.fields[c], rec.line);
      if (c == label_col) {
        out.targets[r] = v;
      } else {
        out.features(r, col++) = v;
      }
    }
    lines.push_back(rec.line);
  }

  for (std::size_t c = 0; c < width; ++c) {
    if (c == label_col) continue;
    out.feature_names.push_back(schema.has_header ? std::string(trim(header[c]))
                                                  : "x" + std::to_string(c));
  }
  if (schema.kind == LabelKind::kBinary) map_binary_labels(out.targets, lines, schema.binary_labels);
  return out;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  return parse_csv(read_file(path), schema, path);
}

Dataset parse_libsvm(const std::string& text, LabelKind kind, std::size_t num_features,
                     std::string name) {
  struct Row {
    double label;
    std::vector<std::pair<std::size_t, double>> entries;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::size_t max_index = 0;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream tokens(line);
    std::string tok;
    tokens >> tok;
    Row row{parse_number(tok, line_no), {}, line_no};
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError("expected index:value, got '" + tok + "'", line_no);
      const double idx = parse_number(std::string_view(tok).substr(0, colon), line_no);
      if (idx < 1 || idx != std::floor(idx)) throw ParseError("feature index must be a positive integer", line_no);
      const auto i = static_cast<std::size_t>(idx);
      if (num_features > 0 && i > num_features) throw ParseError("feature index exceeds declared width", line_no);
      max_index = std::max(max_index, i);
      row.entries.emplace_back(i - 1, parse_number(std::string_view(tok).substr(colon + 1), line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("libsvm input contains no rows");

  const std::size_t width = num_features > 0 ? num_features : max_index;
  if (width == 0) throw InputError("libsvm input has no features");
  Dataset out;
  out.name = std::move(name);
  out.kind = kind;
  out.features = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  std::vector<std::size_t> lines;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.targets[static_cast<Eigen::Index>(r)] = rows[r].label;
    for (const auto& [c, v] : rows[r].entries) {
      out.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
    lines.push_back(rows[r].line);
  }
  for (std::size_t c = 0; c < width; ++c) out.feature_names.push_back("x" + std::to_string(c + 1));
  if (kind == LabelKind::kBinary) map_binary_labels(out.targets, lines, std::nullopt);
  return out;
}

Dataset load_libsvm(const std::string& path, LabelKind kind, std::size_t num_features) {
  return parse_libsvm(read_file(path), kind, num_features, path);
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write CSV file: " + path);
  out << std::setprecision(17);
  for (std::size_t c = 0; c < data.num_features(); ++c) {
    out << (c < data.feature_names.size() ? data.feature_names[c] : "x" + std::to_string(c + 1)) << ',';
  }
  out << "label\n";
  for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.features.cols(); ++c) out << data.features(r, c) << ',';
    out << data.targets[r] << '\n';
  }
  if (!out) throw InputError("failed writing CSV file: " + path);
}

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw InputError("uniform_index: bound must be positive");
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return draw % bound;
}

std::vector<std::size_t> permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

Dataset select_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.name = data.name;
  out.kind = data.kind;
  out.feature_names = data.feature_names;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= data.size()) throw InputError("row index out of range");
    out.features.row(static_cast<Eigen::Index>(r)) = data.features.row(static_cast<Eigen::Index>(rows[r]));
    out.targets[static_cast<Eigen::Index>(r)] = data.targets[static_cast<Eigen::Index>(rows[r])];
  }
  return out;
}

Dataset subsample(const Dataset& data, std::size_t count, std::uint64_t seed) {
  if (count >= data.size()) return data;
  if (count == 0) throw InputError("subsample size must be positive");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx = permutation(data.size(), rng);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return select_rows(data, idx);
}

std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec) {
  if (data.size() < 2) throw InputError("split needs at least two rows");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw InputError("train fraction must lie in (0, 1)");
  }
  const auto n_train =
      static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(data.size())));
  if (n_train < 1 || n_train >= data.size()) {
    throw InputError("split leaves an empty train or test part");
  }
  std::mt19937_64 rng(spec.seed);
  const std::vector<std::size_t> order = permutation(data.size(), rng);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return {select_rows(data, train), select_rows(data, test)};
}

ColumnStats column_stats(const Matrix& m) {
  if (m.rows() < 1) throw InputError("column statistics need at least one row");
  return stats_of(m);
}

Matrix apply_stats(const Matrix& m, const ColumnStats& stats) {
  Matrix out = m.rowwise() - stats.mean.transpose();
  for (Eigen::Index c = 0; c < out.cols(); ++c) out.col(c) /= safe_scale(stats.std[c]);
  return out;
}

Matrix unapply_stats(const Matrix& m, const ColumnStats& stats) {
  Matrix out = m;
  for (Eigen::Index c = 0; c < out.cols(); ++c) out.col(c) *= safe_scale(stats.std[c]);
  out.rowwise() += stats.mean.transpose();
  return out;
}

Standardized standardize(const Dataset& train, const Dataset& test) {
  if (train.size() == 0) throw InputError("standardize: training set is empty");
  if (test.num_features() != train.num_features()) {
    throw InputError("standardize: train and test feature widths differ");
  }
  Standardized out{train, test};
  const ColumnStats fstats = column_stats(train.features);
  out.train.features = apply_stats(train.features, fstats);
  out.test.features = apply_stats(test.features, fstats);
  out.train.feature_stats = fstats;
  out.test.feature_stats = fstats;

  if (train.kind == LabelKind::kRegression) {
    const ColumnStats tstats = column_stats(train.targets);
    out.train.targets = apply_stats(train.targets, tstats).col(0);
    out.test.targets = apply_stats(test.targets, tstats).col(0);
    out.train.target_stats = tstats;
    out.test.target_stats = tstats;
  }
  return out;
}

MinibatchStream::MinibatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), rng_(seed) {
  if (batch_size == 0) throw InputError("minibatch size must be positive");
  if (n == 0) throw InputError("minibatch stream needs a nonempty dataset");
  if (batch_size > n) throw InputError("minibatch size exceeds the training set size");
  reshuffle();
}

void MinibatchStream::reshuffle() {
  order_ = permutation(n_, rng_);
  cursor_ = 0;
}

const std::vector<std::size_t>& MinibatchStream::next() {
  if (cursor_ >= n_) {
    reshuffle();
    ++epoch_;
  }
  const std::size_t end = std::min(n_, cursor_ + batch_size_);
  current_.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                  order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return current_;
}

}  // namespace steinflow
