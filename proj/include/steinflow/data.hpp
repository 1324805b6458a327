#pragma once

// Dataset ingestion, train/test splitting, standardization and minibatching.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "steinflow/kernel.hpp"

namespace steinflow {

enum class LabelKind { kRegression, kBinary };

struct ColumnStats {
  Vector mean;
  Vector std;  ///< population standard deviation; 0 for constant columns
};

struct Dataset {
  std::string name;
  Matrix features;
  Vector targets;
  std::vector<std::string> feature_names;
  LabelKind kind = LabelKind::kRegression;

  std::optional<ColumnStats> feature_stats;
  std::optional<ColumnStats> target_stats;

  std::size_t size() const noexcept { return static_cast<std::size_t>(features.rows()); }
  std::size_t num_features() const noexcept { return static_cast<std::size_t>(features.cols()); }
};

struct CsvSchema {
  /// Column holding the label: an index (negative counts from the end) or a
  /// header name.
  std::variant<long, std::string> label_column = -1L;
  /// Field separator; ' ' splits on any run of blanks and tabs.
  char delimiter = ',';
  bool has_header = true;
  LabelKind kind = LabelKind::kRegression;
  /// Binary only: the raw (negative, positive) label values. When unset the
  /// file must contain exactly two distinct labels; the smaller maps to 0.
  std::optional<std::pair<double, double>> binary_labels;
};

/// RFC-4180 style reader. Throws ParseError with the offending line on ragged
/// rows, non-numeric cells or unexpected labels.
Dataset load_csv(const std::string& path, const CsvSchema& schema);
Dataset parse_csv(const std::string& text, const CsvSchema& schema, std::string name = "inline");

/// Sparse "label index:value ..." lines (1-based indices) densified to
/// num_features columns (0 = infer from the largest index).
Dataset load_libsvm(const std::string& path, LabelKind kind, std::size_t num_features = 0);
Dataset parse_libsvm(const std::string& text, LabelKind kind, std::size_t num_features = 0,
                     std::string name = "inline");

/// Writes a dense CSV with a header; the label is the last column.
void write_csv(const Dataset& data, const std::string& path);

/// Uniform integer in [0, bound) from raw 64-bit engine output; independent
/// of the standard library's distribution implementations.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t bound);

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, std::mt19937_64& rng);

Dataset select_rows(const Dataset& data, const std::vector<std::size_t>& rows);

/// Seeded subsample without replacement; returns data unchanged when
/// count >= size.
Dataset subsample(const Dataset& data, std::size_t count, std::uint64_t seed);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

/// Seeded permutation split; the training part gets floor(fraction * n) rows.
std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec);

struct Standardized {
  Dataset train;
  Dataset test;
};

/// Standardizes features (and regression targets) with training statistics;
/// constant columns are centered only. The stats are stored on both outputs.
Standardized standardize(const Dataset& train, const Dataset& test);

ColumnStats column_stats(const Matrix& m);
Matrix apply_stats(const Matrix& m, const ColumnStats& stats);
Matrix unapply_stats(const Matrix& m, const ColumnStats& stats);

/// Shuffled-epoch minibatch indices; the last batch of an epoch may be short.
class MinibatchStream {
 public:
  MinibatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed);

  const std::vector<std::size_t>& next();
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  void reshuffle();

  std::size_t n_;
  std::size_t batch_size_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> current_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

}  // namespace steinflow
