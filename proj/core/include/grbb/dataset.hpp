#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grbb/csv.hpp"

namespace grbb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct LoadOptions {
  std::string label_column = "label";
  std::string query_column = "qid";
  double default_cost = 1.0;
};

/// Labeled and unlabeled inputs with per-feature extraction costs.
///
/// Rows are stored labeled-first: rows [0, n) carry a label in {0, 1} and
/// rows [n, n + m) carry none. Within each block the original file order is
/// kept, and source_rows() maps every internal row back to its file row.
/// Instances are immutable once built.
class Dataset {
 public:
  /// Builds and validates a dataset from rows in file order.
  ///
  /// Labels may be 0/1 or -1/+1 (remapped to 0/1); std::nullopt marks an
  /// unlabeled row. Throws ValidationError on non-finite features, negative
  /// costs, a cost vector of the wrong length, or no labeled rows.
  static Dataset from_rows(Matrix features, const std::vector<std::optional<double>>& labels,
                           std::vector<double> costs,
                           std::optional<std::vector<std::int64_t>> query_ids = std::nullopt,
                           std::vector<std::string> feature_names = {});

  const Matrix& features() const noexcept { return features_; }
  Eigen::Ref<const Eigen::RowVectorXd> row(std::size_t i) const { return features_.row(static_cast<Eigen::Index>(i)); }

  std::size_t labeled_count() const noexcept { return labels_.size(); }
  std::size_t unlabeled_count() const noexcept { return rows() - labeled_count(); }
  std::size_t rows() const noexcept { return static_cast<std::size_t>(features_.rows()); }
  std::size_t dims() const noexcept { return static_cast<std::size_t>(features_.cols()); }

  /// Labels of rows [0, n), each 0.0 or 1.0.
  std::span<const double> labels() const noexcept { return labels_; }
  std::span<const double> feature_costs() const noexcept { return costs_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }

  bool has_query_ids() const noexcept { return !query_ids_.empty(); }
  std::span<const std::int64_t> query_ids() const noexcept { return query_ids_; }

  /// File row of each internal row.
  std::span<const std::size_t> source_rows() const noexcept { return source_rows_; }

  /// Same rows, with labels replaced (internal order, nullopt = unlabeled).
  /// The result is re-sorted labeled-first; source_rows() is preserved.
  Dataset relabeled(const std::vector<std::optional<double>>& labels) const;

  /// Subset of internal rows; labels and source rows carried over.
  Dataset select(std::span<const std::size_t> internal_rows) const;

  /// Order-sensitive FNV-1a hash of dimensions, features, labels and costs.
  std::uint64_t fingerprint() const;

 private:
  Dataset() = default;

  static Dataset build(const Matrix& features, const std::vector<std::optional<double>>& labels,
                       std::vector<double> costs, const std::vector<std::int64_t>& query_ids,
                       std::vector<std::string> names, const std::vector<std::size_t>& source_rows);

  Matrix features_;
  std::vector<double> labels_;
  std::vector<double> costs_;
  std::vector<std::int64_t> query_ids_;
  std::vector<std::size_t> source_rows_;
  std::vector<std::string> names_;
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
  std::uint64_t seed = 0;
};

/// Reads a feature CSV (`label[,qid],f1,...,fd`) and an optional cost file.
Dataset load_dataset(const std::string& features_path, const std::optional<std::string>& costs_path,
                     const LoadOptions& options = {});

/// Cost file: one row of d decimals, or `name,cost` lines covering every feature name.
std::vector<double> load_costs(const std::string& path, const std::vector<std::string>& feature_names);

/// Writes rows back in file order; values use shortest round-trip formatting.
void save_dataset(const Dataset& ds, const std::string& path);
void save_costs(const Dataset& ds, const std::string& path);

/// Keeps `count` labeled rows (or every row of `count` queries when by_query)
/// and turns every other labeled row into an unlabeled one. Deterministic in seed.
Dataset subsample_labeled(const Dataset& ds, std::size_t count, std::uint64_t seed, bool by_query);

/// Reads a split file: whitespace-separated zero-based file row indices.
std::vector<std::size_t> load_split_indices(const std::string& path);

/// Moves the given file rows into a test set; all of them must be labeled.
DatasetSplit split_by_rows(const Dataset& ds, std::span<const std::size_t> test_file_rows);

/// Random labeled test split holding round(fraction * n) labeled rows.
DatasetSplit random_split(const Dataset& ds, double test_fraction, std::uint64_t seed);

}  // namespace grbb
