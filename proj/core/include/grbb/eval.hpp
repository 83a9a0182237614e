#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grbb/boosting.hpp"
#include "grbb/dataset.hpp"

namespace grbb {

struct EvalMetric {
  enum class Kind { accuracy, precision_at_k };
  Kind kind = Kind::accuracy;
  std::size_t k = 5;

  static EvalMetric accuracy() { return {}; }
  static EvalMetric precision(std::size_t k) { return {Kind::precision_at_k, k}; }
};

/// Accepts "accuracy" and "prec@K".
EvalMetric parse_metric(const std::string& name);
std::string to_string(const EvalMetric& metric);

/// Periodic early exit: after every `interval` trees some inputs stop
/// accumulating trees (and feature cost), keeping their current score.
struct ExitPolicy {
  enum class Direction {
    /// Exit inputs whose sigmoid(H) is above `threshold`.
    confident_positive,
    /// Per query, exit documents ranked below the top `keep_per_query`.
    drop_low_ranked,
  };
  std::size_t interval = 10;
  double threshold = 1.0;
  Direction direction = Direction::confident_positive;
  std::size_t keep_per_query = 10;
};

struct CostReport {
  std::vector<double> per_input_feature_cost;
  std::vector<std::size_t> per_input_trees_evaluated;
  double tree_eval_unit_cost = 0.0;
  /// Mean of feature cost + unit cost * trees.
  double mean_total_cost = 0.0;
  double mean_trees_evaluated = 0.0;
};

struct EvalResult {
  double metric_value = 0.0;
  CostReport cost;
  /// Final score per test row (internal order).
  Vector scores;
};

struct EvalOptions {
  EvalMetric metric;
  std::optional<std::size_t> tree_limit;
  std::optional<ExitPolicy> early_exit;
  double tree_eval_unit_cost = 0.0;
};

/// Scores every test row with first-touch cost accounting. Accuracy uses
/// sigmoid(H) >= 0.5. Throws ValidationError if any test row is unlabeled,
/// or if a ranking metric or exit policy needs query ids the data lacks.
EvalResult evaluate(const Ensemble& model, const Dataset& test, const EvalOptions& options);

double accuracy(std::span<const double> scores, std::span<const double> labels);

/// Mean over queries of the number of relevant documents among the top k by
/// score. Ties keep document order. Queries are grouped by id.
double precision_at_k(std::span<const double> scores, std::span<const double> labels,
                      std::span<const std::int64_t> query_ids, std::size_t k);

/// Metric of the prefix model after each tree: entry t-1 uses t trees.
std::vector<double> per_tree_trace(const Ensemble& model, const Dataset& test, const EvalMetric& metric);

/// CSV: trainer,tree_index,metric
void write_trace_csv(const std::string& trainer, const std::vector<double>& trace, const std::string& path);

/// The eleven-value trade-off grid {4^-5, ..., 4^-1, 0, 4^0, ..., 4^4}.
std::vector<double> default_mu_grid();

struct SweepRow {
  TrainerKind trainer = TrainerKind::grbb;
  double mu = 0.0;
  std::uint64_t seed = 0;
  std::size_t labeled_count = 0;
  double mean_cost = 0.0;
  double metric = 0.0;
  double trees = 0.0;
  /// Set when the cell failed; numeric fields are then meaningless.
  std::optional<std::string> error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

struct SweepOptions {
  std::vector<double> mu_grid = default_mu_grid();
  std::vector<std::uint64_t> seeds{1};
  std::vector<TrainerKind> trainers{TrainerKind::grbb};
  /// When set, each seed keeps only this many labeled training rows (or queries).
  std::optional<std::size_t> labeled_count;
  bool by_query = false;
  EvalOptions eval;
};

/// Trains and evaluates every (trainer, seed, mu) cell. A failing cell is
/// recorded with its error and the sweep continues.
SweepResult sweep_mu(const Dataset& train_data, const Dataset& test_data, const TrainConfig& base,
                     const SweepOptions& options);

/// Rows averaged over seeds, one per (trainer, labeled_count, mu); seed is 0 and failed cells are skipped.
SweepResult average_over_seeds(const SweepResult& result);

/// CSV: trainer,mu,seed,labeled_count,mean_cost,metric,trees
void write_curve_csv(const SweepResult& result, const std::string& path);

}  // namespace grbb
