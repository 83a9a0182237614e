#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "grbb/dataset.hpp"

namespace grbb {

/// How the feature-cost penalty is charged during split search.
enum class ChargingMode {
  /// A feature bought by any earlier tree of the ensemble is free.
  per_ensemble,
  /// Every tree pays once for each feature it uses.
  per_tree,
};

struct TreeNode {
  /// Split feature, or -1 for a leaf.
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  /// Leaf prediction (unused on internal nodes).
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct SplitCandidate {
  std::size_t feature_index = 0;
  double threshold = 0.0;
  double sse_reduction = 0.0;
  double cost_penalty = 0.0;
  double net_gain = 0.0;
};

/// Per-input test-time cost accumulator: a feature is charged the first
/// time any traversal for this input reads it.
class CostMeter {
 public:
  explicit CostMeter(std::span<const double> feature_costs)
      : costs_(feature_costs), extracted_(feature_costs.size(), false) {}

  /// Charges c[feature] unless already extracted. Returns the amount charged.
  double touch(std::size_t feature);
  void count_tree() noexcept { ++trees_; }

  double feature_cost() const noexcept { return feature_cost_; }
  std::size_t trees_evaluated() const noexcept { return trees_; }
  bool extracted(std::size_t feature) const { return extracted_.at(feature); }

 private:
  std::span<const double> costs_;
  std::vector<bool> extracted_;
  double feature_cost_ = 0.0;
  std::size_t trees_ = 0;
};

/// Depth-limited binary regression tree; `x[f] < threshold` routes left.
class RegressionTree {
 public:
  RegressionTree() : nodes_{TreeNode{}} {}

  /// Validates node links (root at 0, acyclic, in-range children).
  static RegressionTree from_nodes(std::vector<TreeNode> nodes, int max_depth);

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  int max_depth() const noexcept { return max_depth_; }
  int depth() const;
  std::size_t leaf_count() const;

  /// Sorted distinct features referenced by internal nodes.
  const std::vector<std::size_t>& used_features() const noexcept { return used_; }

  double predict(std::span<const double> x) const;

  /// Index of the leaf reached by x.
  std::size_t leaf_index(std::span<const double> x) const;

 private:
  friend class TreeBuilder;
  void refresh_used_features();

  std::vector<TreeNode> nodes_;
  int max_depth_ = 0;
  std::vector<std::size_t> used_;
};

/// Evaluates the tree, charging first-touch feature costs along the path.
/// Also counts one evaluated tree on the meter.
double evaluate_tree(const RegressionTree& tree, std::span<const double> x, CostMeter& meter);

struct TreeParams {
  double mu = 0.0;
  int max_depth = 4;
  ChargingMode charging = ChargingMode::per_ensemble;
};

/// Greedy least-squares tree induction over a fixed feature matrix.
///
/// Columns are presorted once, so repeated fits against new targets (one per
/// boosting iteration) only pay for the split scans. Thresholds are midpoints
/// between consecutive distinct values. A split's gain is the decrease in the
/// node's total squared error, minus mu * c[f] when feature f is not yet paid
/// for; the best net gain wins, ties going to the lower feature and then the
/// lower threshold, and nodes whose best net gain is <= 0 become leaves.
class TreeBuilder {
 public:
  /// Fits on the first `row_count` rows of `features`.
  TreeBuilder(const Matrix& features, std::size_t row_count, std::span<const double> feature_costs);

  std::size_t rows() const noexcept { return rows_; }

  /// `charged` marks features already paid for (ignored under per_tree;
  /// empty means none).
  RegressionTree fit(std::span<const double> targets, const TreeParams& params,
                     const std::vector<bool>& charged = {}) const;

  /// Best split of a node holding `node_rows` (exposed for tests).
  SplitCandidate best_split(std::span<const double> targets, std::span<const std::size_t> node_rows,
                            const TreeParams& params, const std::vector<bool>& free_features) const;

 private:
  struct Frame;

  const Matrix& features_;
  std::size_t rows_;
  std::vector<double> costs_;
  std::vector<std::vector<std::uint32_t>> sorted_;  // per feature, rows by (value, index)
};

/// One-shot fit over all rows of `features`.
RegressionTree fit_tree(const Matrix& features, std::span<const double> targets, std::span<const double> costs,
                        double mu, int max_depth, const std::vector<bool>& charged = {},
                        ChargingMode charging = ChargingMode::per_ensemble);

/// Marks the tree's features in `charged` (resized to d if needed).
void mark_charged(const RegressionTree& tree, std::vector<bool>& charged, std::size_t d);

}  // namespace grbb
