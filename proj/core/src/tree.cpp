#include "grbb/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace grbb {

double CostMeter::touch(std::size_t feature) {
  if (feature >= extracted_.size()) {
    throw std::out_of_range("feature " + std::to_string(feature) + " has no cost entry");
  }
  if (extracted_[feature]) return 0.0;
  extracted_[feature] = true;
  feature_cost_ += costs_[feature];
  return costs_[feature];
}

RegressionTree RegressionTree::from_nodes(std::vector<TreeNode> nodes, int max_depth) {
  if (nodes.empty()) throw std::invalid_argument("tree needs at least one node");
  const auto count = static_cast<std::int32_t>(nodes.size());
  std::vector<int> parents(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& node = nodes[i];
    if (node.is_leaf()) {
      if (!std::isfinite(node.value)) throw std::invalid_argument("leaf value must be finite");
      continue;
    }
    if (!std::isfinite(node.threshold)) throw std::invalid_argument("split threshold must be finite");
    for (const std::int32_t child : {node.left, node.right}) {
      if (child <= static_cast<std::int32_t>(i) || child >= count) {
        throw std::invalid_argument("node " + std::to_string(i) + " has an invalid child index");
      }
      if (++parents[static_cast<std::size_t>(child)] > 1) throw std::invalid_argument("tree node has two parents");
    }
  }
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (parents[i] != 1) throw std::invalid_argument("node " + std::to_string(i) + " is unreachable");
  }
  RegressionTree tree;
  tree.nodes_ = std::move(nodes);
  tree.max_depth_ = max_depth;
  if (tree.depth() > max_depth) throw std::invalid_argument("tree deeper than its max_depth");
  tree.refresh_used_features();
  return tree;
}

void RegressionTree::refresh_used_features() {
  used_.clear();
  for (const auto& node : nodes_) {
    if (!node.is_leaf()) used_.push_back(static_cast<std::size_t>(node.feature));
  }
  std::sort(used_.begin(), used_.end());
  used_.erase(std::unique(used_.begin(), used_.end()), used_.end());
}

int RegressionTree::depth() const {
  std::function<int(std::size_t)> walk = [&](std::size_t i) -> int {
    const auto& node = nodes_[i];
    if (node.is_leaf()) return 0;
    return 1 + std::max(walk(static_cast<std::size_t>(node.left)), walk(static_cast<std::size_t>(node.right)));
  };
  return walk(0);
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& node) { return node.is_leaf(); }));
}

std::size_t RegressionTree::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto f = static_cast<std::size_t>(nodes_[i].feature);
    if (f >= x.size()) {
      throw std::out_of_range("tree reads feature " + std::to_string(f) + " but input has " +
                              std::to_string(x.size()) + " features");
    }
    i = static_cast<std::size_t>(x[f] < nodes_[i].threshold ? nodes_[i].left : nodes_[i].right);
  }
  return i;
}

double RegressionTree::predict(std::span<const double> x) const { return nodes_[leaf_index(x)].value; }

double evaluate_tree(const RegressionTree& tree, std::span<const double> x, CostMeter& meter) {
  const auto& nodes = tree.nodes();
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto f = static_cast<std::size_t>(nodes[i].feature);
    if (f >= x.size()) {
      throw std::out_of_range("tree reads feature " + std::to_string(f) + " but input has " +
                              std::to_string(x.size()) + " features");
    }
    meter.touch(f);
    i = static_cast<std::size_t>(x[f] < nodes[i].threshold ? nodes[i].left : nodes[i].right);
  }
  meter.count_tree();
  return nodes[i].value;
}

namespace {

struct ScanResult {
  bool found = false;
  double threshold = 0.0;
  double gain = 0.0;
};

double split_threshold(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid > lo ? mid : hi;
}

// Best squared-error split along one feature; `ordered` lists the node's rows
// sorted by that feature's value.
ScanResult scan_feature(const Matrix& features, std::size_t feature, std::span<const std::uint32_t> ordered,
                        std::span<const double> targets, double total_sum) {
  ScanResult best;
  const auto f = static_cast<Eigen::Index>(feature);
  const auto count = static_cast<double>(ordered.size());
  const double parent = total_sum * total_sum / count;
  double left_sum = 0.0;
  for (std::size_t k = 0; k + 1 < ordered.size(); ++k) {
    left_sum += targets[ordered[k]];
    const double lo = features(ordered[k], f);
    const double hi = features(ordered[k + 1], f);
    if (!(lo < hi)) continue;
    const double left_n = static_cast<double>(k + 1);
    const double right_n = count - left_n;
    const double right_sum = total_sum - left_sum;
    const double gain =
        std::max(0.0, left_sum * left_sum / left_n + right_sum * right_sum / right_n - parent);
    if (!best.found || gain > best.gain) {
      best = ScanResult{true, split_threshold(lo, hi), gain};
    }
  }
  return best;
}

}  // namespace

TreeBuilder::TreeBuilder(const Matrix& features, std::size_t row_count, std::span<const double> feature_costs)
    : features_(features), rows_(row_count), costs_(feature_costs.begin(), feature_costs.end()) {
  if (row_count == 0) throw std::invalid_argument("cannot fit a tree on zero rows");
  if (row_count > static_cast<std::size_t>(features.rows())) throw std::invalid_argument("row count exceeds matrix");
  if (costs_.size() != static_cast<std::size_t>(features.cols())) {
    throw std::invalid_argument("feature cost vector length does not match feature count");
  }
  sorted_.resize(costs_.size());
  for (std::size_t f = 0; f < costs_.size(); ++f) {
    auto& order = sorted_[f];
    order.resize(rows_);
    std::iota(order.begin(), order.end(), 0U);
    const auto col = static_cast<Eigen::Index>(f);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return features(a, col) < features(b, col); });
  }
}

SplitCandidate TreeBuilder::best_split(std::span<const double> targets, std::span<const std::size_t> node_rows,
                                       const TreeParams& params, const std::vector<bool>& free_features) const {
  std::vector<bool> member(rows_, false);
  double total = 0.0;
  for (const std::size_t r : node_rows) member.at(r) = true;
  std::vector<std::uint32_t> ordered;
  SplitCandidate best;
  bool found = false;
  for (std::size_t f = 0; f < sorted_.size(); ++f) {
    ordered.clear();
    total = 0.0;
    for (const std::uint32_t r : sorted_[f]) {
      if (member[r]) {
        ordered.push_back(r);
        total += targets[r];
      }
    }
    const auto scan = scan_feature(features_, f, ordered, targets, total);
    if (!scan.found) continue;
    const bool is_free = f < free_features.size() && free_features[f];
    const double penalty = is_free ? 0.0 : params.mu * costs_[f];
    const double net = scan.gain - penalty;
    if (!found || net > best.net_gain) {
      best = SplitCandidate{f, scan.threshold, scan.gain, penalty, net};
      found = true;
    }
  }
  if (!found) best.net_gain = 0.0;
  return best;
}

RegressionTree TreeBuilder::fit(std::span<const double> targets, const TreeParams& params,
                                const std::vector<bool>& charged) const {
  if (targets.size() != rows_) {
    throw std::invalid_argument("expected " + std::to_string(rows_) + " targets, got " +
                                std::to_string(targets.size()));
  }
  for (const double t : targets) {
    if (!std::isfinite(t)) throw std::invalid_argument("tree targets must be finite");
  }
  if (!(params.mu >= 0.0)) throw std::invalid_argument("mu must be nonnegative");
  if (params.max_depth < 0) throw std::invalid_argument("max_depth must be nonnegative");

  const std::size_t d = sorted_.size();
  std::vector<bool> paid(d, false);
  if (params.charging == ChargingMode::per_ensemble) {
    for (std::size_t f = 0; f < d && f < charged.size(); ++f) paid[f] = charged[f];
  }

  auto perm = sorted_;
  std::vector<char> goes_left(rows_, 0);
  RegressionTree tree;
  tree.nodes_.clear();
  tree.max_depth_ = params.max_depth;

  std::function<std::int32_t(std::size_t, std::size_t, int)> grow = [&](std::size_t begin, std::size_t end,
                                                                        int depth) -> std::int32_t {
    const auto index = static_cast<std::int32_t>(tree.nodes_.size());
    tree.nodes_.emplace_back();
    const std::size_t count = end - begin;
    if (depth >= params.max_depth || count < 2) return index;

    const std::span<const std::uint32_t> rows(perm[0].data() + begin, count);
    double total = 0.0;
    bool constant = true;
    const double first = targets[rows[0]];
    for (const std::uint32_t r : rows) {
      total += targets[r];
      constant = constant && targets[r] == first;
    }
    if (constant) return index;

    bool found = false;
    SplitCandidate best;
    for (std::size_t f = 0; f < d; ++f) {
      const std::span<const std::uint32_t> ordered(perm[f].data() + begin, count);
      const auto scan = scan_feature(features_, f, ordered, targets, total);
      if (!scan.found) continue;
      const double penalty = paid[f] ? 0.0 : params.mu * costs_[f];
      const double net = scan.gain - penalty;
      if (!found || net > best.net_gain) {
        best = SplitCandidate{f, scan.threshold, scan.gain, penalty, net};
        found = true;
      }
    }
    if (!found || best.net_gain <= 0.0) return index;

    paid[best.feature_index] = true;
    const auto col = static_cast<Eigen::Index>(best.feature_index);
    std::size_t left_count = 0;
    for (const std::uint32_t r : rows) {
      goes_left[r] = features_(r, col) < best.threshold ? 1 : 0;
      left_count += static_cast<std::size_t>(goes_left[r]);
    }
    for (auto& order : perm) {
      std::stable_partition(order.begin() + static_cast<std::ptrdiff_t>(begin),
                            order.begin() + static_cast<std::ptrdiff_t>(end),
                            [&](std::uint32_t r) { return goes_left[r] != 0; });
    }
    const std::size_t mid = begin + left_count;
    const std::int32_t left = grow(begin, mid, depth + 1);
    const std::int32_t right = grow(mid, end, depth + 1);
    auto& node = tree.nodes_[static_cast<std::size_t>(index)];
    node.feature = static_cast<std::int32_t>(best.feature_index);
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return index;
  };
  grow(0, rows_, 0);

  // Leaf means, accumulated in row order.
  std::vector<double> sums(tree.nodes_.size(), 0.0);
  std::vector<std::size_t> counts(tree.nodes_.size(), 0);
  std::vector<double> x(d);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t f = 0; f < d; ++f) x[f] = features_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f));
    const std::size_t leaf = tree.leaf_index(x);
    sums[leaf] += targets[r];
    ++counts[leaf];
  }
  for (std::size_t i = 0; i < tree.nodes_.size(); ++i) {
    if (tree.nodes_[i].is_leaf() && counts[i] > 0) tree.nodes_[i].value = sums[i] / static_cast<double>(counts[i]);
  }
  tree.refresh_used_features();
  return tree;
}

RegressionTree fit_tree(const Matrix& features, std::span<const double> targets, std::span<const double> costs,
                        double mu, int max_depth, const std::vector<bool>& charged, ChargingMode charging) {
  if (features.rows() == 0 || targets.empty()) throw std::invalid_argument("cannot fit a tree on empty input");
  const TreeBuilder builder(features, static_cast<std::size_t>(features.rows()), costs);
  return builder.fit(targets, TreeParams{mu, max_depth, charging}, charged);
}

void mark_charged(const RegressionTree& tree, std::vector<bool>& charged, std::size_t d) {
  if (charged.size() < d) charged.resize(d, false);
  for (const std::size_t f : tree.used_features()) charged.at(f) = true;
}

}  // namespace grbb
