#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grbb/dataset.hpp"
#include "grbb/graph.hpp"
#include "grbb/tree.hpp"

namespace grbb {

enum class TrainerKind {
  /// Cost-penalized supervised boosting: trees fit the loss gradient on labeled rows only.
  gbrt,
  /// Trees fit the gradient of loss + (lambda/2) H'LH over all rows.
  lap_gbrt,
  /// Labeled gradients propagated to unlabeled rows through the graph.
  grbb,
};

std::string to_string(TrainerKind kind);
/// Accepts gbrt, lapgbrt / lap_gbrt, grbb.
TrainerKind parse_trainer_kind(const std::string& name);
std::string to_string(ChargingMode mode);
ChargingMode parse_charging_mode(const std::string& name);

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t num_trees = 200;
  int max_depth = 4;
  double mu = 0.0;
  double lambda = 0.01;
  std::size_t neighbor_count = 9;
  KernelSpec kernel;
  MetricSpec metric;
  double ridge = kDefaultRidge;
  ChargingMode charging = ChargingMode::per_ensemble;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on out-of-range hyperparameters.
  void validate() const;
};

/// Additive model H(x) = bias + sum_t eta * h_t(x).
class Ensemble {
 public:
  Ensemble() = default;
  Ensemble(std::vector<RegressionTree> trees, double learning_rate, double bias, TrainerKind kind,
           std::size_t feature_count);

  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  std::size_t size() const noexcept { return trees_.size(); }
  double learning_rate() const noexcept { return learning_rate_; }
  double bias() const noexcept { return bias_; }
  TrainerKind kind() const noexcept { return kind_; }
  std::size_t feature_count() const noexcept { return feature_count_; }

  /// Prediction using the first `tree_limit` trees (all when unset). When a
  /// meter is given, it is charged first-touch feature costs and tree counts.
  double predict(std::span<const double> x, std::optional<std::size_t> tree_limit = std::nullopt,
                 CostMeter* meter = nullptr) const;

  /// Predictions for every row of a matrix.
  Vector predict_rows(const Matrix& features, std::optional<std::size_t> tree_limit = std::nullopt) const;

  void push_back(RegressionTree tree) { trees_.push_back(std::move(tree)); }

 private:
  std::vector<RegressionTree> trees_;
  double learning_rate_ = 0.1;
  double bias_ = 0.0;
  TrainerKind kind_ = TrainerKind::gbrt;
  std::size_t feature_count_ = 0;
};

double predict(const Ensemble& ensemble, std::span<const double> x, std::optional<std::size_t> tree_limit = std::nullopt,
               CostMeter* meter = nullptr);

double sigmoid(double z) noexcept;

/// Sum of logistic losses -[y log s(H) + (1 - y) log(1 - s(H))], overflow-safe.
double logistic_loss(std::span<const double> scores, std::span<const double> labels);

/// d/dH_L of loss + (lambda/2) H'LH over the labeled rows:
/// (s(H_i) - y_i) + lambda (L H)_i for i < n.
Vector labeled_gradient(const Vector& scores_all, std::span<const double> labels, const LaplacianSystem& sys,
                        double lambda);

struct IterationRecord {
  std::size_t iteration = 0;
  double loss = 0.0;
  double laplacian_penalty = 0.0;
  std::size_t features_purchased = 0;
  double wall_ms = 0.0;
};

struct TrainResult {
  Ensemble model;
  std::vector<IterationRecord> log;
  std::vector<std::string> warnings;
};

/// Called after every iteration with the 1-based iteration and the
/// in-sample scores over all rows.
using IterationObserver = std::function<void(std::size_t, const Vector&)>;

/// Trains one of the three boosting variants. The Laplacian is built from
/// the dataset unless `graph` is supplied (it must match the dataset's
/// labeled/unlabeled layout). With no unlabeled rows, lap_gbrt and grbb fall
/// back to gbrt and record a warning.
TrainResult train(const Dataset& ds, const TrainConfig& cfg, TrainerKind kind,
                  const LaplacianSystem* graph = nullptr, const IterationObserver& observer = {});

/// Iteration log as CSV: iteration,loss,laplacian_penalty,features_purchased,wall_ms
void write_iteration_log(const std::vector<IterationRecord>& log, const std::string& path);

}  // namespace grbb
