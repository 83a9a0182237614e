#include "grbb/boosting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace grbb {

std::string to_string(TrainerKind kind) {
  switch (kind) {
    case TrainerKind::gbrt:
      return "gbrt";
    case TrainerKind::lap_gbrt:
      return "lapgbrt";
    case TrainerKind::grbb:
      return "grbb";
  }
  return "unknown";
}

TrainerKind parse_trainer_kind(const std::string& name) {
  if (name == "gbrt") return TrainerKind::gbrt;
  if (name == "lapgbrt" || name == "lap_gbrt") return TrainerKind::lap_gbrt;
  if (name == "grbb") return TrainerKind::grbb;
  throw std::invalid_argument("unknown trainer '" + name + "' (expected gbrt, lapgbrt or grbb)");
}

std::string to_string(ChargingMode mode) { return mode == ChargingMode::per_tree ? "tree" : "ensemble"; }

ChargingMode parse_charging_mode(const std::string& name) {
  if (name == "ensemble" || name == "per_ensemble") return ChargingMode::per_ensemble;
  if (name == "tree" || name == "per_tree") return ChargingMode::per_tree;
  throw std::invalid_argument("unknown charging mode '" + name + "' (expected ensemble or tree)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning rate must be positive");
  if (max_depth < 0) throw std::invalid_argument("max_depth must be nonnegative");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("mu must be finite and nonnegative");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and nonnegative");
  if (neighbor_count < 1) throw std::invalid_argument("neighbor count must be at least 1");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw std::invalid_argument("ridge must be finite and nonnegative");
  if (kernel.bandwidth && !(*kernel.bandwidth > 0.0)) throw std::invalid_argument("heat kernel bandwidth must be positive");
}

Ensemble::Ensemble(std::vector<RegressionTree> trees, double learning_rate, double bias, TrainerKind kind,
                   std::size_t feature_count)
    : trees_(std::move(trees)),
      learning_rate_(learning_rate),
      bias_(bias),
      kind_(kind),
      feature_count_(feature_count) {}

double Ensemble::predict(std::span<const double> x, std::optional<std::size_t> tree_limit, CostMeter* meter) const {
  if (x.size() != feature_count_) {
    throw std::invalid_argument("input has " + std::to_string(x.size()) + " features, model expects " +
                                std::to_string(feature_count_));
  }
  const std::size_t limit = tree_limit.value_or(trees_.size());
  if (limit > trees_.size()) {
    throw std::invalid_argument("tree limit " + std::to_string(limit) + " exceeds ensemble size " +
                                std::to_string(trees_.size()));
  }
  double score = bias_;
  for (std::size_t t = 0; t < limit; ++t) {
    const double h = meter != nullptr ? evaluate_tree(trees_[t], x, *meter) : trees_[t].predict(x);
    score += learning_rate_ * h;
  }
  return score;
}

Vector Ensemble::predict_rows(const Matrix& features, std::optional<std::size_t> tree_limit) const {
  Vector out(features.rows());
  std::vector<double> x(static_cast<std::size_t>(features.cols()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    for (Eigen::Index j = 0; j < features.cols(); ++j) x[static_cast<std::size_t>(j)] = features(i, j);
    out(i) = predict(x, tree_limit);
  }
  return out;
}

double predict(const Ensemble& ensemble, std::span<const double> x, std::optional<std::size_t> tree_limit,
               CostMeter* meter) {
  return ensemble.predict(x, tree_limit, meter);
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^z)
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

double logistic_loss(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("logistic_loss: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) total += softplus(scores[i]) - labels[i] * scores[i];
  return total;
}

Vector labeled_gradient(const Vector& scores_all, std::span<const double> labels, const LaplacianSystem& sys,
                        double lambda) {
  const std::size_t n = sys.labeled_count();
  if (static_cast<std::size_t>(scores_all.size()) != sys.size() || labels.size() != n) {
    throw std::invalid_argument("labeled_gradient: dimensions do not match the Laplacian system");
  }
  Vector grad(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) grad(static_cast<Eigen::Index>(i)) = sigmoid(scores_all(static_cast<Eigen::Index>(i))) - labels[i];
  if (lambda != 0.0) grad += lambda * sys.apply(scores_all).head(static_cast<Eigen::Index>(n));
  return grad;
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg, TrainerKind kind, const LaplacianSystem* graph,
                  const IterationObserver& observer) {
  cfg.validate();
  const std::size_t n = ds.labeled_count();
  const std::size_t m = ds.unlabeled_count();
  const std::size_t total = ds.rows();
  const std::size_t d = ds.dims();

  TrainResult result;
  TrainerKind effective = kind;
  if (kind != TrainerKind::gbrt && m == 0) {
    result.warnings.push_back(to_string(kind) + ": no unlabeled rows; training as gbrt");
    effective = TrainerKind::gbrt;
  }

  std::optional<LaplacianSystem> owned_graph;
  const LaplacianSystem* sys = nullptr;
  std::optional<PropagationOperator> propagation;
  if (effective != TrainerKind::gbrt) {
    if (graph != nullptr) {
      if (graph->size() != total || graph->labeled_count() != n) {
        throw std::invalid_argument("supplied Laplacian does not match the dataset layout");
      }
      sys = graph;
    } else {
      owned_graph = build_laplacian(ds, cfg.neighbor_count, cfg.kernel, cfg.metric);
      sys = &*owned_graph;
    }
    if (effective == TrainerKind::grbb) propagation = propagation_operator(*sys, cfg.ridge);
  }

  const std::size_t fit_rows = effective == TrainerKind::gbrt ? n : total;
  const TreeBuilder builder(ds.features(), fit_rows, ds.feature_costs());
  const TreeParams params{cfg.mu, cfg.max_depth, cfg.charging};
  const auto labels = ds.labels();

  Ensemble model({}, cfg.learning_rate, 0.0, kind, d);
  Vector scores = Vector::Zero(static_cast<Eigen::Index>(total));
  std::vector<double> targets(fit_rows);
  std::vector<bool> charged(d, false);
  std::vector<bool> purchased(d, false);
  std::vector<double> x(d);
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t t = 1; t <= cfg.num_trees; ++t) {
    switch (effective) {
      case TrainerKind::gbrt:
        for (std::size_t i = 0; i < n; ++i) targets[i] = labels[i] - sigmoid(scores(static_cast<Eigen::Index>(i)));
        break;
      case TrainerKind::lap_gbrt: {
        const Vector smooth = cfg.lambda != 0.0 ? Vector(cfg.lambda * sys->apply(scores))
                                                : Vector(Vector::Zero(static_cast<Eigen::Index>(total)));
        for (std::size_t i = 0; i < total; ++i) {
          const auto ii = static_cast<Eigen::Index>(i);
          targets[i] = -smooth(ii);
          if (i < n) targets[i] += labels[i] - sigmoid(scores(ii));
        }
        break;
      }
      case TrainerKind::grbb: {
        const Vector grad_l = labeled_gradient(scores, labels, *sys, cfg.lambda);
        const Vector grad_u = propagation->apply(std::span<const double>(grad_l.data(), n));
        for (std::size_t i = 0; i < n; ++i) targets[i] = -grad_l(static_cast<Eigen::Index>(i));
        for (std::size_t j = 0; j < m; ++j) targets[n + j] = -grad_u(static_cast<Eigen::Index>(j));
        break;
      }
    }
    for (std::size_t i = 0; i < fit_rows; ++i) {
      if (!std::isfinite(targets[i])) {
        throw std::runtime_error("non-finite gradient at iteration " + std::to_string(t) + ", row " +
                                 std::to_string(i));
      }
    }

    RegressionTree tree = builder.fit(targets, params, charged);
    if (cfg.charging == ChargingMode::per_ensemble) mark_charged(tree, charged, d);
    mark_charged(tree, purchased, d);

    for (std::size_t i = 0; i < total; ++i) {
      for (std::size_t f = 0; f < d; ++f) {
        x[f] = ds.features()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
      }
      scores(static_cast<Eigen::Index>(i)) += cfg.learning_rate * tree.predict(x);
    }
    model.push_back(std::move(tree));

    IterationRecord record;
    record.iteration = t;
    record.loss = logistic_loss(std::span<const double>(scores.data(), n), labels);
    if (sys != nullptr) record.laplacian_penalty = 0.5 * cfg.lambda * sys->quadratic_form(scores);
    record.features_purchased = static_cast<std::size_t>(std::count(purchased.begin(), purchased.end(), true));
    record.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(record);
    if (observer) observer(t, scores);
  }
  result.model = std::move(model);
  return result;
}

void write_iteration_log(const std::vector<IterationRecord>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "iteration,loss,laplacian_penalty,features_purchased,wall_ms\n";
  for (const auto& r : log) {
    out << r.iteration << ',' << csv::format_double(r.loss) << ',' << csv::format_double(r.laplacian_penalty) << ','
        << r.features_purchased << ',' << csv::format_double(r.wall_ms) << '\n';
  }
}

}  // namespace grbb
