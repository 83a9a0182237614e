#include "grbb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace grbb {
namespace {

// Groups row indices by query id, queries in first-seen order.
std::vector<std::vector<std::size_t>> group_by_query(std::span<const std::int64_t> query_ids) {
  std::vector<std::vector<std::size_t>> groups;
  std::map<std::int64_t, std::size_t> slot;
  for (std::size_t i = 0; i < query_ids.size(); ++i) {
    const auto [it, inserted] = slot.emplace(query_ids[i], groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

// Ranks by (tier desc, score desc, index asc); tiers let exited documents sort below survivors.
double precision_with_tiers(std::span<const double> scores, std::span<const std::size_t> tiers,
                            std::span<const double> labels, std::span<const std::int64_t> query_ids, std::size_t k) {
  if (scores.size() != labels.size() || scores.size() != query_ids.size()) {
    throw std::invalid_argument("precision_at_k: length mismatch");
  }
  const auto groups = group_by_query(query_ids);
  if (groups.empty()) throw std::invalid_argument("precision_at_k: no queries");
  double total = 0.0;
  for (auto docs : groups) {
    std::stable_sort(docs.begin(), docs.end(), [&](std::size_t a, std::size_t b) {
      const std::size_t ta = tiers.empty() ? 0 : tiers[a];
      const std::size_t tb = tiers.empty() ? 0 : tiers[b];
      if (ta != tb) return ta > tb;
      return scores[a] > scores[b];
    });
    const std::size_t top = std::min(k, docs.size());
    for (std::size_t r = 0; r < top; ++r) total += labels[docs[r]] == 1.0 ? 1.0 : 0.0;
  }
  return total / static_cast<double>(groups.size());
}

double metric_value(const EvalMetric& metric, std::span<const double> scores, std::span<const std::size_t> tiers,
                    const Dataset& test) {
  if (metric.kind == EvalMetric::Kind::accuracy) return accuracy(scores, test.labels());
  if (!test.has_query_ids()) throw ValidationError("precision@k needs query ids in the test data");
  return precision_with_tiers(scores, tiers, test.labels(), test.query_ids(), metric.k);
}

std::vector<double> row_vector(const Dataset& ds, std::size_t i) {
  std::vector<double> x(ds.dims());
  for (std::size_t f = 0; f < ds.dims(); ++f) x[f] = ds.features()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
  return x;
}

void require_labeled(const Dataset& test) {
  if (test.unlabeled_count() != 0) {
    throw ValidationError("test data has " + std::to_string(test.unlabeled_count()) +
                          " unlabeled rows; every test row needs a label");
  }
}

}  // namespace

EvalMetric parse_metric(const std::string& name) {
  if (name == "accuracy") return EvalMetric::accuracy();
  const std::string prefix = "prec@";
  if (name.rfind(prefix, 0) == 0) {
    const std::string digits = name.substr(prefix.size());
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      const auto k = static_cast<std::size_t>(std::stoul(digits));
      if (k > 0) return EvalMetric::precision(k);
    }
  }
  throw std::invalid_argument("unknown metric '" + name + "' (expected accuracy or prec@K)");
}

std::string to_string(const EvalMetric& metric) {
  return metric.kind == EvalMetric::Kind::accuracy ? "accuracy" : "prec@" + std::to_string(metric.k);
}

double accuracy(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (scores.empty()) throw std::invalid_argument("accuracy: no inputs");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double predicted = sigmoid(scores[i]) >= 0.5 ? 1.0 : 0.0;
    correct += predicted == labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double precision_at_k(std::span<const double> scores, std::span<const double> labels,
                      std::span<const std::int64_t> query_ids, std::size_t k) {
  return precision_with_tiers(scores, {}, labels, query_ids, k);
}

EvalResult evaluate(const Ensemble& model, const Dataset& test, const EvalOptions& options) {
  require_labeled(test);
  if (test.dims() != model.feature_count()) {
    throw std::invalid_argument("test data has " + std::to_string(test.dims()) + " features, model expects " +
                                std::to_string(model.feature_count()));
  }
  const std::size_t limit = options.tree_limit.value_or(model.size());
  if (limit > model.size()) throw std::invalid_argument("tree limit exceeds ensemble size");
  if (!(options.tree_eval_unit_cost >= 0.0)) throw std::invalid_argument("tree evaluation cost must be nonnegative");
  const auto& exit = options.early_exit;
  if (exit && exit->interval == 0) throw std::invalid_argument("early-exit interval must be positive");
  if (exit && exit->direction == ExitPolicy::Direction::drop_low_ranked && !test.has_query_ids()) {
    throw ValidationError("drop-low-ranked early exit needs query ids");
  }

  const std::size_t rows = test.rows();
  std::vector<std::vector<double>> inputs(rows);
  for (std::size_t i = 0; i < rows; ++i) inputs[i] = row_vector(test, i);
  std::vector<CostMeter> meters;
  meters.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) meters.emplace_back(test.feature_costs());

  std::vector<double> scores(rows, model.bias());
  // Tier = number of checkpoints survived; survivors of the last one rank first.
  std::vector<std::size_t> tier(rows, std::numeric_limits<std::size_t>::max());
  std::vector<bool> active(rows, true);
  const auto groups = test.has_query_ids() ? group_by_query(test.query_ids()) : std::vector<std::vector<std::size_t>>{};

  for (std::size_t t = 0; t < limit; ++t) {
    const auto& tree = model.trees()[t];
    for (std::size_t i = 0; i < rows; ++i) {
      if (active[i]) scores[i] += model.learning_rate() * evaluate_tree(tree, inputs[i], meters[i]);
    }
    const std::size_t done = t + 1;
    if (!exit || done % exit->interval != 0 || done == limit) continue;
    if (exit->direction == ExitPolicy::Direction::confident_positive) {
      for (std::size_t i = 0; i < rows; ++i) {
        if (active[i] && sigmoid(scores[i]) > exit->threshold) {
          active[i] = false;
          tier[i] = done;
        }
      }
    } else {
      for (const auto& docs : groups) {
        std::vector<std::size_t> alive;
        for (const std::size_t i : docs) {
          if (active[i]) alive.push_back(i);
        }
        std::stable_sort(alive.begin(), alive.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        for (std::size_t r = exit->keep_per_query; r < alive.size(); ++r) {
          active[alive[r]] = false;
          tier[alive[r]] = done;
        }
      }
    }
  }

  EvalResult result;
  result.scores = Eigen::Map<const Vector>(scores.data(), static_cast<Eigen::Index>(rows));
  const bool tiered = exit && exit->direction == ExitPolicy::Direction::drop_low_ranked;
  result.metric_value = metric_value(options.metric, scores, tiered ? std::span<const std::size_t>(tier) : std::span<const std::size_t>{}, test);

  auto& cost = result.cost;
  cost.tree_eval_unit_cost = options.tree_eval_unit_cost;
  double total = 0.0;
  double trees = 0.0;
  for (const auto& meter : meters) {
    cost.per_input_feature_cost.push_back(meter.feature_cost());
    cost.per_input_trees_evaluated.push_back(meter.trees_evaluated());
    total += meter.feature_cost() + options.tree_eval_unit_cost * static_cast<double>(meter.trees_evaluated());
    trees += static_cast<double>(meter.trees_evaluated());
  }
  cost.mean_total_cost = rows > 0 ? total / static_cast<double>(rows) : 0.0;
  cost.mean_trees_evaluated = rows > 0 ? trees / static_cast<double>(rows) : 0.0;
  return result;
}

std::vector<double> per_tree_trace(const Ensemble& model, const Dataset& test, const EvalMetric& metric) {
  require_labeled(test);
  const std::size_t rows = test.rows();
  std::vector<std::vector<double>> inputs(rows);
  for (std::size_t i = 0; i < rows; ++i) inputs[i] = row_vector(test, i);
  std::vector<double> scores(rows, model.bias());
  std::vector<double> trace;
  trace.reserve(model.size());
  for (const auto& tree : model.trees()) {
    for (std::size_t i = 0; i < rows; ++i) scores[i] += model.learning_rate() * tree.predict(inputs[i]);
    trace.push_back(metric_value(metric, scores, {}, test));
  }
  return trace;
}

void write_trace_csv(const std::string& trainer, const std::vector<double>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "trainer,tree_index,metric\n";
  for (std::size_t t = 0; t < trace.size(); ++t) out << trainer << ',' << t + 1 << ',' << csv::format_double(trace[t]) << '\n';
}

std::vector<double> default_mu_grid() {
  std::vector<double> grid;
  for (int e = -5; e <= -1; ++e) grid.push_back(std::ldexp(1.0, 2 * e));
  grid.push_back(0.0);
  for (int e = 0; e <= 4; ++e) grid.push_back(std::ldexp(1.0, 2 * e));
  return grid;
}

SweepResult sweep_mu(const Dataset& train_data, const Dataset& test_data, const TrainConfig& base,
                     const SweepOptions& options) {
  if (options.mu_grid.empty() || options.seeds.empty() || options.trainers.empty()) {
    throw std::invalid_argument("sweep grids must be non-empty");
  }
  SweepResult result;
  for (const std::uint64_t seed : options.seeds) {
    std::optional<Dataset> sampled;
    std::optional<LaplacianSystem> graph;
    std::string setup_error;
    try {
      sampled = options.labeled_count
                    ? subsample_labeled(train_data, *options.labeled_count, seed, options.by_query)
                    : train_data;
      const bool needs_graph = std::any_of(options.trainers.begin(), options.trainers.end(),
                                           [](TrainerKind k) { return k != TrainerKind::gbrt; });
      if (needs_graph && sampled->unlabeled_count() > 0) {
        graph = build_laplacian(*sampled, base.neighbor_count, base.kernel, base.metric);
      }
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    for (const TrainerKind kind : options.trainers) {
      for (const double mu : options.mu_grid) {
        SweepRow row;
        row.trainer = kind;
        row.mu = mu;
        row.seed = seed;
        try {
          if (!setup_error.empty()) throw std::runtime_error(setup_error);
          row.labeled_count = sampled->labeled_count();
          TrainConfig cfg = base;
          cfg.mu = mu;
          cfg.seed = seed;
          const auto trained = train(*sampled, cfg, kind, graph ? &*graph : nullptr);
          const auto eval = evaluate(trained.model, test_data, options.eval);
          row.mean_cost = eval.cost.mean_total_cost;
          row.metric = eval.metric_value;
          row.trees = eval.cost.mean_trees_evaluated;
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        result.rows.push_back(std::move(row));
      }
    }
  }
  return result;
}

SweepResult average_over_seeds(const SweepResult& result) {
  using Key = std::tuple<int, std::size_t, double>;
  std::map<Key, std::pair<SweepRow, std::size_t>> cells;
  std::vector<Key> order;
  for (const auto& row : result.rows) {
    if (row.error) continue;
    const Key key{static_cast<int>(row.trainer), row.labeled_count, row.mu};
    auto [it, inserted] = cells.try_emplace(key, row, 0);
    if (inserted) {
      order.push_back(key);
      it->second.first.mean_cost = 0.0;
      it->second.first.metric = 0.0;
      it->second.first.trees = 0.0;
      it->second.first.seed = 0;
    }
    auto& acc = it->second;
    acc.first.mean_cost += row.mean_cost;
    acc.first.metric += row.metric;
    acc.first.trees += row.trees;
    ++acc.second;
  }
  SweepResult averaged;
  for (const auto& key : order) {
    auto [row, count] = cells.at(key);
    const auto c = static_cast<double>(count);
    row.mean_cost /= c;
    row.metric /= c;
    row.trees /= c;
    averaged.rows.push_back(row);
  }
  return averaged;
}

void write_curve_csv(const SweepResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "trainer,mu,seed,labeled_count,mean_cost,metric,trees\n";
  for (const auto& r : result.rows) {
    out << to_string(r.trainer) << ',' << csv::format_double(r.mu) << ',' << r.seed << ',' << r.labeled_count << ',';
    if (r.error) {
      out << "error,error,error\n";
    } else {
      out << csv::format_double(r.mean_cost) << ',' << csv::format_double(r.metric) << ',' << csv::format_double(r.trees)
          << '\n';
    }
  }
}

}  // namespace grbb
