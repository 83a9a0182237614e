#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "grbb/grbb.hpp"

namespace grbb::cli {
namespace {

// Flags shared by every command that trains models.
struct TrainFlags {
  std::string trainer = "grbb";
  std::size_t trees = 200;
  double lr = 0.1;
  int depth = 4;
  double mu = 0.0;
  double lambda = 0.01;
  std::size_t k = 9;
  std::string kernel = "binary";
  std::optional<double> bandwidth;
  std::string metric_space = "euclidean";
  double ridge = kDefaultRidge;
  std::string charging = "ensemble";
  std::uint64_t seed = 1;

  TrainConfig config() const {
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.num_trees = trees;
    cfg.max_depth = depth;
    cfg.mu = mu;
    cfg.lambda = lambda;
    cfg.neighbor_count = k;
    cfg.kernel.kind = kernel == "heat" ? KernelSpec::Kind::heat : KernelSpec::Kind::binary;
    cfg.kernel.bandwidth = bandwidth;
    cfg.metric.kind = metric_space == "standardized" ? MetricSpec::Kind::standardized : MetricSpec::Kind::euclidean;
    cfg.ridge = ridge;
    cfg.charging = parse_charging_mode(charging);
    cfg.seed = seed;
    return cfg;
  }
};

void add_train_flags(CLI::App* app, TrainFlags& f, bool with_trainer, bool with_mu) {
  if (with_trainer) {
    app->add_option("--trainer", f.trainer, "Trainer: gbrt, lapgbrt or grbb")
        ->check(CLI::IsMember({"gbrt", "lapgbrt", "grbb"}))
        ->capture_default_str();
  }
  app->add_option("--trees", f.trees, "Number of boosting iterations")->capture_default_str();
  app->add_option("--lr", f.lr, "Learning rate")->capture_default_str();
  app->add_option("--depth", f.depth, "Maximum tree depth")->capture_default_str();
  if (with_mu) app->add_option("--mu", f.mu, "Feature-cost trade-off")->capture_default_str();
  app->add_option("--lambda", f.lambda, "Laplacian regularization weight")->capture_default_str();
  app->add_option("--k", f.k, "Nearest neighbours in the graph")->capture_default_str();
  app->add_option("--kernel", f.kernel, "Edge weights: binary or heat")
      ->check(CLI::IsMember({"binary", "heat"}))
      ->capture_default_str();
  app->add_option("--bandwidth", f.bandwidth, "Heat kernel sigma (default: median neighbour distance)");
  app->add_option("--distance", f.metric_space, "Graph distance: euclidean or standardized")
      ->check(CLI::IsMember({"euclidean", "standardized"}))
      ->capture_default_str();
  app->add_option("--ridge", f.ridge, "Diagonal shift on L_UU before factorization")->capture_default_str();
  app->add_option("--charging", f.charging, "Cost charging: ensemble or tree")
      ->check(CLI::IsMember({"ensemble", "tree"}))
      ->capture_default_str();
  app->add_option("--seed", f.seed, "Seed for every random choice")->capture_default_str();
}

struct ExitFlags {
  std::optional<std::size_t> interval;
  std::optional<double> threshold;
  std::string mode = "confident";
  std::size_t keep = 10;

  std::optional<ExitPolicy> policy() const {
    if (!interval && !threshold) return std::nullopt;
    ExitPolicy p;
    p.interval = interval.value_or(10);
    p.threshold = threshold.value_or(1.0);
    p.direction = mode == "rank" ? ExitPolicy::Direction::drop_low_ranked : ExitPolicy::Direction::confident_positive;
    p.keep_per_query = keep;
    return p;
  }
};

void add_exit_flags(CLI::App* app, ExitFlags& f) {
  app->add_option("--early-exit-interval", f.interval, "Checkpoint every N trees (default 10 when exiting)");
  app->add_option("--early-exit-threshold", f.threshold, "Exit when sigmoid(H) exceeds this value");
  app->add_option("--early-exit-mode", f.mode, "confident (positive exits) or rank (drop low-ranked documents)")
      ->check(CLI::IsMember({"confident", "rank"}))
      ->capture_default_str();
  app->add_option("--early-exit-keep", f.keep, "Documents kept per query at each rank checkpoint")
      ->capture_default_str();
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  for (const auto& cell : csv::split_line(text)) {
    if (cell == "default") {
      const auto grid = default_mu_grid();
      values.insert(values.end(), grid.begin(), grid.end());
      continue;
    }
    double v = 0.0;
    if (!csv::parse_double(cell, v)) throw std::invalid_argument("'" + cell + "' is not a number");
    values.push_back(v);
  }
  return values;
}

std::vector<std::size_t> parse_count_list(const std::string& text) {
  std::vector<std::size_t> values;
  for (const double v : parse_double_list(text)) {
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw std::invalid_argument("counts must be nonnegative integers");
    }
    values.push_back(static_cast<std::size_t>(v));
  }
  return values;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < count; ++i) seeds.push_back(first + i);
  return seeds;
}

Dataset load(const std::string& path, const std::string& costs) {
  return load_dataset(path, costs.empty() ? std::nullopt : std::optional<std::string>(costs));
}

void warn(std::ostream& err, const std::string& message) { err << "warning: " << message << '\n'; }

std::string default_sidecar(const std::string& path, const std::string& suffix) {
  const std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Budgeted semi-supervised gradient boosting", "grbb"};
  app.require_subcommand(1);

  // train
  TrainFlags train_flags;
  std::string train_data;
  std::string train_costs;
  std::string train_split;
  std::string train_out = "model.json";
  std::string train_log;
  std::optional<std::size_t> train_labeled;
  bool train_by_query = false;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write it with its iteration log");
  train_cmd->add_option("--data", train_data, "Feature CSV")->required();
  train_cmd->add_option("--costs", train_costs, "Feature cost file (default: all 1.0)");
  train_cmd->add_option("--split", train_split, "Row-index file of held-out rows to exclude from training");
  train_cmd->add_option("--labeled-count", train_labeled, "Keep only this many labeled rows (or queries)");
  train_cmd->add_flag("--by-query", train_by_query, "Subsample labeled queries instead of rows");
  train_cmd->add_option("--out", train_out, "Model file")->capture_default_str();
  train_cmd->add_option("--log", train_log, "Iteration log CSV (default: <out stem>.log.csv)");
  add_train_flags(train_cmd, train_flags, true, true);

  // synth
  std::string synth_shape = "two_moons";
  SyntheticSpec synth_spec;
  std::string synth_out;
  std::string synth_truth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a two-class manifold dataset");
  synth_cmd->add_option("--shape", synth_shape, "two_moons or concentric_rings")
      ->check(CLI::IsMember({"two_moons", "moons", "concentric_rings", "rings"}))
      ->capture_default_str();
  synth_cmd->add_option("--points", synth_spec.points_per_class, "Points per class")->capture_default_str();
  synth_cmd->add_option("--noise", synth_spec.noise, "Gaussian noise standard deviation")->capture_default_str();
  synth_cmd->add_option("--labeled", synth_spec.labeled_per_class, "Labeled points per class")->capture_default_str();
  synth_cmd->add_option("--seed", synth_spec.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Training feature CSV")->required();
  synth_cmd->add_option("--truth", synth_truth, "Ground-truth CSV (default: <out stem>.truth.csv)");

  // eval
  std::string eval_model;
  std::string eval_test;
  std::string eval_data;
  std::string eval_costs;
  std::string eval_metric = "accuracy";
  std::optional<std::size_t> eval_tree_limit;
  double eval_tree_cost = 0.0;
  std::string eval_out;
  std::string eval_trace;
  ExitFlags eval_exit;
  auto* eval_cmd = app.add_subcommand("eval", "Score a labeled test set with cost accounting");
  eval_cmd->add_option("--model", eval_model, "Model file")->required();
  eval_cmd->add_option("--test", eval_test, "Labeled test CSV")->required();
  eval_cmd->add_option("--data", eval_data, "Training CSV, used only to check the model fingerprint");
  eval_cmd->add_option("--costs", eval_costs, "Feature cost file for the test data");
  eval_cmd->add_option("--metric", eval_metric, "accuracy or prec@K")->capture_default_str();
  eval_cmd->add_option("--tree-limit", eval_tree_limit, "Evaluate only the first N trees");
  eval_cmd->add_option("--tree-cost", eval_tree_cost, "Cost charged per evaluated tree")->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "Result CSV (default: stdout)");
  eval_cmd->add_option("--trace", eval_trace, "Per-tree metric trace CSV");
  add_exit_flags(eval_cmd, eval_exit);

  // sweep
  TrainFlags sweep_flags;
  std::string sweep_data;
  std::string sweep_test;
  std::string sweep_split;
  std::string sweep_costs;
  std::string sweep_trainers = "grbb";
  std::string sweep_mu = "default";
  std::size_t sweep_seeds = 1;
  std::optional<std::size_t> sweep_labeled;
  bool sweep_by_query = false;
  std::string sweep_metric = "accuracy";
  double sweep_tree_cost = 0.0;
  std::string sweep_out = "curve.csv";
  ExitFlags sweep_exit;
  auto* sweep_cmd = app.add_subcommand("sweep", "Cost/accuracy curve over a mu grid");
  sweep_cmd->add_option("--data", sweep_data, "Training CSV")->required();
  sweep_cmd->add_option("--test", sweep_test, "Labeled test CSV");
  sweep_cmd->add_option("--split", sweep_split, "Row-index file selecting test rows of --data");
  sweep_cmd->add_option("--costs", sweep_costs, "Feature cost file");
  sweep_cmd->add_option("--trainer", sweep_trainers, "Comma-separated trainers")->capture_default_str();
  sweep_cmd->add_option("--mu", sweep_mu, "Comma-separated mu values, or 'default' for the 11-value grid")
      ->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep_seeds, "Number of seeds, starting at --seed")->capture_default_str();
  sweep_cmd->add_option("--labeled-count", sweep_labeled, "Labeled rows (or queries) kept per seed");
  sweep_cmd->add_flag("--by-query", sweep_by_query, "Subsample labeled queries instead of rows");
  sweep_cmd->add_option("--metric", sweep_metric, "accuracy or prec@K")->capture_default_str();
  sweep_cmd->add_option("--tree-cost", sweep_tree_cost, "Cost charged per evaluated tree")->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "Curve CSV")->capture_default_str();
  add_train_flags(sweep_cmd, sweep_flags, false, false);
  add_exit_flags(sweep_cmd, sweep_exit);

  // variance
  TrainFlags var_flags;
  std::string var_data;
  std::string var_costs;
  std::string var_model;
  std::string var_counts = "2,4,16";
  std::string var_mu = "0";
  std::size_t var_seeds = 10;
  bool var_by_query = false;
  std::string var_hessian = "paper";
  std::string var_out = "variance.csv";
  auto* var_cmd = app.add_subcommand("variance", "Lower bound on prediction variance");
  var_cmd->add_option("--data", var_data, "Training CSV")->required();
  var_cmd->add_option("--costs", var_costs, "Feature cost file");
  var_cmd->add_option("--model", var_model, "Score this model instead of training a sweep");
  var_cmd->add_option("--labeled-counts", var_counts, "Comma-separated labeled counts")->capture_default_str();
  var_cmd->add_option("--mu", var_mu, "Comma-separated mu values, or 'default' for the 11-value grid")->capture_default_str();
  var_cmd->add_option("--seeds", var_seeds, "Seeds averaged per cell, starting at --seed")->capture_default_str();
  var_cmd->add_flag("--by-query", var_by_query, "Labeled counts are query counts");
  var_cmd->add_option("--hessian", var_hessian, "paper: sigma^2(1-sigma) curvature; logistic: sigma(1-sigma)")
      ->check(CLI::IsMember({"paper", "logistic"}))
      ->capture_default_str();
  var_cmd->add_option("--out", var_out, "Variance CSV")->capture_default_str();
  add_train_flags(var_cmd, var_flags, true, false);

  std::vector<std::string> argv_storage{"grbb"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    if (!app.get_subcommands().empty()) err << app.get_subcommands().front()->help();
    return kExitUsage;
  }

  try {
    if (*train_cmd) {
      const TrainConfig cfg = train_flags.config();
      Dataset ds = load(train_data, train_costs);
      if (!train_split.empty()) ds = split_by_rows(ds, load_split_indices(train_split)).train;
      if (train_labeled) ds = subsample_labeled(ds, *train_labeled, cfg.seed, train_by_query);
      const auto kind = parse_trainer_kind(train_flags.trainer);
      if (kind != TrainerKind::gbrt && ds.unlabeled_count() == 0) {
        warn(err, "no unlabeled rows; " + train_flags.trainer + " degrades to gbrt");
      }
      auto result = train(ds, cfg, kind);
      for (const auto& w : result.warnings) warn(err, w);
      ModelFile file{std::move(result.model), cfg, std::vector<double>(ds.feature_costs().begin(), ds.feature_costs().end()),
                     ds.fingerprint()};
      save_model(file, train_out);
      const std::string log_path = train_log.empty() ? default_sidecar(train_out, ".log.csv") : train_log;
      write_iteration_log(result.log, log_path);
      out << "trained " << file.model.size() << " trees (" << train_flags.trainer << ", n=" << ds.labeled_count()
          << ", m=" << ds.unlabeled_count() << ") -> " << train_out << '\n';
      return kExitOk;
    }

    if (*synth_cmd) {
      synth_spec.shape = parse_synthetic_shape(synth_shape);
      const auto data = generate_synthetic(synth_spec);
      const std::string truth = synth_truth.empty() ? default_sidecar(synth_out, ".truth.csv") : synth_truth;
      save_dataset(training_dataset(data), synth_out);
      save_dataset(ground_truth_dataset(data), truth);
      out << "wrote " << data.truth.size() << " rows to " << synth_out << ", ground truth to " << truth << '\n';
      return kExitOk;
    }

    if (*eval_cmd) {
      const ModelFile file = load_model(eval_model);
      const Dataset test = load(eval_test, eval_costs);
      if (!eval_data.empty()) {
        const Dataset train_ds = load(eval_data, eval_costs);
        if (train_ds.fingerprint() != file.training_fingerprint) {
          warn(err, "training data fingerprint " + fingerprint_hex(train_ds.fingerprint()) +
                        " does not match the model's " + fingerprint_hex(file.training_fingerprint));
        }
      }
      EvalOptions options;
      options.metric = parse_metric(eval_metric);
      options.tree_limit = eval_tree_limit;
      options.early_exit = eval_exit.policy();
      options.tree_eval_unit_cost = eval_tree_cost;
      const auto result = evaluate(file.model, test, options);
      std::ostringstream table;
      table << "trainer,tree_limit,metric_name,metric,mean_cost,trees\n"
            << to_string(file.model.kind()) << ',' << eval_tree_limit.value_or(file.model.size()) << ','
            << to_string(options.metric) << ',' << csv::format_double(result.metric_value) << ','
            << csv::format_double(result.cost.mean_total_cost) << ','
            << csv::format_double(result.cost.mean_trees_evaluated) << '\n';
      if (eval_out.empty()) {
        out << table.str();
      } else {
        std::ofstream f(eval_out);
        if (!f) throw std::runtime_error("cannot write '" + eval_out + "'");
        f << table.str();
      }
      if (!eval_trace.empty()) {
        write_trace_csv(to_string(file.model.kind()), per_tree_trace(file.model, test, options.metric), eval_trace);
      }
      return kExitOk;
    }

    if (*sweep_cmd) {
      const TrainConfig cfg = sweep_flags.config();
      Dataset ds = load(sweep_data, sweep_costs);
      std::optional<Dataset> test;
      if (!sweep_split.empty()) {
        auto split = split_by_rows(ds, load_split_indices(sweep_split));
        ds = std::move(split.train);
        test = std::move(split.test);
      } else if (!sweep_test.empty()) {
        test = load(sweep_test, sweep_costs);
      } else {
        err << "usage error: sweep needs --test or --split\n";
        return kExitUsage;
      }
      SweepOptions options;
      options.mu_grid = parse_double_list(sweep_mu);
      options.seeds = seed_range(cfg.seed, sweep_seeds);
      options.trainers.clear();
      for (const auto& name : csv::split_line(sweep_trainers)) options.trainers.push_back(parse_trainer_kind(name));
      options.labeled_count = sweep_labeled;
      options.by_query = sweep_by_query;
      options.eval.metric = parse_metric(sweep_metric);
      options.eval.early_exit = sweep_exit.policy();
      options.eval.tree_eval_unit_cost = sweep_tree_cost;
      const auto result = grbb::sweep_mu(ds, *test, cfg, options);
      for (const auto& row : result.rows) {
        if (row.error) {
          warn(err, "cell " + to_string(row.trainer) + " mu=" + csv::format_double(row.mu) +
                        " seed=" + std::to_string(row.seed) + " failed: " + *row.error);
        }
      }
      write_curve_csv(result, sweep_out);
      out << "wrote " << result.rows.size() << " rows to " << sweep_out << '\n';
      return kExitOk;
    }

    if (*var_cmd) {
      const TrainConfig cfg = var_flags.config();
      const HessianMode mode = parse_hessian_mode(var_hessian);
      const Dataset ds = load(var_data, var_costs);
      std::vector<VarianceCell> cells;
      if (!var_model.empty()) {
        const ModelFile file = load_model(var_model);
        if (ds.fingerprint() != file.training_fingerprint) {
          warn(err, "data fingerprint " + fingerprint_hex(ds.fingerprint()) + " does not match the model's " +
                        fingerprint_hex(file.training_fingerprint));
        }
        const auto sys = build_laplacian(ds, file.config.neighbor_count, file.config.kernel, file.config.metric);
        const auto report = variance_lower_bound(file.model.predict_rows(ds.features()), sys, file.config.lambda, mode);
        cells.push_back(VarianceCell{ds.labeled_count(), file.config.mu, 1, report.avg_link_variance,
                                     file.config.lambda, report.n, report.m, mode});
      } else {
        const auto kind = parse_trainer_kind(var_flags.trainer);
        const auto seeds = seed_range(cfg.seed, var_seeds);
        for (const std::size_t count : parse_count_list(var_counts)) {
          for (const double mu : parse_double_list(var_mu)) {
            VarianceCell cell{count, mu, 0, 0.0, cfg.lambda, 0, 0, mode};
            for (const std::uint64_t seed : seeds) {
              const Dataset sampled = subsample_labeled(ds, count, seed, var_by_query);
              TrainConfig run_cfg = cfg;
              run_cfg.mu = mu;
              run_cfg.seed = seed;
              const auto sys = build_laplacian(sampled, cfg.neighbor_count, cfg.kernel, cfg.metric);
              const auto trained = train(sampled, run_cfg, kind, &sys);
              const auto report =
                  variance_lower_bound(trained.model.predict_rows(sampled.features()), sys, cfg.lambda, mode);
              cell.avg_link_variance += report.avg_link_variance;
              cell.n = report.n;
              cell.m = report.m;
              ++cell.seeds;
            }
            cell.avg_link_variance /= static_cast<double>(cell.seeds);
            cells.push_back(cell);
          }
        }
      }
      write_variance_csv(cells, var_out);
      out << "wrote " << cells.size() << " rows to " << var_out << '\n';
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace grbb::cli
