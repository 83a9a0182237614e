#include "grbb/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "grbb/rng.hpp"

namespace grbb {
namespace {

std::optional<double> normalize_label(double raw) {
  if (raw == 1.0) return 1.0;
  if (raw == 0.0 || raw == -1.0) return 0.0;
  return std::nullopt;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace

Dataset Dataset::from_rows(Matrix features, const std::vector<std::optional<double>>& labels,
                           std::vector<double> costs, std::optional<std::vector<std::int64_t>> query_ids,
                           std::vector<std::string> feature_names) {
  const auto total = static_cast<std::size_t>(features.rows());
  if (labels.size() != total) {
    throw ValidationError("label count " + std::to_string(labels.size()) + " does not match row count " +
                          std::to_string(total));
  }
  std::vector<std::optional<double>> normalized(total);
  for (std::size_t i = 0; i < total; ++i) {
    if (!labels[i]) continue;
    normalized[i] = normalize_label(*labels[i]);
    if (!normalized[i]) {
      throw ValidationError("row " + std::to_string(i) + ": label must be 0/1 or -1/+1");
    }
  }
  std::vector<std::size_t> source(total);
  std::iota(source.begin(), source.end(), std::size_t{0});
  return build(features, normalized, std::move(costs), query_ids.value_or(std::vector<std::int64_t>{}),
               std::move(feature_names), source);
}

Dataset Dataset::build(const Matrix& features, const std::vector<std::optional<double>>& labels,
                       std::vector<double> costs, const std::vector<std::int64_t>& query_ids,
                       std::vector<std::string> names, const std::vector<std::size_t>& source_rows) {
  const auto total = static_cast<std::size_t>(features.rows());
  const auto d = static_cast<std::size_t>(features.cols());
  if (d == 0) throw ValidationError("dataset needs at least one feature column");
  if (costs.size() != d) {
    throw ValidationError("expected " + std::to_string(d) + " feature costs, got " + std::to_string(costs.size()));
  }
  for (std::size_t a = 0; a < d; ++a) {
    if (!std::isfinite(costs[a]) || costs[a] < 0.0) {
      throw ValidationError("feature cost " + std::to_string(a) + " must be a finite nonnegative number");
    }
  }
  if (!features.allFinite()) throw ValidationError("feature matrix contains NaN or Inf");
  if (!query_ids.empty() && query_ids.size() != total) {
    throw ValidationError("query id count does not match row count");
  }
  if (names.empty()) {
    for (std::size_t a = 0; a < d; ++a) names.push_back("f" + std::to_string(a + 1));
  } else if (names.size() != d) {
    throw ValidationError("feature name count does not match column count");
  }

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool la = labels[a].has_value();
    const bool lb = labels[b].has_value();
    if (la != lb) return la;
    return source_rows[a] < source_rows[b];
  });

  Dataset ds;
  ds.features_.resize(features.rows(), features.cols());
  ds.source_rows_.resize(total);
  if (!query_ids.empty()) ds.query_ids_.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t src = order[i];
    ds.features_.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(src));
    ds.source_rows_[i] = source_rows[src];
    if (!query_ids.empty()) ds.query_ids_[i] = query_ids[src];
    if (labels[src]) ds.labels_.push_back(*labels[src]);
  }
  if (ds.labels_.empty()) throw ValidationError("dataset has no labeled rows");
  ds.costs_ = std::move(costs);
  ds.names_ = std::move(names);
  return ds;
}

Dataset Dataset::relabeled(const std::vector<std::optional<double>>& labels) const {
  if (labels.size() != rows()) throw ValidationError("relabel: label count does not match row count");
  std::vector<std::optional<double>> normalized(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      normalized[i] = normalize_label(*labels[i]);
      if (!normalized[i]) throw ValidationError("relabel: label must be 0/1 or -1/+1");
    }
  }
  return build(features_, normalized, costs_, query_ids_, names_, source_rows_);
}

Dataset Dataset::select(std::span<const std::size_t> internal_rows) const {
  Matrix sub(static_cast<Eigen::Index>(internal_rows.size()), features_.cols());
  std::vector<std::optional<double>> labels(internal_rows.size());
  std::vector<std::int64_t> qids;
  std::vector<std::size_t> source(internal_rows.size());
  for (std::size_t i = 0; i < internal_rows.size(); ++i) {
    const std::size_t r = internal_rows[i];
    if (r >= rows()) throw std::out_of_range("select: row " + std::to_string(r) + " out of range");
    sub.row(static_cast<Eigen::Index>(i)) = features_.row(static_cast<Eigen::Index>(r));
    if (r < labeled_count()) labels[i] = labels_[r];
    if (has_query_ids()) qids.push_back(query_ids_[r]);
    source[i] = source_rows_[r];
  }
  return build(sub, labels, costs_, qids, names_, source);
}

std::uint64_t Dataset::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t shape[3] = {rows(), dims(), labeled_count()};
  mix_bytes(shape, sizeof(shape));
  for (Eigen::Index i = 0; i < features_.rows(); ++i) {
    for (Eigen::Index j = 0; j < features_.cols(); ++j) {
      const double v = features_(i, j);
      mix_bytes(&v, sizeof(v));
    }
  }
  mix_bytes(labels_.data(), labels_.size() * sizeof(double));
  mix_bytes(costs_.data(), costs_.size() * sizeof(double));
  return h;
}

Dataset load_dataset(const std::string& features_path, const std::optional<std::string>& costs_path,
                     const LoadOptions& options) {
  std::ifstream in(features_path);
  if (!in) throw ParseError("cannot open '" + features_path + "'", 0);

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    auto cells = csv::split_line(line);
    if (cells.size() == 1 && cells[0].empty()) continue;
    header = std::move(cells);
  }
  if (header.empty()) throw ParseError("missing header row", line_no);

  std::optional<std::size_t> label_col;
  std::optional<std::size_t> query_col;
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == options.label_column) {
      label_col = c;
    } else if (header[c] == options.query_column) {
      query_col = c;
    } else {
      feature_cols.push_back(c);
      names.push_back(header[c]);
    }
  }
  if (!label_col) throw ParseError("header has no '" + options.label_column + "' column", line_no);
  if (feature_cols.empty()) throw ParseError("header has no feature columns", line_no);

  std::vector<std::vector<double>> rows;
  std::vector<std::optional<double>> labels;
  std::vector<std::int64_t> qids;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cells = csv::split_line(line);
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    const std::string& label_cell = cells[*label_col];
    if (label_cell.empty()) {
      labels.emplace_back();
    } else {
      double raw = 0.0;
      if (!csv::parse_double(label_cell, raw) || !normalize_label(raw)) {
        throw ParseError("label '" + label_cell + "' is not one of 0, 1, -1, +1 or empty", line_no);
      }
      labels.push_back(normalize_label(raw));
    }
    if (query_col) {
      double q = 0.0;
      if (!csv::parse_double(cells[*query_col], q) || q != std::floor(q)) {
        throw ParseError("query id '" + cells[*query_col] + "' is not an integer", line_no);
      }
      qids.push_back(static_cast<std::int64_t>(q));
    }
    std::vector<double> values(feature_cols.size());
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const std::string& cell = cells[feature_cols[j]];
      if (cell.empty()) throw ParseError("missing value in column '" + names[j] + "'", line_no);
      if (!csv::parse_double(cell, values[j])) {
        throw ParseError("non-numeric or non-finite value '" + cell + "' in column '" + names[j] + "'", line_no);
      }
    }
    rows.push_back(std::move(values));
  }

  Matrix features(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  std::vector<double> costs = costs_path ? load_costs(*costs_path, names)
                                         : std::vector<double>(feature_cols.size(), options.default_cost);
  std::optional<std::vector<std::int64_t>> query_ids;
  if (query_col) query_ids = std::move(qids);
  return Dataset::from_rows(std::move(features), labels, std::move(costs), std::move(query_ids), std::move(names));
}

std::vector<double> load_costs(const std::string& path, const std::vector<std::string>& feature_names) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open cost file '" + path + "'", 0);
  std::vector<std::pair<std::size_t, std::vector<std::string>>> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto cells = csv::split_line(line);
    if (cells.size() == 1 && cells[0].empty()) continue;
    lines.emplace_back(line_no, std::move(cells));
  }
  if (lines.empty()) throw ParseError("cost file '" + path + "' is empty", 0);

  const std::size_t d = feature_names.size();
  std::vector<double> costs;
  double probe = 0.0;
  const bool single_row = lines.size() == 1 && csv::parse_double(lines[0].second.front(), probe);
  if (single_row) {
    const auto& [no, cells] = lines[0];
    if (cells.size() != d) {
      throw ParseError("expected " + std::to_string(d) + " costs, found " + std::to_string(cells.size()), no);
    }
    for (const auto& cell : cells) {
      double c = 0.0;
      if (!csv::parse_double(cell, c)) throw ParseError("cost '" + cell + "' is not a finite number", no);
      costs.push_back(c);
    }
  } else {
    std::unordered_map<std::string, double> by_name;
    for (const auto& [no, cells] : lines) {
      if (cells.size() != 2) throw ParseError("expected 'name,cost'", no);
      double c = 0.0;
      if (!csv::parse_double(cells[1], c)) throw ParseError("cost '" + cells[1] + "' is not a finite number", no);
      by_name[cells[0]] = c;
    }
    for (const auto& name : feature_names) {
      const auto it = by_name.find(name);
      if (it == by_name.end()) throw ValidationError("cost file has no entry for feature '" + name + "'");
      costs.push_back(it->second);
    }
  }
  for (std::size_t a = 0; a < costs.size(); ++a) {
    if (costs[a] < 0.0) {
      throw ValidationError("feature '" + feature_names[a] + "' has negative cost " + csv::format_double(costs[a]));
    }
  }
  return costs;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::vector<std::size_t> order(ds.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto src = ds.source_rows();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return src[a] < src[b]; });

  std::ostringstream out;
  std::vector<std::string> header{"label"};
  if (ds.has_query_ids()) header.emplace_back("qid");
  header.insert(header.end(), ds.feature_names().begin(), ds.feature_names().end());
  out << csv::join(header) << '\n';
  for (const std::size_t i : order) {
    std::vector<std::string> cells;
    cells.push_back(i < ds.labeled_count() ? (ds.labels()[i] == 1.0 ? "1" : "0") : "");
    if (ds.has_query_ids()) cells.push_back(std::to_string(ds.query_ids()[i]));
    for (std::size_t j = 0; j < ds.dims(); ++j) {
      cells.push_back(csv::format_double(ds.features()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    }
    out << csv::join(cells) << '\n';
  }
  write_file(path, out.str());
}

void save_costs(const Dataset& ds, const std::string& path) {
  std::vector<std::string> cells;
  for (const double c : ds.feature_costs()) cells.push_back(csv::format_double(c));
  write_file(path, csv::join(cells) + "\n");
}

Dataset subsample_labeled(const Dataset& ds, std::size_t count, std::uint64_t seed, bool by_query) {
  const std::size_t n = ds.labeled_count();
  Rng rng(seed);
  std::vector<std::optional<double>> labels(ds.rows());

  if (!by_query) {
    if (count > n) {
      throw ValidationError("cannot keep " + std::to_string(count) + " labeled rows out of " + std::to_string(n));
    }
    std::vector<std::size_t> picks(n);
    std::iota(picks.begin(), picks.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(picks));
    for (std::size_t k = 0; k < count; ++k) labels[picks[k]] = ds.labels()[picks[k]];
    return ds.relabeled(labels);
  }

  if (!ds.has_query_ids()) throw ValidationError("query subsampling needs a qid column");
  // Candidate queries: those with at least one labeled document, in first-seen order.
  std::vector<std::int64_t> queries;
  std::set<std::int64_t> seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (seen.insert(ds.query_ids()[i]).second) queries.push_back(ds.query_ids()[i]);
  }
  if (count > queries.size()) {
    throw ValidationError("cannot keep " + std::to_string(count) + " queries out of " +
                          std::to_string(queries.size()));
  }
  rng.shuffle(std::span<std::int64_t>(queries));
  const std::set<std::int64_t> kept(queries.begin(), queries.begin() + static_cast<std::ptrdiff_t>(count));
  for (std::size_t i = 0; i < n; ++i) {
    if (kept.count(ds.query_ids()[i]) != 0) labels[i] = ds.labels()[i];
  }
  return ds.relabeled(labels);
}

std::vector<std::size_t> load_split_indices(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open split file '" + path + "'", 0);
  std::vector<std::size_t> indices;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::string token;
    while (tokens >> token) {
      std::size_t value = 0;
      std::size_t used = 0;
      try {
        value = std::stoull(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size() || token.front() == '-') {
        throw ParseError("'" + token + "' is not a row index", line_no);
      }
      indices.push_back(value);
    }
  }
  return indices;
}

DatasetSplit split_by_rows(const Dataset& ds, std::span<const std::size_t> test_file_rows) {
  std::map<std::size_t, std::size_t> internal_of;
  for (std::size_t i = 0; i < ds.rows(); ++i) internal_of[ds.source_rows()[i]] = i;
  std::vector<bool> in_test(ds.rows(), false);
  for (const std::size_t file_row : test_file_rows) {
    const auto it = internal_of.find(file_row);
    if (it == internal_of.end()) throw ValidationError("split row " + std::to_string(file_row) + " out of range");
    if (it->second >= ds.labeled_count()) {
      throw ValidationError("split row " + std::to_string(file_row) + " is unlabeled; test rows need labels");
    }
    in_test[it->second] = true;
  }
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (std::size_t i = 0; i < ds.rows(); ++i) (in_test[i] ? test_rows : train_rows).push_back(i);
  if (test_rows.empty()) throw ValidationError("split selects no test rows");
  return DatasetSplit{ds.select(train_rows), ds.select(test_rows), 0};
}

DatasetSplit random_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("test fraction must lie in (0, 1)");
  const std::size_t n = ds.labeled_count();
  const auto take = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (take == 0 || take >= n) throw ValidationError("test fraction leaves an empty train or test label set");
  std::vector<std::size_t> picks(n);
  std::iota(picks.begin(), picks.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(picks));
  std::vector<std::size_t> file_rows;
  for (std::size_t k = 0; k < take; ++k) file_rows.push_back(ds.source_rows()[picks[k]]);
  auto split = split_by_rows(ds, file_rows);
  split.seed = seed;
  return split;
}

}  // namespace grbb
