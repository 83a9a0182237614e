#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the library's numerics: every oracle works
// on plain std::vector data with straightforward loops.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "grbb/graph.hpp"
#include "grbb/rng.hpp"

namespace grbb::testing {

using DenseRows = std::vector<std::vector<double>>;

inline DenseRows to_rows(const SparseMatrix& m) {
  DenseRows out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols()), 0.0));
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      out[static_cast<std::size_t>(it.row())][static_cast<std::size_t>(it.col())] = it.value();
    }
  }
  return out;
}

inline SparseMatrix to_sparse(const DenseRows& w) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (w[i][j] != 0.0) triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), w[i][j]);
    }
  }
  SparseMatrix s(static_cast<Eigen::Index>(w.size()), static_cast<Eigen::Index>(w.size()));
  s.setFromTriplets(triplets.begin(), triplets.end());
  return s;
}

/// Random connected weighted graph: a random spanning tree plus extra edges.
inline DenseRows random_connected_weights(Rng& rng, std::size_t nodes, double extra_edge_prob = 0.3) {
  DenseRows w(nodes, std::vector<double>(nodes, 0.0));
  std::vector<std::size_t> order(nodes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t i = 1; i < nodes; ++i) {
    const std::size_t a = order[i];
    const std::size_t b = order[static_cast<std::size_t>(rng.below(i))];
    const double weight = rng.uniform(0.2, 2.0);
    w[a][b] = w[b][a] = weight;
  }
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t j = i + 1; j < nodes; ++j) {
      if (w[i][j] == 0.0 && rng.uniform() < extra_edge_prob) w[i][j] = w[j][i] = rng.uniform(0.2, 2.0);
    }
  }
  return w;
}

/// sum over i<j of w_ij (f_i - f_j)^2
inline double pairwise_quadratic(const DenseRows& w, const std::vector<double>& f) {
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = i + 1; j < w.size(); ++j) total += w[i][j] * (f[i] - f[j]) * (f[i] - f[j]);
  }
  return total;
}

/// Minimizes [g, u] L [g, u]' over u by plain gradient descent, with L = D - W
/// assembled here from the weights. Step size 1/(2 * Gershgorin bound).
inline std::vector<double> minimize_quadratic_by_descent(const DenseRows& w, std::size_t labeled,
                                                         const std::vector<double>& g) {
  const std::size_t total = w.size();
  DenseRows lap(total, std::vector<double>(total, 0.0));
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t j = 0; j < total; ++j) {
      if (i != j) {
        lap[i][j] = -w[i][j];
        lap[i][i] += w[i][j];
      }
    }
  }
  double bound = 0.0;
  for (std::size_t i = labeled; i < total; ++i) {
    double row = 0.0;
    for (std::size_t j = labeled; j < total; ++j) row += std::abs(lap[i][j]);
    bound = std::max(bound, row);
  }
  const double step = 1.0 / (2.0 * bound);
  std::vector<double> f(total, 0.0);
  std::copy(g.begin(), g.end(), f.begin());
  for (int iter = 0; iter < 5'000'000; ++iter) {
    double largest = 0.0;
    std::vector<double> grad(total - labeled, 0.0);
    for (std::size_t i = labeled; i < total; ++i) {
      double lf = 0.0;
      for (std::size_t j = 0; j < total; ++j) lf += lap[i][j] * f[j];
      grad[i - labeled] = 2.0 * lf;
      largest = std::max(largest, std::abs(grad[i - labeled]));
    }
    if (largest < 1e-14) break;
    for (std::size_t i = labeled; i < total; ++i) f[i] -= step * grad[i - labeled];
  }
  return {f.begin() + static_cast<std::ptrdiff_t>(labeled), f.end()};
}

/// Inverse of a symmetric positive definite matrix by Gauss-Jordan in long double.
inline std::vector<std::vector<long double>> inverse_extended(const DenseRows& a) {
  const std::size_t n = a.size();
  std::vector<std::vector<long double>> m(n, std::vector<long double>(2 * n, 0.0L));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m[i][j] = a[i][j];
    m[i][n + i] = 1.0L;
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(m[r][c]) > std::fabs(m[pivot][c])) pivot = r;
    }
    std::swap(m[c], m[pivot]);
    const long double p = m[c][c];
    for (auto& v : m[c]) v /= p;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || m[r][c] == 0.0L) continue;
      const long double factor = m[r][c];
      for (std::size_t k = 0; k < 2 * n; ++k) m[r][k] -= factor * m[c][k];
    }
  }
  std::vector<std::vector<long double>> inv(n, std::vector<long double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) inv[i][j] = m[i][n + j];
  }
  return inv;
}

// Greedy CART by brute force: every node scores every (feature, midpoint)
// pair by recomputing both children's squared error from scratch.
struct CartOracle {
  const DenseRows& x;
  const std::vector<double>& y;
  int max_depth;

  static double sse(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double total = 0.0;
    for (const double v : values) total += (v - mean) * (v - mean);
    return total;
  }

  std::vector<double> targets(const std::vector<std::size_t>& rows) const {
    std::vector<double> out;
    for (const auto r : rows) out.push_back(y[r]);
    return out;
  }

  /// Training SSE of the greedy tree grown from `rows`.
  double grow(const std::vector<std::size_t>& rows, int depth) const {
    const double here = sse(targets(rows));
    if (depth >= max_depth || rows.size() < 2) return here;
    double best_children = here;
    std::vector<std::size_t> best_left;
    std::vector<std::size_t> best_right;
    bool found = false;
    for (std::size_t f = 0; f < x.front().size(); ++f) {
      std::vector<double> values;
      for (const auto r : rows) values.push_back(x[r][f]);
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (std::size_t v = 0; v + 1 < values.size(); ++v) {
        const double threshold = 0.5 * (values[v] + values[v + 1]);
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (const auto r : rows) (x[r][f] < threshold ? left : right).push_back(r);
        const double children = sse(targets(left)) + sse(targets(right));
        if (children < best_children - 1e-12 * std::max(1.0, here)) {
          best_children = children;
          best_left = left;
          best_right = right;
          found = true;
        }
      }
    }
    if (!found) return here;
    return grow(best_left, depth + 1) + grow(best_right, depth + 1);
  }
};

/// Precision@k by sorting each query's documents (stable on score, descending).
inline double precision_by_sorting(const std::vector<double>& scores, const std::vector<double>& labels,
                                   const std::vector<std::int64_t>& qids, std::size_t k) {
  std::vector<std::int64_t> distinct = qids;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  double total = 0.0;
  for (const auto q : distinct) {
    std::vector<std::pair<double, std::size_t>> docs;
    for (std::size_t i = 0; i < qids.size(); ++i) {
      if (qids[i] == q) docs.emplace_back(scores[i], i);
    }
    std::stable_sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; r < std::min(k, docs.size()); ++r) total += labels[docs[r].second];
  }
  return total / static_cast<double>(distinct.size());
}

/// Scratch directory removed when the object goes out of scope.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("grbb_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    const auto p = file(name);
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace grbb::testing
