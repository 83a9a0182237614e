#include "grbb/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <Eigen/SparseCholesky>

namespace grbb {
namespace {

using Triplet = Eigen::Triplet<double>;

SparseMatrix assemble_laplacian(const SparseMatrix& weights, LaplacianKind kind) {
  const Eigen::Index size = weights.rows();
  Vector degree = Vector::Zero(size);
  for (Eigen::Index col = 0; col < weights.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(weights, col); it; ++it) degree(it.row()) += it.value();
  }
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(weights.nonZeros() + size));
  if (kind == LaplacianKind::combinatorial) {
    for (Eigen::Index i = 0; i < size; ++i) entries.emplace_back(i, i, degree(i));
    for (Eigen::Index col = 0; col < weights.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(weights, col); it; ++it) entries.emplace_back(it.row(), it.col(), -it.value());
    }
  } else {
    Vector inv_sqrt(size);
    for (Eigen::Index i = 0; i < size; ++i) inv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
    for (Eigen::Index i = 0; i < size; ++i) entries.emplace_back(i, i, degree(i) > 0.0 ? 1.0 : 0.0);
    for (Eigen::Index col = 0; col < weights.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(weights, col); it; ++it) {
        entries.emplace_back(it.row(), it.col(), -it.value() * inv_sqrt(it.row()) * inv_sqrt(it.col()));
      }
    }
  }
  SparseMatrix laplacian(size, size);
  laplacian.setFromTriplets(entries.begin(), entries.end());
  laplacian.makeCompressed();
  return laplacian;
}

void check_weights(const SparseMatrix& weights) {
  if (weights.rows() != weights.cols()) throw std::invalid_argument("weight matrix must be square");
  for (Eigen::Index col = 0; col < weights.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(weights, col); it; ++it) {
      if (!std::isfinite(it.value()) || it.value() < 0.0) {
        throw std::invalid_argument("edge weights must be finite and nonnegative");
      }
      if (it.row() == it.col() && it.value() != 0.0) throw std::invalid_argument("weight matrix diagonal must be zero");
      if (weights.coeff(it.col(), it.row()) != it.value()) throw std::invalid_argument("weight matrix must be symmetric");
    }
  }
}

}  // namespace

LaplacianSystem LaplacianSystem::from_weights(const SparseMatrix& weights, std::size_t labeled_count,
                                              LaplacianKind kind) {
  check_weights(weights);
  if (labeled_count > static_cast<std::size_t>(weights.rows())) {
    throw std::invalid_argument("labeled count exceeds graph size");
  }
  LaplacianSystem sys;
  sys.weights_ = weights;
  sys.weights_.makeCompressed();
  sys.laplacian_ = assemble_laplacian(sys.weights_, kind);
  sys.n_ = labeled_count;
  return sys;
}

SparseMatrix LaplacianSystem::block_ll() const {
  const auto n = static_cast<Eigen::Index>(n_);
  return laplacian_.block(0, 0, n, n);
}

SparseMatrix LaplacianSystem::block_lu() const {
  const auto n = static_cast<Eigen::Index>(n_);
  const auto m = static_cast<Eigen::Index>(unlabeled_count());
  return laplacian_.block(0, n, n, m);
}

SparseMatrix LaplacianSystem::block_uu() const {
  const auto n = static_cast<Eigen::Index>(n_);
  const auto m = static_cast<Eigen::Index>(unlabeled_count());
  return laplacian_.block(n, n, m, m);
}

Vector LaplacianSystem::apply(const Vector& f) const {
  if (static_cast<std::size_t>(f.size()) != size()) throw std::invalid_argument("vector length does not match graph size");
  return laplacian_ * f;
}

double LaplacianSystem::quadratic_form(const Vector& f) const { return f.dot(apply(f)); }

LaplacianSystem build_laplacian(const Matrix& points, std::size_t labeled_count, std::size_t k,
                                const KernelSpec& kernel, const MetricSpec& metric, LaplacianKind kind) {
  const auto total = static_cast<std::size_t>(points.rows());
  if (k < 1) throw std::invalid_argument("neighbor count k must be at least 1");
  if (k >= total) {
    throw std::invalid_argument("neighbor count k=" + std::to_string(k) + " must be below the number of inputs (" +
                                std::to_string(total) + ")");
  }
  if (labeled_count > total) throw std::invalid_argument("labeled count exceeds number of inputs");

  Matrix scaled = points;
  if (metric.kind == MetricSpec::Kind::standardized) {
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
      const double mean = scaled.col(j).mean();
      const double sd = std::sqrt((scaled.col(j).array() - mean).square().sum() / static_cast<double>(total));
      if (sd > 0.0) scaled.col(j) /= sd;
    }
  }
  bool degenerate = true;
  for (Eigen::Index i = 1; i < scaled.rows() && degenerate; ++i) degenerate = (scaled.row(i) == scaled.row(0));
  if (degenerate) {
    throw std::invalid_argument("degenerate dataset: all inputs are identical, so the neighbour graph has zero-variance geometry");
  }

  // Directed k-NN lists (squared distances), ties by index.
  std::vector<std::vector<std::pair<double, std::size_t>>> neighbours(total);
  std::vector<std::pair<double, std::size_t>> candidates;
  candidates.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    candidates.clear();
    const auto row_i = scaled.row(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < total; ++j) {
      if (j == i) continue;
      candidates.emplace_back((scaled.row(static_cast<Eigen::Index>(j)) - row_i).squaredNorm(), j);
    }
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end());
    neighbours[i].assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k));
  }

  double sigma = 0.0;
  if (kernel.kind == KernelSpec::Kind::heat) {
    if (kernel.bandwidth) {
      sigma = *kernel.bandwidth;
    } else {
      std::vector<double> dists;
      dists.reserve(total * k);
      for (const auto& list : neighbours) {
        for (const auto& [d2, j] : list) dists.push_back(std::sqrt(d2));
      }
      const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
      std::nth_element(dists.begin(), mid, dists.end());
      sigma = *mid;
      if (dists.size() % 2 == 0) {
        sigma = 0.5 * (sigma + *std::max_element(dists.begin(), mid));
      }
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw std::invalid_argument("heat kernel bandwidth must be positive (median neighbour distance is zero)");
    }
  }

  std::vector<Triplet> entries;
  entries.reserve(2 * total * k);
  for (std::size_t i = 0; i < total; ++i) {
    for (const auto& [d2, j] : neighbours[i]) {
      const double w = kernel.kind == KernelSpec::Kind::binary ? 1.0 : std::exp(-d2 / (2.0 * sigma * sigma));
      entries.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), w);
      entries.emplace_back(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i), w);
    }
  }
  SparseMatrix weights(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  // Duplicates arise when i and j list each other; the kernel value is
  // symmetric, so keeping one copy gives max(A, A').
  weights.setFromTriplets(entries.begin(), entries.end(), [](double a, double b) { return std::max(a, b); });
  weights.makeCompressed();

  LaplacianSystem sys;
  sys.weights_ = std::move(weights);
  sys.laplacian_ = assemble_laplacian(sys.weights_, kind);
  sys.n_ = labeled_count;
  sys.k_ = k;
  sys.kernel_ = kernel.kind;
  sys.bandwidth_ = sigma;
  return sys;
}

LaplacianSystem build_laplacian(const Dataset& ds, std::size_t k, const KernelSpec& kernel, const MetricSpec& metric,
                                LaplacianKind kind) {
  return build_laplacian(ds.features(), ds.labeled_count(), k, kernel, metric, kind);
}

struct PropagationOperator::Factor {
  SparseMatrix lu_transposed;  // m x n
  Eigen::LDLT<Matrix> dense;
  Eigen::SimplicialLDLT<SparseMatrix> sparse;
};

PropagationOperator propagation_operator(const LaplacianSystem& sys, double ridge, std::size_t dense_limit) {
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw std::invalid_argument("ridge must be finite and nonnegative");
  PropagationOperator op;
  op.n_ = sys.labeled_count();
  op.m_ = sys.unlabeled_count();
  op.ridge_ = ridge;
  auto factor = std::make_shared<PropagationOperator::Factor>();
  if (op.m_ == 0) {
    op.factor_ = std::move(factor);
    return op;
  }

  factor->lu_transposed = SparseMatrix(sys.block_lu().transpose());
  SparseMatrix uu = sys.block_uu();
  for (Eigen::Index i = 0; i < uu.rows(); ++i) uu.coeffRef(i, i) += ridge;

  Vector pivots;
  op.dense_ = op.m_ < dense_limit;
  if (op.dense_) {
    factor->dense.compute(Matrix(uu));
    if (factor->dense.info() != Eigen::Success) throw std::domain_error("dense LDLT of L_UU failed");
    pivots = factor->dense.vectorD();
  } else {
    factor->sparse.compute(uu);
    if (factor->sparse.info() != Eigen::Success) throw std::domain_error("sparse LDLT of L_UU failed");
    pivots = factor->sparse.vectorD();
  }
  const double scale = std::max(1.0, pivots.cwiseAbs().maxCoeff());
  if (pivots.minCoeff() <= 1e-12 * scale) {
    throw std::domain_error(
        "L_UU + ridge*I is singular: some unlabeled inputs are not connected to any labeled input; "
        "check graph connectivity or use a positive ridge");
  }
  op.factor_ = std::move(factor);
  return op;
}

Vector PropagationOperator::apply(std::span<const double> grad_labeled) const {
  if (grad_labeled.size() != n_) {
    throw std::invalid_argument("propagate: expected " + std::to_string(n_) + " labeled gradients, got " +
                                std::to_string(grad_labeled.size()));
  }
  if (m_ == 0) return Vector(0);
  const Eigen::Map<const Vector> g(grad_labeled.data(), static_cast<Eigen::Index>(grad_labeled.size()));
  const Vector rhs = factor_->lu_transposed * g;
  Vector out = dense_ ? Vector(factor_->dense.solve(rhs)) : Vector(factor_->sparse.solve(rhs));
  return -out;
}

Vector propagate(const PropagationOperator& op, std::span<const double> grad_labeled) { return op.apply(grad_labeled); }

void write_coordinate_text(const SparseMatrix& matrix, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> entries;
  for (Eigen::Index col = 0; col < matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) entries.emplace_back(it.row(), it.col(), it.value());
  }
  std::sort(entries.begin(), entries.end());
  for (const auto& [r, c, v] : entries) out << r << ' ' << c << ' ' << csv::format_double(v) << '\n';
}

}  // namespace grbb
