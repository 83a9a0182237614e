#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "grbb/dataset.hpp"

namespace grbb {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct KernelSpec {
  enum class Kind { binary, heat };
  Kind kind = Kind::binary;
  /// Heat-kernel sigma; the median k-NN distance is used when unset.
  std::optional<double> bandwidth;
};

struct MetricSpec {
  enum class Kind {
    euclidean,
    /// Euclidean after scaling each feature to unit standard deviation.
    standardized,
  };
  Kind kind = Kind::euclidean;
};

enum class LaplacianKind {
  /// L = D - W
  combinatorial,
  /// L = I - D^{-1/2} W D^{-1/2}
  normalized,
};

/// Similarity graph over all inputs and its Laplacian, split into the
/// labeled block [0, n) and unlabeled block [n, n + m).
class LaplacianSystem {
 public:
  /// Wraps an explicit symmetric weight matrix (nonnegative, zero diagonal).
  static LaplacianSystem from_weights(const SparseMatrix& weights, std::size_t labeled_count,
                                      LaplacianKind kind = LaplacianKind::combinatorial);

  const SparseMatrix& weights() const noexcept { return weights_; }
  const SparseMatrix& laplacian() const noexcept { return laplacian_; }
  SparseMatrix block_ll() const;
  SparseMatrix block_lu() const;
  SparseMatrix block_uu() const;

  std::size_t labeled_count() const noexcept { return n_; }
  std::size_t unlabeled_count() const noexcept { return static_cast<std::size_t>(laplacian_.rows()) - n_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(laplacian_.rows()); }

  std::size_t neighbor_count() const noexcept { return k_; }
  KernelSpec::Kind kernel() const noexcept { return kernel_; }
  double bandwidth() const noexcept { return bandwidth_; }

  /// L f
  Vector apply(const Vector& f) const;
  /// f' L f
  double quadratic_form(const Vector& f) const;

 private:
  friend LaplacianSystem build_laplacian(const Matrix&, std::size_t, std::size_t, const KernelSpec&,
                                         const MetricSpec&, LaplacianKind);

  SparseMatrix weights_;
  SparseMatrix laplacian_;
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  KernelSpec::Kind kernel_ = KernelSpec::Kind::binary;
  double bandwidth_ = 0.0;
};

/// Symmetrized k-NN graph: W = max(A, A') for the directed k-NN adjacency A.
/// Rows of `points` follow the labeled-first convention with `labeled_count` labeled rows.
/// Neighbour ties are broken by lower row index.
LaplacianSystem build_laplacian(const Matrix& points, std::size_t labeled_count, std::size_t k,
                                const KernelSpec& kernel = {}, const MetricSpec& metric = {},
                                LaplacianKind kind = LaplacianKind::combinatorial);

LaplacianSystem build_laplacian(const Dataset& ds, std::size_t k, const KernelSpec& kernel = {},
                                const MetricSpec& metric = {}, LaplacianKind kind = LaplacianKind::combinatorial);

/// Cached map from labeled gradients to the unlabeled gradients that
/// minimise [g_L, g_U] L [g_L, g_U]', i.e. g_U = -(L_UU + ridge I)^{-1} L_LU' g_L.
///
/// The factorization of L_UU is computed once at construction. Copies share it.
class PropagationOperator {
 public:
  std::size_t labeled_count() const noexcept { return n_; }
  std::size_t unlabeled_count() const noexcept { return m_; }
  double ridge() const noexcept { return ridge_; }
  bool dense() const noexcept { return dense_; }

  Vector apply(std::span<const double> grad_labeled) const;

 private:
  friend PropagationOperator propagation_operator(const LaplacianSystem&, double, std::size_t);
  struct Factor;

  std::shared_ptr<const Factor> factor_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  double ridge_ = 0.0;
  bool dense_ = true;
};

inline constexpr double kDefaultRidge = 1e-8;
inline constexpr std::size_t kDenseFactorLimit = 2000;

/// Factorizes L_UU + ridge I. Uses a dense LDLT when m < dense_limit and a
/// sparse simplicial LDLT otherwise. Throws std::domain_error when the
/// shifted block is numerically singular.
PropagationOperator propagation_operator(const LaplacianSystem& sys, double ridge = kDefaultRidge,
                                         std::size_t dense_limit = kDenseFactorLimit);

Vector propagate(const PropagationOperator& op, std::span<const double> grad_labeled);

/// Writes `row col value` lines (zero-based), upper and lower triangle both.
void write_coordinate_text(const SparseMatrix& matrix, const std::string& path);

}  // namespace grbb
