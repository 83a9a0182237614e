#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "grbb/dataset.hpp"
#include "grbb/graph.hpp"

namespace grbb {

/// Diagonal curvature term used for labeled inputs in the Fisher matrix.
enum class HessianMode {
  /// s^2 (1 - s), the form printed alongside the closed-form Fisher matrix.
  paper,
  /// s (1 - s), the second derivative of the logistic loss.
  logistic,
};

std::string to_string(HessianMode mode);
HessianMode parse_hessian_mode(const std::string& name);

struct VarianceReport {
  Matrix fisher;
  /// Diagonal of the inverse Fisher matrix, V[H_i].
  Vector per_input_variance;
  /// (1 / (n + m)) sum_i (s_i (1 - s_i))^2 V[H_i], with s_i = sigmoid(H_i).
  double avg_link_variance = 0.0;
  double lambda = 0.0;
  double ridge_added = 0.0;
  HessianMode mode = HessianMode::paper;
  std::size_t n = 0;
  std::size_t m = 0;
};

/// Dense Delta + lambda L, with Delta nonzero only on labeled rows.
Matrix fisher_information(const Vector& scores, const LaplacianSystem& sys, double lambda,
                          HessianMode mode = HessianMode::paper);

inline constexpr double kFisherRidge = 1e-10;
inline constexpr double kFisherEigenFloor = 1e-12;

/// Delta-method lower bound on the average variance of sigmoid(H).
///
/// A ridge of kFisherRidge is added when the smallest eigenvalue of the
/// Fisher matrix is below kFisherEigenFloor. Throws std::domain_error if the
/// (ridged) matrix still has a non-positive pivot.
VarianceReport variance_lower_bound(const Vector& scores, const LaplacianSystem& sys, double lambda,
                                    HessianMode mode = HessianMode::paper);

/// One (labeled count, mu) cell of a variance sweep, averaged over seeds.
struct VarianceCell {
  std::size_t labeled_count = 0;
  double mu = 0.0;
  std::size_t seeds = 0;
  double avg_link_variance = 0.0;
  double lambda = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
  HessianMode mode = HessianMode::paper;
};

/// CSV: labeled_count,mu,seeds,avg_link_variance,lambda,n,m,hessian_mode
void write_variance_csv(const std::vector<VarianceCell>& cells, const std::string& path);

}  // namespace grbb
