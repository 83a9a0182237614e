#include "grbb/variance.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fstream>
#include <stdexcept>

#include "grbb/boosting.hpp"

namespace grbb {

std::string to_string(HessianMode mode) { return mode == HessianMode::paper ? "paper" : "logistic"; }

HessianMode parse_hessian_mode(const std::string& name) {
  if (name == "paper") return HessianMode::paper;
  if (name == "logistic") return HessianMode::logistic;
  throw std::invalid_argument("unknown hessian mode '" + name + "' (expected paper or logistic)");
}

Matrix fisher_information(const Vector& scores, const LaplacianSystem& sys, double lambda, HessianMode mode) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and nonnegative");
  if (static_cast<std::size_t>(scores.size()) != sys.size()) {
    throw std::invalid_argument("score vector length does not match the Laplacian system");
  }
  Matrix fisher = lambda * Matrix(sys.laplacian());
  for (std::size_t i = 0; i < sys.labeled_count(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double s = sigmoid(scores(ii));
    fisher(ii, ii) += mode == HessianMode::paper ? s * s * (1.0 - s) : s * (1.0 - s);
  }
  return fisher;
}

VarianceReport variance_lower_bound(const Vector& scores, const LaplacianSystem& sys, double lambda,
                                    HessianMode mode) {
  VarianceReport report;
  report.fisher = fisher_information(scores, sys, lambda, mode);
  report.lambda = lambda;
  report.mode = mode;
  report.n = sys.labeled_count();
  report.m = sys.unlabeled_count();

  const Eigen::Index size = report.fisher.rows();
  Matrix system = report.fisher;
  const Eigen::SelfAdjointEigenSolver<Matrix> eigen(system, Eigen::EigenvaluesOnly);
  if (eigen.info() != Eigen::Success) throw std::domain_error("eigenvalue estimate of the Fisher matrix failed");
  if (eigen.eigenvalues().minCoeff() < kFisherEigenFloor) {
    report.ridge_added = kFisherRidge;
    system.diagonal().array() += kFisherRidge;
  }
  // LDLT keeps scalar and diagonal systems exact (no square roots).
  const Eigen::LDLT<Matrix> chol(system);
  if (chol.info() != Eigen::Success || !chol.isPositive() || !(chol.vectorD().minCoeff() > 0.0)) {
    throw std::domain_error("Fisher information is singular; add labeled inputs, raise lambda or use a ridge");
  }
  const Matrix inverse = chol.solve(Matrix::Identity(size, size));
  report.per_input_variance = inverse.diagonal();

  double total = 0.0;
  for (Eigen::Index i = 0; i < size; ++i) {
    const double s = sigmoid(scores(i));
    const double slope = s * (1.0 - s);
    total += slope * slope * report.per_input_variance(i);
  }
  report.avg_link_variance = size > 0 ? total / static_cast<double>(size) : 0.0;
  return report;
}

void write_variance_csv(const std::vector<VarianceCell>& cells, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "labeled_count,mu,seeds,avg_link_variance,lambda,n,m,hessian_mode\n";
  for (const auto& c : cells) {
    out << c.labeled_count << ',' << csv::format_double(c.mu) << ',' << c.seeds << ','
        << csv::format_double(c.avg_link_variance) << ',' << csv::format_double(c.lambda) << ',' << c.n << ',' << c.m
        << ',' << to_string(c.mode) << '\n';
  }
}

}  // namespace grbb
