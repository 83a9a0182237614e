#include <gtest/gtest.h>

#include <cmath>

#include "grbb/variance.hpp"
#include "support/oracles.hpp"

using namespace grbb;
namespace oracle = grbb::testing;

namespace {

LaplacianSystem single_node(std::size_t labeled) {
  SparseMatrix w(1, 1);
  return LaplacianSystem::from_weights(w, labeled);
}

double avg_oracle(const oracle::DenseRows& w, std::size_t labeled, const std::vector<double>& h, double lambda,
                  HessianMode mode) {
  const std::size_t n = w.size();
  oracle::DenseRows fisher(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) {
        fisher[i][j] -= lambda * w[i][j];
        fisher[i][i] += lambda * w[i][j];
      }
    }
    if (i < labeled) {
      const double s = 1.0 / (1.0 + std::exp(-h[i]));
      fisher[i][i] += mode == HessianMode::paper ? s * s * (1.0 - s) : s * (1.0 - s);
    }
  }
  const auto inv = oracle::inverse_extended(fisher);
  long double total = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double s = 1.0L / (1.0L + std::exp(-static_cast<long double>(h[i])));
    total += (s * (1.0L - s)) * (s * (1.0L - s)) * inv[i][i];
  }
  return static_cast<double>(total / static_cast<long double>(n));
}

}  // namespace

TEST(Fisher, ScalarCases) {
  const Vector h = Vector::Zero(1);
  EXPECT_EQ(fisher_information(h, single_node(1), 0.0, HessianMode::paper)(0, 0), 0.125);
  EXPECT_EQ(fisher_information(h, single_node(1), 0.0, HessianMode::logistic)(0, 0), 0.25);
}

TEST(Fisher, TwoNodeEdge) {
  const auto sys = LaplacianSystem::from_weights(oracle::to_sparse({{0, 1}, {1, 0}}), 2);
  const Matrix fisher = fisher_information(Vector::Zero(2), sys, 2.0, HessianMode::logistic);
  Matrix expected(2, 2);
  expected << 2.25, -2.0, -2.0, 2.25;
  EXPECT_EQ(fisher, expected);
}

TEST(Fisher, UnlabeledRowsGetNoCurvature) {
  const auto sys = LaplacianSystem::from_weights(oracle::to_sparse({{0, 1}, {1, 0}}), 1);
  const Matrix fisher = fisher_information(Vector::Zero(2), sys, 1.0, HessianMode::logistic);
  EXPECT_EQ(fisher(0, 0), 1.25);
  EXPECT_EQ(fisher(1, 1), 1.0);
}

TEST(Fisher, RejectsNegativeLambda) {
  EXPECT_THROW((void)fisher_information(Vector::Zero(1), single_node(1), -0.1), std::invalid_argument);
}

TEST(VarianceBound, ScalarChain) {
  const Vector h = Vector::Zero(1);
  const auto paper = variance_lower_bound(h, single_node(1), 0.0, HessianMode::paper);
  EXPECT_EQ(paper.avg_link_variance, 0.5);
  EXPECT_EQ(paper.ridge_added, 0.0);
  const auto logistic = variance_lower_bound(h, single_node(1), 0.0, HessianMode::logistic);
  EXPECT_EQ(logistic.avg_link_variance, 0.25);
}

TEST(VarianceBound, MatchesExtendedPrecisionInverse) {
  Rng rng(71);
  for (int trial = 0; trial < 5; ++trial) {
    const auto w = oracle::random_connected_weights(rng, 30, 0.1);
    const std::size_t labeled = 3 + static_cast<std::size_t>(rng.below(10));
    const auto sys = LaplacianSystem::from_weights(oracle::to_sparse(w), labeled);
    std::vector<double> h(30);
    for (auto& v : h) v = rng.normal();
    for (const auto mode : {HessianMode::paper, HessianMode::logistic}) {
      const auto report = variance_lower_bound(Eigen::Map<const Vector>(h.data(), 30), sys, 0.5, mode);
      const double expected = avg_oracle(w, labeled, h, 0.5, mode);
      EXPECT_NEAR(report.avg_link_variance, expected, 1e-9 * expected);
      EXPECT_EQ(report.n, labeled);
      EXPECT_EQ(report.m, 30 - labeled);
    }
  }
}

TEST(VarianceBound, SingularFisherGetsRidge) {
  // lambda = 0 leaves the unlabeled node with zero curvature
  const auto sys = LaplacianSystem::from_weights(oracle::to_sparse({{0, 1}, {1, 0}}), 1);
  const auto report = variance_lower_bound(Vector::Zero(2), sys, 0.0);
  EXPECT_EQ(report.ridge_added, kFisherRidge);
  EXPECT_TRUE(std::isfinite(report.avg_link_variance));
}

TEST(VarianceBound, ShrinksWithMoreLabels) {
  Rng rng(72);
  const auto w = oracle::random_connected_weights(rng, 25, 0.2);
  double previous = std::numeric_limits<double>::infinity();
  for (const std::size_t labeled : {1u, 5u, 15u, 25u}) {
    const auto sys = LaplacianSystem::from_weights(oracle::to_sparse(w), labeled);
    const double avg = variance_lower_bound(Vector::Zero(25), sys, 0.1).avg_link_variance;
    EXPECT_LT(avg, previous);
    previous = avg;
  }
}

TEST(VarianceCsv, WritesHeaderAndRows) {
  oracle::TempDir dir("var");
  std::vector<VarianceCell> cells{{2, 0.0, 10, 1.5, 0.01, 2, 398, HessianMode::paper},
                                  {4, 0.25, 10, 1.25, 0.01, 4, 396, HessianMode::logistic}};
  write_variance_csv(cells, dir.file("v.csv"));
  const auto table = csv::read_table_file(dir.file("v.csv"));
  EXPECT_EQ(table.header, (std::vector<std::string>{"labeled_count", "mu", "seeds", "avg_link_variance", "lambda", "n",
                                                    "m", "hessian_mode"}));
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[1][table.column("hessian_mode")], "logistic");
  EXPECT_EQ(table.rows[1][table.column("mu")], "0.25");
}
