#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "grbb/csv.hpp"
#include "grbb/dataset.hpp"
#include "support/oracles.hpp"

using namespace grbb;
using grbb::testing::TempDir;

namespace {

Dataset small_dataset(std::size_t labeled, std::size_t unlabeled, std::uint64_t seed = 3) {
  Rng rng(seed);
  const std::size_t total = labeled + unlabeled;
  Matrix x(static_cast<Eigen::Index>(total), 2);
  std::vector<std::optional<double>> y(total);
  for (std::size_t i = 0; i < total; ++i) {
    x(static_cast<Eigen::Index>(i), 0) = rng.normal();
    x(static_cast<Eigen::Index>(i), 1) = rng.normal();
  }
  // interleave labeled and unlabeled rows so the stable reorder is exercised
  std::size_t placed = 0;
  for (std::size_t i = 0; i < total && placed < labeled; i += (total / std::max<std::size_t>(labeled, 1))) {
    y[i] = static_cast<double>(placed % 2);
    ++placed;
  }
  for (std::size_t i = 0; placed < labeled; ++i) {
    if (!y[i]) {
      y[i] = 1.0;
      ++placed;
    }
  }
  return Dataset::from_rows(x, y, {1.0, 1.0});
}

}  // namespace

TEST(Csv, SplitTrimsSpacesAndCarriageReturn) {
  EXPECT_EQ(csv::split_line(" a, b ,c\r"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(csv::split_line("1,,2"), (std::vector<std::string>{"1", "", "2"}));
}

TEST(Csv, ParseDoubleIsStrict) {
  double v = 0.0;
  EXPECT_TRUE(csv::parse_double("2.5e-3", v));
  EXPECT_DOUBLE_EQ(v, 2.5e-3);
  EXPECT_FALSE(csv::parse_double("2.5x", v));
  EXPECT_FALSE(csv::parse_double("", v));
  EXPECT_FALSE(csv::parse_double("nan", v));
  EXPECT_FALSE(csv::parse_double("inf", v));
}

TEST(Csv, FormatDoubleRoundTrips) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double original = rng.normal(0.0, 1e3) * std::pow(10.0, rng.uniform(-20.0, 20.0));
    double back = 0.0;
    ASSERT_TRUE(csv::parse_double(csv::format_double(original), back));
    EXPECT_EQ(back, original);
  }
}

TEST(Csv, ReadTableReportsRaggedRowLine) {
  std::istringstream in("a,b\n1,2\n3\n");
  try {
    (void)csv::read_table(in);
    FAIL() << "ragged row accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LoadDataset, CountsLabeledAndUnlabeledRows) {
  TempDir dir("load");
  const auto path = dir.write("d.csv", "label,f1,f2\n1,0.5,1\n,0.1,2\n0,0.3,3\n,0.9,4\n");
  const Dataset ds = load_dataset(path, std::nullopt);
  EXPECT_EQ(ds.labeled_count(), 2u);
  EXPECT_EQ(ds.unlabeled_count(), 2u);
  EXPECT_EQ(ds.dims(), 2u);
  EXPECT_EQ(std::vector<double>(ds.feature_costs().begin(), ds.feature_costs().end()),
            (std::vector<double>{1.0, 1.0}));
}

TEST(LoadDataset, LabeledRowsComeFirstInStableOrder) {
  TempDir dir("order");
  const auto path = dir.write("d.csv", "label,f1\n,10\n1,11\n,12\n0,13\n-1,14\n");
  const Dataset ds = load_dataset(path, std::nullopt);
  ASSERT_EQ(ds.labeled_count(), 3u);
  EXPECT_EQ(std::vector<std::size_t>(ds.source_rows().begin(), ds.source_rows().end()),
            (std::vector<std::size_t>{1, 3, 4, 0, 2}));
  EXPECT_EQ(std::vector<double>(ds.labels().begin(), ds.labels().end()), (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(ds.features()(0, 0), 11.0);
  EXPECT_EQ(ds.features()(3, 0), 10.0);
}

TEST(LoadDataset, ReadsCostRow) {
  TempDir dir("costs");
  const auto data = dir.write("d.csv", "label,f1,f2\n1,0,0\n");
  const auto costs = dir.write("c.csv", "0.5,2.0\n");
  const Dataset ds = load_dataset(data, costs);
  EXPECT_EQ(std::vector<double>(ds.feature_costs().begin(), ds.feature_costs().end()),
            (std::vector<double>{0.5, 2.0}));
}

TEST(LoadDataset, ReadsNamedCosts) {
  TempDir dir("named");
  const auto data = dir.write("d.csv", "label,alpha,beta\n1,0,0\n");
  const auto costs = dir.write("c.csv", "beta,3\nalpha,0.25\n");
  const Dataset ds = load_dataset(data, costs);
  EXPECT_EQ(ds.feature_costs()[0], 0.25);
  EXPECT_EQ(ds.feature_costs()[1], 3.0);
}

TEST(LoadDataset, RowWidthErrorNamesLine) {
  TempDir dir("width");
  const auto path = dir.write("d.csv", "label,f1,f2\n1,0,0\n0,1,2,3\n");
  try {
    (void)load_dataset(path, std::nullopt);
    FAIL() << "wide row accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(LoadDataset, RejectsNegativeCost) {
  TempDir dir("neg");
  const auto data = dir.write("d.csv", "label,f1,f2\n1,0,0\n");
  const auto costs = dir.write("c.csv", "0.5,-2\n");
  EXPECT_THROW((void)load_dataset(data, costs), ValidationError);
}

TEST(LoadDataset, RejectsNoLabeledRows) {
  TempDir dir("nolab");
  const auto path = dir.write("d.csv", "label,f1\n,1\n,2\n");
  EXPECT_THROW((void)load_dataset(path, std::nullopt), ValidationError);
}

TEST(LoadDataset, RejectsNonFiniteFeature) {
  TempDir dir("nan");
  const auto path = dir.write("d.csv", "label,f1\n1,nan\n");
  EXPECT_THROW((void)load_dataset(path, std::nullopt), ParseError);
}

TEST(LoadDataset, ReadsQueryIds) {
  TempDir dir("qid");
  const auto path = dir.write("d.csv", "label,qid,f1\n1,7,0\n0,7,1\n1,9,2\n");
  const Dataset ds = load_dataset(path, std::nullopt);
  ASSERT_TRUE(ds.has_query_ids());
  EXPECT_EQ(ds.dims(), 1u);
  EXPECT_EQ(ds.query_ids()[2], 9);
}

TEST(SaveDataset, WritesFileOrderAndReloadsIdentically) {
  TempDir dir("save");
  const auto path = dir.write("d.csv", "label,qid,f1,f2\n,1,0.1,2\n1,1,0.30000000000000004,-1e-300\n0,2,5,6\n");
  const Dataset ds = load_dataset(path, std::nullopt);
  const auto out = dir.file("out.csv");
  save_dataset(ds, out);
  const Dataset again = load_dataset(out, std::nullopt);
  EXPECT_EQ(again.fingerprint(), ds.fingerprint());
  const auto table = csv::read_table_file(out);
  EXPECT_EQ(table.rows.front()[table.column("label")], "");
}

TEST(Subsample, KeepsRequestedLabeledCount) {
  const Dataset ds = small_dataset(100, 50);
  const Dataset sub = subsample_labeled(ds, 20, 7, false);
  EXPECT_EQ(sub.labeled_count(), 20u);
  EXPECT_EQ(sub.unlabeled_count(), 50u + 80u);
}

TEST(Subsample, IsDeterministicInSeed) {
  const Dataset ds = small_dataset(100, 50);
  EXPECT_EQ(subsample_labeled(ds, 20, 7, false).fingerprint(), subsample_labeled(ds, 20, 7, false).fingerprint());
  EXPECT_NE(subsample_labeled(ds, 20, 7, false).fingerprint(), subsample_labeled(ds, 20, 8, false).fingerprint());
}

TEST(Subsample, FullCountKeepsSameLabeledRows) {
  const Dataset ds = small_dataset(30, 10);
  const Dataset sub = subsample_labeled(ds, 30, 1, false);
  std::set<std::size_t> before(ds.source_rows().begin(), ds.source_rows().begin() + 30);
  std::set<std::size_t> after(sub.source_rows().begin(), sub.source_rows().begin() + 30);
  EXPECT_EQ(before, after);
  EXPECT_EQ(sub.unlabeled_count(), ds.unlabeled_count());
}

TEST(Subsample, RejectsTooLargeCount) { EXPECT_THROW((void)subsample_labeled(small_dataset(5, 5), 6, 1, false), ValidationError); }

TEST(Subsample, ByQueryLabelsWholeQueries) {
  Matrix x(12, 1);
  std::vector<std::optional<double>> y(12);
  std::vector<std::int64_t> q(12);
  for (int i = 0; i < 12; ++i) {
    x(i, 0) = i;
    y[static_cast<std::size_t>(i)] = static_cast<double>(i % 2);
    q[static_cast<std::size_t>(i)] = i / 3;  // four queries of three documents
  }
  const Dataset ds = Dataset::from_rows(x, y, {1.0}, q);
  const Dataset sub = subsample_labeled(ds, 2, 5, true);
  ASSERT_EQ(sub.labeled_count(), 6u);
  std::set<std::int64_t> chosen;
  for (std::size_t i = 0; i < sub.labeled_count(); ++i) chosen.insert(sub.query_ids()[i]);
  EXPECT_EQ(chosen.size(), 2u);
  for (std::size_t i = sub.labeled_count(); i < sub.rows(); ++i) EXPECT_FALSE(chosen.count(sub.query_ids()[i]));
}

TEST(Split, ByRowsMovesLabeledRowsToTest) {
  TempDir dir("split");
  const auto data = dir.write("d.csv", "label,f1\n1,0\n0,1\n,2\n1,3\n");
  const auto split_file = dir.write("s.txt", "3\n1\n");
  const Dataset ds = load_dataset(data, std::nullopt);
  const auto split = split_by_rows(ds, load_split_indices(split_file));
  EXPECT_EQ(split.test.rows(), 2u);
  EXPECT_EQ(split.test.labeled_count(), 2u);
  EXPECT_EQ(split.train.rows(), 2u);
  EXPECT_EQ(split.train.labeled_count(), 1u);
  EXPECT_THROW((void)split_by_rows(ds, std::vector<std::size_t>{2}), ValidationError);
}

TEST(Split, RandomSplitIsDisjoint) {
  const Dataset ds = small_dataset(40, 10);
  const auto split = random_split(ds, 0.25, 4);
  EXPECT_EQ(split.test.rows(), 10u);
  std::set<std::size_t> train(split.train.source_rows().begin(), split.train.source_rows().end());
  for (const auto r : split.test.source_rows()) EXPECT_FALSE(train.count(r));
  EXPECT_EQ(split.train.rows() + split.test.rows(), ds.rows());
}
