#include <gtest/gtest.h>

#include <sstream>

#include "commands.hpp"
#include "grbb/grbb.hpp"
#include "support/oracles.hpp"

using namespace grbb;
namespace oracle = grbb::testing;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(run_cli({"synth", "--out", data(), "--truth", truth(), "--noise", "0.05", "--seed", "3"}).code, 0);
  }

  std::string data() const { return dir_.file("moons.csv"); }
  std::string truth() const { return dir_.file("moons.truth.csv"); }
  std::string file(const std::string& name) const { return dir_.file(name); }

  oracle::TempDir dir_{"cli"};
};

}  // namespace

TEST_F(Cli, SynthWritesTrainingAndTruthFiles) {
  const auto train = load_dataset(data(), std::nullopt);
  EXPECT_EQ(train.rows(), 400u);
  EXPECT_EQ(train.labeled_count(), 2u);
  const auto truth_ds = load_dataset(truth(), std::nullopt);
  EXPECT_EQ(truth_ds.labeled_count(), 400u);
}

TEST_F(Cli, SynthRejectsUnknownShape) {
  EXPECT_EQ(run_cli({"synth", "--shape", "spiral", "--out", file("x.csv")}).code, cli::kExitUsage);
}

TEST_F(Cli, TrainWritesModelAndLog) {
  const auto r = run_cli({"train", "--data", data(), "--trainer", "grbb", "--mu", "1.0", "--lambda", "0.1", "--k", "9",
                          "--trees", "200", "--out", file("m.json"), "--log", file("m.log.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto model = load_model(file("m.json"));
  EXPECT_EQ(model.model.size(), 200u);
  EXPECT_EQ(model.training_fingerprint, load_dataset(data(), std::nullopt).fingerprint());
  EXPECT_EQ(csv::read_table_file(file("m.log.csv")).rows.size(), 200u);
}

TEST_F(Cli, MissingDataIsUsageError) {
  const auto r = run_cli({"train", "--trees", "5"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("--data"), std::string::npos);
}

TEST_F(Cli, UnknownSubcommandIsUsageError) { EXPECT_EQ(run_cli({"fly"}).code, cli::kExitUsage); }

TEST_F(Cli, BadTrainerNameIsUsageError) {
  EXPECT_EQ(run_cli({"train", "--data", data(), "--trainer", "xgboost"}).code, cli::kExitUsage);
}

TEST_F(Cli, InvalidValueIsRuntimeFailure) {
  EXPECT_EQ(run_cli({"train", "--data", data(), "--lr", "-1", "--out", file("m.json")}).code, cli::kExitFailure);
  EXPECT_EQ(run_cli({"train", "--data", file("missing.csv"), "--out", file("m.json")}).code, cli::kExitFailure);
}

TEST_F(Cli, GrbbWithoutUnlabeledRowsWarnsAndMatchesGbrt) {
  const auto r = run_cli({"train", "--data", truth(), "--trainer", "grbb", "--trees", "10", "--out", file("g.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  ASSERT_EQ(run_cli({"train", "--data", truth(), "--trainer", "gbrt", "--trees", "10", "--out", file("b.json")}).code, 0);
  const auto g = load_model(file("g.json"));
  const auto b = load_model(file("b.json"));
  const Matrix probe = Matrix::Random(30, 2);
  EXPECT_EQ(g.model.predict_rows(probe), b.model.predict_rows(probe));
}

TEST_F(Cli, EvalWithTreeLimitUsesOneTree) {
  ASSERT_EQ(run_cli({"train", "--data", data(), "--trees", "20", "--out", file("m.json")}).code, 0);
  const auto r = run_cli({"eval", "--model", file("m.json"), "--test", truth(), "--tree-limit", "1", "--out",
                          file("e.csv"), "--trace", file("t.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = csv::read_table_file(file("e.csv"));
  EXPECT_EQ(table.rows[0][table.column("trees")], "1");
  EXPECT_EQ(table.rows[0][table.column("tree_limit")], "1");
  EXPECT_EQ(csv::read_table_file(file("t.csv")).rows.size(), 20u);
}

TEST_F(Cli, EvalWarnsOnFingerprintMismatch) {
  ASSERT_EQ(run_cli({"train", "--data", data(), "--trees", "5", "--out", file("m.json")}).code, 0);
  const auto r = run_cli({"eval", "--model", file("m.json"), "--test", truth(), "--data", truth()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("fingerprint"), std::string::npos);
}

TEST_F(Cli, EvalRejectsUnlabeledTestData) {
  ASSERT_EQ(run_cli({"train", "--data", data(), "--trees", "5", "--out", file("m.json")}).code, 0);
  EXPECT_EQ(run_cli({"eval", "--model", file("m.json"), "--test", data()}).code, cli::kExitFailure);
}

TEST_F(Cli, SweepWritesRowPerSeedAndMu) {
  const auto r = run_cli({"sweep", "--data", truth(), "--test", truth(), "--labeled-count", "10", "--mu", "0,1,4",
                          "--seeds", "5", "--trees", "5", "--out", file("curve.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = csv::read_table_file(file("curve.csv"));
  EXPECT_EQ(table.rows.size(), 15u);
  EXPECT_EQ(table.header.front(), "trainer");
}

TEST_F(Cli, SweepNeedsTestData) {
  EXPECT_EQ(run_cli({"sweep", "--data", truth(), "--trees", "2"}).code, cli::kExitUsage);
}

TEST_F(Cli, VarianceWritesOneRowPerCell) {
  const auto r = run_cli({"variance", "--data", truth(), "--labeled-counts", "2,4,16", "--mu", "0,1", "--seeds", "2",
                          "--trees", "10", "--out", file("v.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = csv::read_table_file(file("v.csv"));
  ASSERT_EQ(table.rows.size(), 6u);
  EXPECT_EQ(table.rows[0][table.column("seeds")], "2");
}

TEST_F(Cli, VarianceForSavedModel) {
  ASSERT_EQ(run_cli({"train", "--data", data(), "--trees", "10", "--out", file("m.json")}).code, 0);
  const auto r = run_cli({"variance", "--data", data(), "--model", file("m.json"), "--out", file("v.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.err.empty()) << r.err;
  EXPECT_EQ(csv::read_table_file(file("v.csv")).rows.size(), 1u);
}

TEST_F(Cli, FixedSeedRunsAreByteIdentical) {
  for (const std::string tag : {"a", "b"}) {
    ASSERT_EQ(run_cli({"train", "--data", data(), "--trees", "30", "--mu", "0.1", "--out", file(tag + ".json"), "--log",
                       file(tag + ".log")})
                  .code,
              0);
    ASSERT_EQ(run_cli({"eval", "--model", file(tag + ".json"), "--test", truth(), "--out", file(tag + ".eval")}).code, 0);
  }
  EXPECT_EQ(oracle::read_file(file("a.json")), oracle::read_file(file("b.json")));
  EXPECT_EQ(oracle::read_file(file("a.eval")), oracle::read_file(file("b.eval")));
}

TEST_F(Cli, HelpExitsCleanly) {
  const auto r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("train"), std::string::npos);
}
