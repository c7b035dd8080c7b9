#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "casnsc/commands.hpp"
#include "casnsc/errors.hpp"
#include "casnsc/io.hpp"

using namespace casnsc;
using namespace casnsc::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("casnsc-cli-") + info->test_suite_name() + "-" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static RunConfig small() {
    RunConfig c;
    c.apply_seed(7);
    c.scenario.n_trajectories = 30;
    c.scenario.p_obey = 1.0;
    c.train.k_max = 3;
    c.train.gp_restarts = 0;
    c.train.gp_iters = 20;
    c.train.gp_max_points = 100;
    return c;
  }

  std::size_t count_files(const fs::path& d, const std::string& ext) const {
    std::size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(d)) n += e.path().extension() == ext;
    return n;
  }

  fs::path dir_;
  std::ostringstream log_;
};

}  // namespace

TEST(RunConfigTest, RoundTripsLosslessly) {
  RunConfig c;
  c.feature_set = context::FeatureSet::CASNSC1;
  c.eval_feature_sets = {context::FeatureSet::ASNSC};
  c.train.lambda = 0.123456789012345;
  c.train.k_max = 5;
  c.train.unitary_mode = predict::UnitaryMode::SingleRun;
  c.scenario.p_obey = 0.875;
  c.scenario.curb_right_angle = 0.1;
  c.scenario.curb_left_angle = 0.1 + 1.5707963267948966;
  c.observation = 2.0;
  c.horizon = 4.5;
  c.apply_seed(0xfeedbeefcafeULL);
  c.dataset_path = "a/b.jsonl";
  const auto text = run_config_to_string(c);
  const auto back = run_config_from_string(text);
  EXPECT_EQ(run_config_to_string(back), text);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.train.lambda, c.train.lambda);
  EXPECT_EQ(back.train.unitary_mode, predict::UnitaryMode::SingleRun);
  EXPECT_EQ(back.scenario.seed, c.seed);
}

TEST(RunConfigTest, RejectsBadValues) {
  EXPECT_THROW(run_config_from_string("{\"horizon\": -1}"), ConfigError);
  EXPECT_THROW(run_config_from_string("{\"test_fraction\": 1.5}"), ConfigError);
  EXPECT_THROW(run_config_from_string("not json"), ConfigError);
}

TEST_F(CliTest, SynthIsDeterministicAndReportsCount) {
  const auto c = small();
  ASSERT_EQ(cmd_synth(c, dir_ / "a", false, log_), 0);
  EXPECT_NE(log_.str().find("trajectories: 30\n"), std::string::npos);
  ASSERT_EQ(cmd_synth(c, dir_ / "b", false, log_), 0);
  EXPECT_EQ(io::read_text(dir_ / "a" / "dataset.jsonl"), io::read_text(dir_ / "b" / "dataset.jsonl"));
  EXPECT_EQ(io::read_text(dir_ / "a" / "map.json"), io::read_text(dir_ / "b" / "map.json"));
}

TEST_F(CliTest, SynthRefusesOverwriteWithoutForce) {
  const auto c = small();
  ASSERT_EQ(cmd_synth(c, dir_, false, log_), 0);
  EXPECT_THROW(cmd_synth(c, dir_, false, log_), IoError);
  EXPECT_EQ(cmd_synth(c, dir_, true, log_), 0);
}

TEST_F(CliTest, AsnscTrainsWithoutMap) {
  auto c = small();
  cmd_synth(c, dir_, false, log_);
  fs::remove(dir_ / "map.json");
  c.feature_set = context::FeatureSet::ASNSC;
  EXPECT_EQ(cmd_train(c, dir_, false, log_), 0);
  EXPECT_TRUE(fs::exists(dir_ / "model-asnsc.json"));
}

TEST_F(CliTest, Casnsc3WithoutMapFails) {
  auto c = small();
  cmd_synth(c, dir_, false, log_);
  fs::remove(dir_ / "map.json");
  c.feature_set = context::FeatureSet::CASNSC3;
  try {
    cmd_train(c, dir_, false, log_);
    FAIL() << "expected a configuration error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("map"), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(dir_ / "model-casnsc3.json"));
}

TEST_F(CliTest, RetrainGivesIdenticalHash) {
  auto c = small();
  c.feature_set = context::FeatureSet::CASNSC3;
  cmd_synth(c, dir_, false, log_);
  cmd_train(c, dir_, false, log_);
  const auto first = io::fnv1a_hex(io::read_text(dir_ / "model-casnsc3.json"));
  cmd_train(c, dir_, true, log_);
  EXPECT_EQ(first, io::fnv1a_hex(io::read_text(dir_ / "model-casnsc3.json")));
  EXPECT_FALSE(fs::exists(dir_ / "model-casnsc3.json.tmp"));
}

TEST_F(CliTest, EvalWritesTableAndOneSvgPerTestTrajectory) {
  auto c = small();
  c.eval_feature_sets = {context::FeatureSet::ASNSC, context::FeatureSet::CASNSC3};
  cmd_synth(c, dir_, false, log_);
  ASSERT_EQ(cmd_eval(c, {}, dir_, false, log_), 0);

  std::istringstream table(io::read_text(dir_ / "report.tsv"));
  std::string header;
  std::getline(table, header);
  EXPECT_EQ(header, "model\taccuracy_pct\tmhd_m\tauc_m2\ttime_s");
  std::string row;
  std::size_t rows = 0;
  while (std::getline(table, row)) {
    ++rows;
    EXPECT_EQ(std::count(row.begin(), row.end(), '\t'), 4);
  }
  EXPECT_EQ(rows, 2u);

  const auto test = split_dataset(io::read_dataset(dir_ / "dataset.jsonl"), c.test_fraction, c.seed).second;
  EXPECT_EQ(count_files(dir_ / "svg" / "asnsc", ".svg"), test.size());
  EXPECT_EQ(count_files(dir_ / "svg" / "casnsc3", ".svg"), test.size());
}

TEST_F(CliTest, EvalWithEmptyTestSplitFails) {
  auto c = small();
  c.scenario.n_trajectories = 2;
  cmd_synth(c, dir_, false, log_);
  EXPECT_THROW(cmd_eval(c, {}, dir_, false, log_), InvalidInput);
}

TEST_F(CliTest, PredictRejectsFeatureSetMismatch) {
  auto c = small();
  c.feature_set = context::FeatureSet::ASNSC;
  cmd_synth(c, dir_, false, log_);
  cmd_train(c, dir_, false, log_);
  fs::rename(dir_ / "model-asnsc.json", dir_ / "model-casnsc1.json");
  c.feature_set = context::FeatureSet::CASNSC1;
  EXPECT_THROW(cmd_predict(c, dir_, false, log_), ConfigError);
}

TEST_F(CliTest, ModelVersionMismatchIsRejected) {
  auto c = small();
  c.feature_set = context::FeatureSet::ASNSC;
  cmd_synth(c, dir_, false, log_);
  cmd_train(c, dir_, false, log_);
  auto j = nlohmann::json::parse(io::read_text(dir_ / "model-asnsc.json"));
  EXPECT_NO_THROW(io::model_from_string(j.dump()));
  j["version"] = io::kModelFormatVersion + 1;
  EXPECT_THROW(io::model_from_string(j.dump()), ModelError);
}

TEST(DatasetFormat, RejectsNonComplementaryLights) {
  const std::string ok =
      R"({"id": "p", "t1": 1, "t2": 0, "points": [[0, 0, 0], [0.5, 1, 0]]})";
  EXPECT_EQ(io::dataset_from_string(ok).size(), 1u);
  const std::string bad =
      R"({"id": "p", "t1": 1, "t2": 1, "points": [[0, 0, 0], [0.5, 1, 0]]})";
  try {
    io::dataset_from_string(bad);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("'p'"), std::string::npos) << e.what();
  }
}
