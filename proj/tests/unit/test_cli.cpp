#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "semicomp/errors.hpp"
#include "semicomp/io.hpp"
#include "semicomp_cli/commands.hpp"
#include "semicomp_cli/run_config.hpp"

namespace semicomp::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("semicomp_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "semicomp");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, SimulateFitPredictEvaluate) {
  ASSERT_EQ(run({"simulate", "--n", "200", "--risk", "linear", "--censoring", "0.25", "--seed", "3", "--out",
                 path("d.csv"), "--truth", path("t.csv")}),
            kExitOk)
      << err_.str();
  std::ifstream data_in(path("d.csv"));
  EXPECT_EQ(read_dataset_csv(data_in).size(), 200u);

  ASSERT_EQ(run({"fit", "--data", path("d.csv"), "--model", "linear", "--max-iterations", "5", "--out",
                 path("m.json"), "--trace", path("trace.csv")}),
            kExitOk)
      << err_.str();
  ASSERT_EQ(run({"predict", "--model", path("m.json"), "--data", path("d.csv"), "--horizon", "1", "--n-points",
                 "20", "--out", path("p.csv")}),
            kExitOk)
      << err_.str();
  ASSERT_EQ(run({"evaluate", "--data", path("d.csv"), "--preds", path("p.csv"), "--horizon", "1"}), kExitOk)
      << err_.str();
  const std::string text = out_.str();
  const auto summary = nlohmann::json::parse(text.substr(text.rfind('{')));
  EXPECT_GT(summary.at("ibbs").get<double>(), 0.0);
  EXPECT_LT(summary.at("ibbs").get<double>(), 0.25);
}

TEST_F(CliTest, InvalidDatasetExitsWithValidationCode) {
  std::ofstream(path("bad.csv")) << "y1,delta1,y2,delta2\n2,1,1,1\n";
  EXPECT_EQ(run({"fit", "--data", path("bad.csv"), "--model", "parametric", "--out", path("m.json")}),
            kExitValidation);
}

TEST_F(CliTest, TooManyFoldsExitsWithNumericCode) {
  std::ofstream(path("small.csv")) << "y1,delta1,y2,delta2,x1\n1,1,2,1,0\n1.5,0,1.5,1,1\n";
  EXPECT_EQ(run({"cv", "--data", path("small.csv"), "--model", "parametric", "--folds", "5"}), kExitNumeric);
}

TEST_F(CliTest, UnknownConfigKeyRejected) {
  std::ofstream(path("cfg.json")) << R"({"folds": 3, "nonsense": 1})";
  EXPECT_EQ(run({"--config", path("cfg.json"), "replicate-study", "--study", "bbs-validation"}), kExitValidation);
}

TEST(RunConfig, FlagsOverrideConfig) {
  RunConfig cfg;
  apply_json(cfg, nlohmann::json::parse(R"({"folds": 3, "horizon": 2.0, "train": {"epochs": 7}})"));
  EXPECT_EQ(cfg.folds, 3);
  EXPECT_EQ(cfg.train.epochs, 7);
  EXPECT_DOUBLE_EQ(cfg.horizon, 2.0);
  const RunConfig copy = [&] {
    RunConfig c;
    apply_json(c, to_json(cfg));
    return c;
  }();
  EXPECT_EQ(copy.folds, 3);
  EXPECT_EQ(copy.train.epochs, 7);
}

TEST_F(CliTest, FlagBeatsConfigValue) {
  std::ofstream(path("cfg.json")) << R"({"study": {"replicates": 50, "bbs_n": 100}})";
  ASSERT_EQ(run({"--config", path("cfg.json"), "--seed", "1", "replicate-study", "--study", "bbs-validation",
                 "--settings", "1", "--replicates", "2", "--out", path("s.csv")}),
            kExitOk)
      << err_.str();
  std::ifstream in(path("s.csv"));
  const auto table = read_study_csv(in);
  EXPECT_EQ(table.number(0, "replicates"), 2.0);
}

TEST(ParseNumberList, Values) {
  EXPECT_EQ(parse_number_list("0.1, 0.5,1"), (std::vector<double>{0.1, 0.5, 1.0}));
  EXPECT_THROW(parse_number_list("1,x"), ValidationError);
}

}  // namespace
}  // namespace semicomp::cli
