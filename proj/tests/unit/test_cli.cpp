#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const char* kSmallConfig =
    "scenario.dim=2\n"
    "scenario.classes=3\n"
    "scenario.spread=0.3\n"
    "scenario.train_n=150\n"
    "scenario.test_id_n=300\n"
    "scenario.ood=gaussian mean=0,4 spread=0.5 n=300\n"
    "pretrain.hidden=16\n"
    "pretrain.epochs=10\n";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("auto_ood_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write("small.cfg", kSmallConfig);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write(const std::string& name, const std::string& body) { std::ofstream(dir_ / name) << body; }

  int cli(const std::string& args, const std::string& out = "out") {
    const std::string cmd = std::string("\"") + AUTO_OOD_CLI + "\" --config \"" + (dir_ / "small.cfg").string() +
                            "\" --out \"" + (dir_ / out).string() + "\" " + args + " > \"" +
                            (dir_ / "log.txt").string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    return rc;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, PretrainIsDeterministic) {
  ASSERT_EQ(cli("pretrain", "a"), 0);
  ASSERT_EQ(cli("pretrain", "b"), 0);
  const auto a = slurp(dir_ / "a" / "model.ckpt");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir_ / "b" / "model.ckpt"));
  EXPECT_NE(slurp(dir_ / "a" / "pretrain_summary.json").find("\"config_hash\""), std::string::npos);
}

TEST_F(Cli, RunOutputsAreByteIdenticalAcrossInvocations) {
  ASSERT_EQ(cli("pretrain"), 0);
  ASSERT_EQ(cli("run --mode auto"), 0);
  const auto csv = slurp(dir_ / "out" / "auto_events.csv");
  const auto js = slurp(dir_ / "out" / "auto_metrics.json");
  ASSERT_EQ(cli("run --mode auto"), 0);
  EXPECT_EQ(csv, slurp(dir_ / "out" / "auto_events.csv"));
  EXPECT_EQ(js, slurp(dir_ / "out" / "auto_metrics.json"));
  EXPECT_TRUE(csv.starts_with("# config-hash: "));
  EXPECT_NE(js.find("\"config_hash\""), std::string::npos);
  // The header hash matches the JSON hash.
  const auto hash = csv.substr(15, 16);
  EXPECT_NE(js.find(hash), std::string::npos);
}

TEST_F(Cli, FrozenModeKeepsTheOutlierMarginAndNeverSteps) {
  ASSERT_EQ(cli("pretrain"), 0);
  ASSERT_EQ(cli("run --mode frozen --plot"), 0);
  std::istringstream in(slurp(dir_ / "out" / "frozen_events.csv"));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(line, "t,score,prediction,decision,is_ood_truth,label_truth,m_out");
  std::string first_m_out;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto m_out = line.substr(line.rfind(',') + 1);
    if (rows++ == 0) first_m_out = m_out;
    EXPECT_EQ(m_out, first_m_out);
  }
  EXPECT_GT(rows, 100u);
  EXPECT_NE(slurp(dir_ / "out" / "frozen_metrics.json").find("\"optimizer_steps\": 0"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "out" / "frozen_plot.svg").find("<svg"), std::string::npos);
}

TEST_F(Cli, AblateAndSweepWriteOneRowPerSetting) {
  ASSERT_EQ(cli("pretrain"), 0);
  ASSERT_EQ(cli("ablate"), 0);
  const auto abl = slurp(dir_ / "out" / "ablation.csv");
  for (const char* row : {"\nid_only,", "\nood_only,", "\nid+ood,", "\nid+ood+sc,"})
    EXPECT_NE(abl.find(row), std::string::npos) << row;
  ASSERT_EQ(cli("sweep --param iters_T --values 0,1,2"), 0);
  const auto sw = slurp(dir_ / "out" / "sweep_iters_T.csv");
  EXPECT_NE(sw.find("iters_T,fpr95,auroc,id_acc"), std::string::npos);
  for (const char* row : {"\n0,", "\n1,", "\n2,"}) EXPECT_NE(sw.find(row), std::string::npos) << row;
}

TEST_F(Cli, ErrorsGiveNonzeroExit) {
  EXPECT_NE(cli("run --mode auto"), 0);  // no checkpoint yet
  EXPECT_NE(slurp(dir_ / "log.txt").find("checkpoint"), std::string::npos);
  ASSERT_EQ(cli("pretrain"), 0);
  EXPECT_NE(cli("sweep --param gamma --values 1,2"), 0);
  EXPECT_NE(slurp(dir_ / "log.txt").find("unknown sweep parameter"), std::string::npos);
  EXPECT_NE(cli("sweep --param kappa --values 0.5,1.5"), 0);
  EXPECT_NE(cli("run --mode sideways"), 0);
  write("small.cfg", "auto.phi=0.2\n");
  EXPECT_NE(cli("run --mode auto"), 0);
  EXPECT_NE(slurp(dir_ / "log.txt").find("scenario"), std::string::npos);
}
