#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdeq/checkpoint.hpp"
#include "qdeq/config.hpp"
#include "qdeq/errors.hpp"

using namespace qdeq;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  const std::string cmd = std::string(QDEQ_CLI_PATH) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[512];
  while (std::fgets(buf, sizeof buf, p)) r.out += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("qdeq_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

bool have_mnist() {
  const char* env = std::getenv("QDEQ_DATA_DIR");
  return env && fs::exists(fs::path(env) / "mnist" / "train-images-idx3-ubyte");
}

}  // namespace

TEST(Config, RoundTripAllFields) {
  TrainConfig cfg;
  cfg.dataset = DatasetName::FashionMNIST10;
  cfg.solver_mode = SolverMode::direct(5);
  cfg.learning_rate = 0.0075;
  cfg.warmup_steps = 2350;
  cfg.jac_loss_freq = 0.8;
  cfg.seed = 123456789012345ULL;
  cfg.upsample_scale = UpsampleScale::Unscaled;
  cfg.train_limit = 77;
  EXPECT_EQ(parse_config(config_to_json(cfg)), cfg);
  EXPECT_EQ(parse_config(config_to_json(TrainConfig{})), TrainConfig{});
}

TEST(Config, PartialObjectKeepsDefaults) {
  const TrainConfig cfg = parse_config(R"({"solver_mode": "direct10", "learning_rate": 0.1})");
  EXPECT_EQ(cfg.solver_mode, SolverMode::direct(10));
  EXPECT_EQ(cfg.learning_rate, 0.1);
  EXPECT_EQ(cfg.batch_size, 256);
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config(R"({"learning_rat": 0.1})"), InvalidArgument);
  EXPECT_THROW(parse_config(R"({"epochs": "ten"})"), InvalidArgument);
  EXPECT_THROW(parse_config("{not json"), InvalidArgument);
  EXPECT_THROW(parse_config("[1, 2]"), InvalidArgument);
  EXPECT_THROW(parse_config(R"({"dataset": "mnist10", "encoding": "angle"})"), InvalidArgument);
  EXPECT_THROW(parse_config(R"({"solver_mode": "direct0"})"), InvalidArgument);
}

TEST(Checkpoint, BitExactRoundTrip) {
  for (EncodingKind enc : {EncodingKind::Amplitude, EncodingKind::Angle}) {
    TrainConfig cfg;
    cfg.encoding = enc;
    cfg.random_ops = 25;
    cfg.seed = 9;
    TrainState s = init_state(cfg);
    // make the moments and counters non-trivial
    Eigen::VectorXd p = pack_parameters(s);
    const Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(p.size(), -1.0 / 3, 2.0 / 7);
    adam_step(p, g, s.adam, adam_config(cfg));
    unpack_parameters(s, p);
    s.step = 17;
    s.adam.skipped = 2;
    const std::string text = checkpoint_to_text(cfg, s);
    const Checkpoint ck = parse_checkpoint(text);
    EXPECT_EQ(ck.config, cfg);
    EXPECT_EQ(pack_parameters(ck.state), pack_parameters(s));
    EXPECT_EQ(ck.state.adam.m, s.adam.m);
    EXPECT_EQ(ck.state.adam.v, s.adam.v);
    EXPECT_EQ(ck.state.adam.t, s.adam.t);
    EXPECT_EQ(ck.state.adam.skipped, 2);
    EXPECT_EQ(ck.state.step, 17);
    EXPECT_EQ(ck.state.model.circuit(), s.model.circuit());
    EXPECT_EQ(checkpoint_to_text(ck.config, ck.state), text);
  }
}

TEST(Checkpoint, TamperedGateListIsFormatError) {
  TrainConfig cfg;
  cfg.random_ops = 10;
  std::string text = checkpoint_to_text(cfg, init_state(cfg));
  const auto pos = text.find("\"RY\"");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 4, "\"RX\"");
  EXPECT_THROW(parse_checkpoint(text), FormatError);
  EXPECT_THROW(parse_checkpoint("{}"), FormatError);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("--help").code, 0);
  EXPECT_EQ(run_cli("").code, 1);
  EXPECT_EQ(run_cli("frobnicate").code, 1);
  EXPECT_EQ(run_cli("train").code, 1);
  EXPECT_EQ(run_cli("train --config /nonexistent/cfg.json").code, 1);
  EXPECT_EQ(run_cli("verify-bounds --suite nope").code, 1);
}

TEST_F(CliDir, InvalidConfigExitsOne) {
  std::ofstream(dir_ / "bad.json") << R"({"batch_size": 0})";
  EXPECT_EQ(run_cli("train --config " + (dir_ / "bad.json").string() + " --output-dir " + dir_.string()).code, 1);
}

TEST_F(CliDir, VerifyBoundsWritesCsvAndReports) {
  const CliRun r = run_cli("verify-bounds --suite angle-overlap --pairs 200 --output-dir " + dir_.string());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("angle-overlap: samples"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("[ok]"), std::string::npos) << r.out;
  const std::string csv = slurp(dir_ / "angle_overlap.csv");
  EXPECT_EQ(csv.rfind("dist_sq,overlap,bound\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 201);
  const CliRun again = run_cli("export-plot-data --suite angle-overlap --pairs 200 --output-dir " + dir_.string());
  EXPECT_EQ(again.code, 0);
  EXPECT_EQ(slurp(dir_ / "angle_overlap.csv"), csv);
}

TEST_F(CliDir, VerifyBoundsAllSuites) {
  const CliRun r = run_cli("verify-bounds --pairs 100 --output-dir " + dir_.string());
  EXPECT_EQ(r.code, 0);
  for (const char* name : {"amplitude-overlap", "angle-overlap", "trig-inequality", "contraction-pauli_z",
                           "lipschitz"}) {
    EXPECT_NE(r.out.find(name), std::string::npos) << name << "\n" << r.out;
  }
}

TEST_F(CliDir, TrainZeroEpochsThenEval) {
  if (!have_mnist()) GTEST_SKIP() << "MNIST not found under QDEQ_DATA_DIR";
  std::ofstream(dir_ / "cfg.json") << R"({"epochs": 0, "train_limit": 16, "val_limit": 8, "test_limit": 32,
    "solver_mode": "direct2"})";
  const CliRun t = run_cli("train --config " + (dir_ / "cfg.json").string() + " --output-dir " + dir_.string() +
                        " --seed 4");
  ASSERT_EQ(t.code, 0) << t.out;
  EXPECT_NE(t.out.find("test_acc "), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "metrics.csv"));
  EXPECT_EQ(load_config(dir_ / "config_echo.json").seed, 4u);
  const Checkpoint ck = load_checkpoint(dir_ / "checkpoint.txt");
  EXPECT_EQ(ck.config.seed, 4u);
  const CliRun e = run_cli("eval --checkpoint " + (dir_ / "checkpoint.txt").string() + " --split test");
  EXPECT_EQ(e.code, 0);
  EXPECT_NE(e.out.find("samples 32"), std::string::npos) << e.out;
  const CliRun x = run_cli("export-plot-data --suite residuals --checkpoint " + (dir_ / "checkpoint.txt").string() +
                        " --output-dir " + dir_.string());
  EXPECT_EQ(x.code, 0);
  const std::string res = slurp(dir_ / "residuals.csv");
  EXPECT_EQ(std::count(res.begin(), res.end(), '\n'), 33);
}
