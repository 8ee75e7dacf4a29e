#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;
using namespace mvsde;
using namespace mvsde::cli;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mvsde_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int invoke(std::vector<std::string> args, std::string* log_text = nullptr) {
  args.insert(args.begin(), "mvsde");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream log, err;
  const int rc = main_entry(static_cast<int>(argv.size()), argv.data(), log, err);
  if (log_text) *log_text = log.str() + err.str();
  return rc;
}

}  // namespace

TEST(ParseStep, DyadicAndDecimal) {
  EXPECT_EQ(parse_step("2^-8"), 0.00390625);
  EXPECT_EQ(parse_step("2^-13"), 0x1.0p-13);
  EXPECT_EQ(parse_step("0.25"), 0.25);
  EXPECT_THROW(parse_step("2^x"), ConfigError);
  EXPECT_THROW(parse_step("abc"), ConfigError);
}

TEST(ParseConfig, GridForms) {
  const auto a = parse_config({"simulate-wea", "--delta", "2^-8"});
  EXPECT_EQ(a.grid.delta(), 0.00390625);
  EXPECT_EQ(a.grid.tau, 1.0);
  const auto b = parse_config({"simulate-wea", "--tau", "0.5", "--M", "128"});
  EXPECT_EQ(b.grid.delta(), 0.00390625);
  const auto c = parse_config({"simulate-wea", "--tau", "0.5", "--M", "128", "--delta", "2^-8", "--t", "10"});
  EXPECT_EQ(c.grid.M, 128u);
  EXPECT_THROW(parse_config({"simulate-wea", "--tau", "0.5", "--M", "64", "--delta", "2^-8"}), ConfigError);
  EXPECT_THROW(parse_config({"simulate-wea", "--t", "10", "--tau", "3"}), ConfigError);
  EXPECT_THROW(parse_config({"simulate-wea", "--tau", "0.5", "--delta", "1"}), ConfigError);
}

TEST(ParseConfig, Defaults) {
  const auto c = parse_config({"simulate-wea"});
  EXPECT_EQ(c.grid.tau, 1.0);
  EXPECT_EQ(c.grid.delta(), 0x1.0p-8);
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.n_particles, 1u);
  EXPECT_EQ(c.model, "example2");
  EXPECT_EQ(c.workers, 1);
}

TEST(ParseConfig, InvariantTestSnapshotSchedule) {
  const auto c = parse_config({"invariant-test", "--model", "example2", "--tau", "0.5", "--delta",
                               "2^-8", "--t", "4000", "--seed", "7"});
  EXPECT_EQ(c.snapshot_times, (std::vector<double>{500, 1000, 2000, 4000}));
  const auto g = parse_config({"simulate-wea", "--t", "16", "--snapshot-first", "2", "--snapshot-ratio", "2"});
  EXPECT_EQ(g.snapshot_times, (std::vector<double>{2, 4, 8, 16}));
  const auto e = parse_config({"simulate-wea", "--t", "16", "--snapshots", "1,3,16"});
  EXPECT_EQ(e.snapshot_times, (std::vector<double>{1, 3, 16}));
  EXPECT_THROW(parse_config({"simulate-wea", "--t", "16", "--tau", "2", "--snapshots", "3"}), ConfigError);
}

TEST(ParseConfig, FileValuesAndOverrides) {
  const auto dir = scratch("file");
  {
    std::ofstream f(dir / "run.cfg");
    f << "# comment\ncommand = simulate-awea\nn = 4\nseed = 11  # trailing\ntau = 0.5\n";
  }
  const auto c = parse_config({"--config", (dir / "run.cfg").string(), "--seed", "12"});
  EXPECT_EQ(c.command, Command::kSimulateAwea);
  EXPECT_EQ(c.n_particles, 4u);
  EXPECT_EQ(c.seed, 12u);
  EXPECT_EQ(c.grid.tau, 0.5);
  {
    std::ofstream f(dir / "bad.cfg");
    f << "command = simulate-wea\nbogus = 3\n";
  }
  EXPECT_THROW(parse_config({"--config", (dir / "bad.cfg").string()}), ConfigError);
}

TEST(ParseConfig, Rejections) {
  EXPECT_THROW(parse_config({}), ConfigError);
  EXPECT_THROW(parse_config({"simulate-wea", "--unknown", "1"}), ConfigError);
  EXPECT_THROW(parse_config({"cost", "--paths", "3"}), ConfigError);
  EXPECT_THROW(parse_config({"simulate-wea", "--n", "0"}), ConfigError);
  EXPECT_THROW(parse_config({"simulate-wea", "--seed", "-1"}), ConfigError);
  EXPECT_THROW(parse_config({"cost", "--scheme", "foo"}), ConfigError);
}

TEST(Run, CostExample) {
  const auto dir = scratch("cost");
  std::string log;
  EXPECT_EQ(invoke({"cost", "--scheme", "wea", "--t", "4", "--tau", "1", "--delta", "0.5", "--out-dir",
                    dir.string()},
                   &log),
            kOk);
  EXPECT_NE(log.find("exact = 20"), std::string::npos);
  EXPECT_EQ(slurp(dir / "cost.csv"), "scheme,t,tau,delta,N,exact,paper_order\nwea,4,1,0.5,1,20,32\n");
  EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
}

TEST(Run, CostWithEpsilon) {
  const auto dir = scratch("cost_eps");
  std::string log;
  EXPECT_EQ(invoke({"cost", "--scheme", "awea", "--t", "2", "--n", "3", "--delta", "0.5", "--epsilon", "0.5",
                    "--out-dir", dir.string()},
                   &log),
            kOk);
  EXPECT_NE(log.find("exact = 54"), std::string::npos);
  EXPECT_NE(log.find("epsilon^-14"), std::string::npos);
}

TEST(Run, AweaWithOneParticleMatchesWea) {
  const auto a = scratch("wea"), b = scratch("awea");
  const std::vector<std::string> common{"--model", "example1", "--tau", "0.5", "--M", "16", "--t", "5",
                                        "--seed", "3"};
  auto wa = common, aw = common;
  wa.insert(wa.begin(), "simulate-wea");
  aw.insert(aw.begin(), "simulate-awea");
  wa.insert(wa.end(), {"--out-dir", a.string()});
  aw.insert(aw.end(), {"--out-dir", b.string(), "--n", "1"});
  ASSERT_EQ(invoke(wa), kOk);
  ASSERT_EQ(invoke(aw), kOk);
  EXPECT_EQ(slurp(a / "anchors.csv"), slurp(b / "anchors.csv"));
  EXPECT_FALSE(slurp(a / "anchors.csv").empty());
}

TEST(Run, ManifestReproducesOutputs) {
  const auto a = scratch("manifest_a"), b = scratch("manifest_b");
  ASSERT_EQ(invoke({"simulate-awea", "--n", "5", "--tau", "0.5", "--delta", "2^-5", "--t", "10", "--seed",
                    "21", "--x0", "0.5", "--init-var", "0.2", "--snapshots", "2,10", "--workers", "2",
                    "--out-dir", a.string()}),
            kOk);
  ASSERT_EQ(invoke({"--config", (a / "manifest.txt").string(), "--out-dir", b.string()}), kOk);
  for (const char* f : {"anchors.csv", "snapshots.csv", "manifest.txt"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_NE(slurp(a / "manifest.txt").find("version = "), std::string::npos);
}

TEST(Run, WorkerCountDoesNotChangeOutputs) {
  const auto a = scratch("w1"), b = scratch("w4");
  for (const auto& [dir, w] : {std::pair{a, "1"}, std::pair{b, "4"}}) {
    ASSERT_EQ(invoke({"simulate-awea", "--n", "7", "--t", "4", "--delta", "2^-5", "--seed", "2", "--workers", w,
                      "--out-dir", dir.string()}),
              kOk);
  }
  EXPECT_EQ(slurp(a / "anchors.csv"), slurp(b / "anchors.csv"));
  EXPECT_EQ(slurp(a / "snapshots.csv"), slurp(b / "snapshots.csv"));
}

TEST(Run, ConvergenceWritesRatesAndFit) {
  const auto dir = scratch("conv");
  const int rc = invoke({"convergence", "--model", "example1", "--fine-delta", "2^-9", "--coarse-q", "4,5,6,7",
                         "--t-eval", "2", "--paths", "20", "--out-dir", dir.string()});
  EXPECT_TRUE(rc == kOk || rc == kAcceptanceFailed);
  const auto rates = slurp(dir / "rates.csv");
  EXPECT_EQ(rates.substr(0, rates.find('\n')), "q,delta,t,rmse,log2_rmse");
  const auto fit = slurp(dir / "fit.csv");
  EXPECT_EQ(fit.substr(0, fit.find('\n')), "t,slope,intercept,r2");
  // An impossible window forces the acceptance exit code.
  EXPECT_EQ(invoke({"convergence", "--model", "example1", "--fine-delta", "2^-9", "--coarse-q", "4,5,6",
                    "--t-eval", "2", "--paths", "5", "--slope-min", "5", "--slope-max", "6", "--out-dir",
                    dir.string()}),
            kAcceptanceFailed);
}

TEST(Run, InvariantTestOutputs) {
  const auto dir = scratch("inv");
  const int rc = invoke({"invariant-test", "--tau", "0.5", "--delta", "2^-5", "--t", "200", "--out-dir",
                         dir.string()});
  EXPECT_TRUE(rc == kOk || rc == kAcceptanceFailed);
  const auto snaps = slurp(dir / "snapshots.csv");
  EXPECT_NE(snaps.find("w2_to_oracle,jb_stat,jb_reject"), std::string::npos);
  const auto density = slurp(dir / "density.csv");
  EXPECT_NE(density.find(",oracle\n"), std::string::npos);
  EXPECT_NE(density.find(",t=200\n"), std::string::npos);
  EXPECT_EQ(invoke({"invariant-test", "--model", "example1", "--out-dir", dir.string()}), kInvalidConfig);
}

TEST(Run, CheckAssumptions) {
  const auto dir = scratch("check");
  std::string log;
  EXPECT_EQ(invoke({"check-assumptions", "--model", "example2", "--samples", "2000", "--out-dir", dir.string()},
                   &log),
            kOk);
  EXPECT_NE(log.find("not a proof"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "assumptions.txt"));
  EXPECT_EQ(invoke({"check-assumptions", "--model", "example2", "--kappa1-bar", "10", "--samples", "2000",
                    "--out-dir", dir.string()}),
            kAcceptanceFailed);
  EXPECT_EQ(invoke({"check-assumptions", "--model", "zero", "--out-dir", dir.string()}), kInvalidConfig);
}

TEST(Run, ExitCodes) {
  const auto dir = scratch("codes");
  EXPECT_EQ(invoke({"simulate-wea", "--t", "10", "--tau", "3", "--out-dir", dir.string()}), kInvalidConfig);
  EXPECT_EQ(invoke({"simulate-wea", "--model", "nope", "--out-dir", dir.string()}), kInvalidConfig);
  EXPECT_EQ(invoke({"simulate-wea", "--n", "2", "--out-dir", dir.string()}), kInvalidConfig);
  // A huge anti-dissipative start overflows the Euler step.
  EXPECT_EQ(invoke({"simulate-wea", "--model", "example1", "--x0", "1e200", "--t", "2", "--out-dir",
                    dir.string()}),
            kDiverged);
}

TEST(Binary, RunsAsProcess) {
  const char* exe = std::getenv("MVSDE_CLI");
  if (exe == nullptr) GTEST_SKIP() << "MVSDE_CLI not set";
  const auto dir = scratch("binary");
  const std::string base = std::string(exe) + " cost --t 4 --tau 1 --delta 0.5 --out-dir " + dir.string();
  EXPECT_EQ(std::system((base + " > /dev/null").c_str()), 0);
  const std::string bad = std::string(exe) + " simulate-wea --t 10 --tau 3 --out-dir " + dir.string();
  const int status = std::system((bad + " > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(status), 2);
}
