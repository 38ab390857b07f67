#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "ssr/cli.hpp"

namespace fs = std::filesystem;
using namespace ssr;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ssrscan_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "system.cfg";
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST(Cli, ValidateFixture) {
  const auto dir = scratch("validate");
  const auto r = run({"validate", test::data_path("two_area.cfg"), "--out-dir", dir.string()});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("valid"), std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest_validate.json"));
  EXPECT_EQ(manifest["subcommand"], "validate");
  EXPECT_EQ(manifest["config_hash"].get<std::string>().size(), 64u);
}

TEST(Cli, InvalidModelExitsOneWithReport) {
  const auto dir = scratch("invalid");
  std::string text = test::kMinimalConfig;
  text.replace(text.find("bf = 0.3 0.3 0.3 0.1"), 20, "bf = 0.3 0.3 0.3 0.3");
  const auto r = run({"validate", write_config(dir, text), "--out-dir", dir.string()});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_NE(r.err.find("power fractions"), std::string::npos) << r.err;

  EXPECT_EQ(run({"eig", (dir / "missing.cfg").string()}).code, cli::kExitInvalid);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitInvalid);
  EXPECT_EQ(run({"freqscan", test::data_path("two_area.cfg"), "--step", "-1", "--out-dir", dir.string()}).code,
            cli::kExitInvalid);
}

TEST(Cli, NumericalFailureExitsTwo) {
  const auto dir = scratch("numerical");
  // Valid but absurdly stiff shaft: the state matrix overflows.
  std::string text = slurp(test::data_path("two_area.cfg"));
  text.replace(text.find("k = 20 35 50 70"), 15, "k = 1e306 35 50 70");
  const auto cfg = write_config(dir, text);
  for (const char* cmd : {"eig", "freqscan", "simulate"}) {
    const auto r = run({cmd, cfg, "--out-dir", dir.string()});
    EXPECT_EQ(r.code, cli::kExitNumerical) << cmd << ": " << r.err;
    EXPECT_NE(r.err.find("numerical"), std::string::npos) << cmd;
  }
}

TEST(Cli, ProcessExitCodeMatches) {
  const char* exe = std::getenv("SSR_CLI");
  if (!exe) GTEST_SKIP() << "SSR_CLI not set";
  const auto dir = scratch("process");
  const auto cmd = std::string(exe) + " validate " + (dir / "missing.cfg").string() + " --out-dir " + dir.string() +
                   " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), cli::kExitInvalid);
}

TEST(Cli, EigenCsv) {
  const auto dir = scratch("eig");
  ASSERT_EQ(run({"eig", test::data_path("two_area.cfg"), "--out-dir", dir.string()}).code, 0);
  std::istringstream csv(slurp(dir / "eig_modes.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "mode_id,re,im,freq_hz,damping_ratio,participation");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 20);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const auto cfg = test::data_path("two_area.cfg");
  const auto a = scratch("repeat_a");
  const auto b = scratch("repeat_b");
  for (const auto& dir : {a, b}) {
    ASSERT_EQ(run({"freqscan", cfg, "--step", "0.05", "--out-dir", dir.string()}).code, 0);
    ASSERT_EQ(run({"peaks", cfg, "--out-dir", dir.string()}).code, 0);
    ASSERT_EQ(run({"simulate", cfg, "--horizon", "4", "--out-dir", dir.string()}).code, 0);
    ASSERT_EQ(run({"eig", cfg, "--out-dir", dir.string()}).code, 0);
  }
  for (const char* name : {"freqscan_magnitudes.csv", "freqscan_ratios.csv", "peaks.csv", "sim_trajectory.csv",
                           "sim_severity.csv", "eig_modes.csv", "manifest_freqscan.json", "manifest_simulate.json"}) {
    const auto x = slurp(a / name);
    EXPECT_FALSE(x.empty()) << name;
    EXPECT_EQ(x, slurp(b / name)) << name;
  }
}

TEST(Cli, TrajectoryHeaderHasStableIds) {
  const auto dir = scratch("header");
  ASSERT_EQ(run({"simulate", test::data_path("two_area.cfg"), "--horizon", "0.1", "--start", "0", "--out-dir", dir.string()}).code, 0);
  std::istringstream csv(slurp(dir / "sim_trajectory.csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("t,input,w_G1_g,", 0), 0u) << header.substr(0, 60);
  EXPECT_NE(header.find(",dw_G1_g_s1,"), std::string::npos);
  EXPECT_NE(header.find(",dth_G12_s3_s4"), std::string::npos);
  std::string row;
  int rows = 0;
  while (std::getline(csv, row)) ++rows;
  EXPECT_EQ(rows, 101);
}

TEST(Cli, ConfigHashIgnoresFormatting) {
  const auto original = load_model(test::kMinimalConfig);
  std::string text = test::kMinimalConfig;
  text = "# comment\n\n" + text;
  text.replace(text.find("k = 20 35 50 70"), 15, "k = 20,35,50,70   ; shafts");
  const auto reformatted = load_model(text);
  EXPECT_EQ(cli::config_hash(original), cli::config_hash(reformatted));
  auto changed = original;
  changed.generators[0].dispatch_mw += 1.0;
  EXPECT_NE(cli::config_hash(original), cli::config_hash(changed));
}

TEST(Cli, PeaksCsvColumns) {
  const auto dir = scratch("peaks");
  ASSERT_EQ(run({"peaks", test::data_path("two_area.cfg"), "--out-dir", dir.string()}).code, 0);
  std::istringstream csv(slurp(dir / "peaks.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "output_id,f_center,f_lo,f_hi,magnitude,r_m,stealth_flag");
  ASSERT_TRUE(std::getline(csv, line));
  EXPECT_EQ(line.rfind("dw_G", 0) == 0 || line.rfind("dth_G", 0) == 0, true) << line;
}

TEST(Cli, ReportRanksStealthBands) {
  const auto dir = scratch("report");
  const auto r = run({"report", test::data_path("two_area.cfg"), "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(dir / "report.txt"));
  EXPECT_NE(r.out.find("rank"), std::string::npos);
  EXPECT_NE(r.out.find("confirms"), std::string::npos) << r.out;
}

TEST(Cli, ReportWithoutResponseSaysSo) {
  const auto dir = scratch("report_empty");
  // Attack at the slack bus: the reference absorbs it, so nothing resonates.
  const std::string text = std::string(test::kMinimalConfig) +
                           "\n[attack]\nbus = b\namplitude_pu = 1\nfrequency_hz = 20\nwaveform = square\nstart_s = 1\n";
  const auto r = run({"report", write_config(dir, text), "--step", "0.05", "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "no vulnerable bands found\n");
}
