#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nscbf/artifacts.hpp"

using namespace nscbf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::size_t columns(const std::string& row) { return std::count(row.begin(), row.end(), ',') + 1; }

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("nscbf_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e-3), "0.001");
  EXPECT_EQ(format_double(-2.0), "-2");
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(TrajectoryCsv, LayoutAndColumns) {
  const auto sc = multi_agent_swap();
  TrialOptions o;
  o.horizon = 0.01;
  const auto traj = run_single_trial(sc, o, 0);
  std::ostringstream out;
  write_trajectory_csv(out, traj);
  const auto rows = lines(out.str());
  ASSERT_EQ(rows.size(), 12u);
  EXPECT_EQ(rows[0].rfind("t,x1,", 0), 0u);
  EXPECT_NE(rows[0].find(",u12,h,active_leaves"), std::string::npos);
  for (const auto& r : rows) EXPECT_EQ(columns(r), 1u + 12u + 12u + 2u) << r;
  // final state carries no control
  EXPECT_NE(rows.back().find(",,,,,,,,,,,,"), std::string::npos);
}

TEST(Run, SingleTrialShortHorizon) {
  const auto dir = scratch("short");
  auto c = parse_config("trials = 1\nhorizon = 0.01\ndt = 0.001\n");
  c.output_dir = dir.string();
  std::ostringstream log;
  ASSERT_EQ(run(c, log), kExitOk) << log.str();
  const auto csv = lines(slurp(dir / "trajectories" / "trial_0.csv"));
  EXPECT_EQ(csv.size(), 12u);  // header + 11 states
  EXPECT_EQ(columns(csv[1]), 1u + 2u + 2u + 2u);
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "plots" / "overview.svg"));
  EXPECT_TRUE(fs::exists(dir / "plots" / "control.svg"));
  EXPECT_EQ(slurp(dir / "plots" / "overview.svg").rfind("<svg", 0), 0u);
}

TEST(Run, SummaryRoundTripsConfig) {
  const auto dir = scratch("summary");
  auto c = parse_config("scenario = multi-swap\ntrials = 2\nhorizon = 0.05\nseed = 77\nepsilon = 0.1\n");
  c.output_dir = dir.string();
  std::ostringstream log;
  ASSERT_EQ(run(c, log), kExitOk) << log.str();
  const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(config_from_json(j.at("config")), c);
  EXPECT_EQ(j.at("n_trials"), 2);
  EXPECT_EQ(j.at("safety_rate"), 1.0);
  EXPECT_TRUE(j.contains("version"));
  EXPECT_EQ(j.at("min_h").size(), 2u);
  EXPECT_EQ(j.at("tv_control").size(), 2u);
  EXPECT_TRUE(j.at("qp_time").contains("mean"));
  EXPECT_TRUE(j.at("qp_time").contains("stddev"));
  EXPECT_EQ(j.at("failures").at("count"), 0);
}

TEST(Run, RerunIsByteIdentical) {
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  auto c = parse_config("trials = 3\nhorizon = 0.2\nseed = 5\n");
  std::ostringstream log;
  c.output_dir = a.string();
  ASSERT_EQ(run(c, log), kExitOk);
  c.output_dir = b.string();
  ASSERT_EQ(run(c, log), kExitOk);
  for (int k = 0; k < 3; ++k) {
    const auto name = "trial_" + std::to_string(k) + ".csv";
    EXPECT_EQ(slurp(a / "trajectories" / name), slurp(b / "trajectories" / name));
  }
  EXPECT_EQ(slurp(a / "plots" / "overview.svg"), slurp(b / "plots" / "overview.svg"));
}

TEST(Run, CsvLimit) {
  const auto dir = scratch("limit");
  auto c = parse_config("trials = 4\nhorizon = 0.01\ncsv_limit = 2\n");
  c.output_dir = dir.string();
  std::ostringstream log;
  ASSERT_EQ(run(c, log), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "trajectories" / "trial_1.csv"));
  EXPECT_FALSE(fs::exists(dir / "trajectories" / "trial_2.csv"));
}

TEST(Run, BatchFailureExitCode) {
  const auto dir = scratch("fail");
  auto c = parse_config("scenario = multi-swap\ntrials = 2\nhorizon = 1\nepsilon = 0\n");
  c.output_dir = dir.string();
  std::ostringstream log;
  EXPECT_EQ(run(c, log), kExitBatch);
  const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(j.at("failures").at("count"), 2);
  EXPECT_EQ(j.at("failures").at("trials").size(), 2u);
}
