#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "ecstream_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run run(const std::string& args) {
  const auto dir = scratch("capture");
  const auto out = dir / "stdout", err = dir / "stderr";
  const std::string cmd = std::string(ECSTREAM_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

std::string config(const std::string& name) { return std::string(ECSTREAM_CONFIGS) + "/" + name; }

std::vector<std::vector<std::string>> csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> row;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  for (const char* args : {"", "frobnicate", "analyze", "analyze --config x --theta 2"}) {
    const auto r = run(args);
    EXPECT_EQ(r.status, 2) << args;
    EXPECT_EQ(r.err.rfind("error: usage: ", 0), 0u) << r.err;
  }
}

TEST(Cli, ErrorsAreOneCategorizedLine) {
  const auto dir = scratch("errors");
  const auto bad = dir / "bad.cfg";
  std::ofstream(bad) << "tau 1\nserver alpha=-3 beta=0.1\n";
  struct Case {
    std::string args, category;
  };
  for (const auto& c : {Case{"analyze --config " + (dir / "missing.cfg").string(), "io"},
                        Case{"analyze --config " + bad.string(), "config"},
                        Case{"sweep --config " + config("small.cfg") + " --out " + dir.string() +
                                 " --files 2 --servers 3",
                             "config"}}) {
    const auto r = run(c.args);
    EXPECT_EQ(r.status, 1) << c.args;
    EXPECT_EQ(r.err.rfind("error: " + c.category + ": ", 0), 0u) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
  }
}

TEST(Cli, AnalyzeWritesOneRowPerFileAndServer) {
  const auto dir = scratch("analyze");
  const auto r = run("analyze --config " + config("small.cfg") + " --out " + dir.string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = csv(slurp(dir / "bounds.csv"));
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0][0], "kind");
  int files = 0, servers = 0;
  for (const auto& row : rows) {
    files += row[0] == "file";
    servers += row[0] == "server";
  }
  EXPECT_EQ(files, 5);
  EXPECT_EQ(servers, 4);
}

TEST(Cli, OptimizeThenAnalyzeTheSolution) {
  const auto dir = scratch("optimize");
  const auto opt = run("optimize --config " + config("small.cfg") + " --out " + dir.string());
  ASSERT_EQ(opt.status, 0) << opt.err;
  ASSERT_TRUE(fs::exists(dir / "solution.txt"));
  const auto trace = csv(slurp(dir / "trace.csv"));
  ASSERT_GE(trace.size(), 2u);
  double prev = std::stod(trace[1][2]);
  for (std::size_t a = 2; a < trace.size(); ++a) {
    const double v = std::stod(trace[a][2]);
    EXPECT_LE(v, prev * (1 + 1e-8));
    prev = v;
  }
  const auto ana = run("analyze --config " + config("small.cfg") + " --solution " + (dir / "solution.txt").string() +
                       " --out " + dir.string());
  ASSERT_EQ(ana.status, 0) << ana.err;
  EXPECT_NE(ana.out.find("objective"), std::string::npos);
}

TEST(Cli, SimulateStaysWithinBounds) {
  const auto dir = scratch("simulate");
  const auto r = run("simulate --config " + config("small.cfg") + " --out " + dir.string() + " --horizon 4000");
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "simulation.csv"));
  EXPECT_TRUE(fs::exists(dir / "servers.csv"));
}

TEST(Cli, TradeoffEndpointsOrdered) {
  const auto dir = scratch("tradeoff");
  const auto r = run("tradeoff --config " + config("small.cfg") + " --out " + dir.string() + " --points 2");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = csv(slurp(dir / "tradeoff.csv"));
  ASSERT_EQ(rows.size(), 3u);
  const double mean0 = std::stod(rows[1][2]), tail0 = std::stod(rows[1][3]);
  const double mean1 = std::stod(rows[2][2]), tail1 = std::stod(rows[2][3]);
  EXPECT_GE(tail1, tail0);
  EXPECT_GE(mean0, mean1);
}

TEST(Cli, SameSeedSameBytes) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    const auto r = run("baselines --config " + config("small.cfg") + " --out " + dir.string() + " --seed 4");
    ASSERT_EQ(r.status, 0) << r.err;
  }
  EXPECT_EQ(slurp(a / "baselines.csv"), slurp(b / "baselines.csv"));
  EXPECT_EQ(csv(slurp(a / "baselines.csv")).size(), 7u);
}
