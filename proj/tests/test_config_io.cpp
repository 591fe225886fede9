#include <gtest/gtest.h>

#include <filesystem>

#include "ecstream/config_io.hpp"
#include "ecstream/workload.hpp"

using namespace ecstream;

namespace {

const char* kSample = R"(# two servers, one cached file
tau 2
ds 5   # startup
x 3
theta 0.25
y 2
waiting sojourn
server alpha=20 beta=0.01
server alpha=12.5 beta=0.02
file L=10 k=1 n=2 lambda=0.01 cache=2,0
file L=4 k=2 n=2 lambda=0.002
)";

}  // namespace

TEST(ConfigIo, ParsesEveryField) {
  const auto cfg = parse_config(kSample);
  EXPECT_EQ(cfg.tau, 2.0);
  EXPECT_EQ(cfg.startup_delay, 5.0);
  EXPECT_EQ(cfg.tail_threshold, 3.0);
  EXPECT_EQ(cfg.theta, 0.25);
  EXPECT_EQ(cfg.streams_per_server, 2);
  EXPECT_EQ(cfg.waiting, WaitingModel::sojourn);
  ASSERT_EQ(cfg.servers.size(), 2u);
  EXPECT_EQ(cfg.servers[1].alpha, 12.5);
  ASSERT_EQ(cfg.files.size(), 2u);
  EXPECT_EQ(cfg.files[0].cached_prefix, (std::vector<int>{2, 0}));
  EXPECT_EQ(cfg.files[1].id, 1);
  EXPECT_EQ(cfg.files[1].k, 2);
}

TEST(ConfigIo, RoundTripIsExact) {
  auto cfg = desk_config({}, 4);
  cfg.files[3].cached_prefix.assign(cfg.server_count(), 1);
  const auto text = format_config(cfg);
  const auto back = parse_config(text);
  EXPECT_EQ(format_config(back), text);
  for (std::size_t i = 0; i < cfg.file_count(); ++i) EXPECT_EQ(back.files[i].lambda, cfg.files[i].lambda);
  for (std::size_t j = 0; j < cfg.server_count(); ++j) EXPECT_EQ(back.servers[j].alpha, cfg.servers[j].alpha);
}

TEST(ConfigIo, RejectsMalformedInput) {
  const char* bad[] = {
      "tau 1\ntau 2\nserver alpha=1 beta=0\nfile L=1 k=1 n=1 lambda=0.1\n",    // duplicate scalar
      "speed 3\nserver alpha=1 beta=0\nfile L=1 k=1 n=1 lambda=0.1\n",         // unknown directive
      "server alpha=1\nfile L=1 k=1 n=1 lambda=0.1\n",                         // missing key
      "server alpha=1 beta=0 gamma=2\nfile L=1 k=1 n=1 lambda=0.1\n",          // unknown key
      "server alpha=1x beta=0\nfile L=1 k=1 n=1 lambda=0.1\n",                 // trailing junk
      "server alpha=1 beta=0\nfile L=1.5 k=1 n=1 lambda=0.1\n",                // non-integer L
      "server alpha=1 beta=0\nfile L=1 k=2 n=1 lambda=0.1\n",                  // k > n
      "server alpha=-1 beta=0\nfile L=1 k=1 n=1 lambda=0.1\n",                 // alpha <= 0
      "waiting mg1\nserver alpha=1 beta=0\nfile L=1 k=1 n=1 lambda=0.1\n",     // bad waiting model
      "tau 1 2\nserver alpha=1 beta=0\nfile L=1 k=1 n=1 lambda=0.1\n",         // extra value
      "server alpha=1 beta=0\nfile L=3 k=1 n=1 lambda=0.1 cache=4\n",          // prefix above L
      "server alpha=1 beta=0\nfile L=3 k=1 n=1 lambda=0.1 cache=1,1\n",        // prefix length
  };
  for (const char* text : bad) EXPECT_THROW(parse_config(text), ConfigError) << text;
}

TEST(ConfigIo, ErrorsNameTheLine) {
  try {
    parse_config("tau 1\n\nserver alpha=1 beta=zero\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(ConfigIo, MissingFileIsIoError) {
  EXPECT_THROW(load_config("/nonexistent/cluster.cfg"), IoError);
}

TEST(SolutionIo, RoundTrip) {
  Solution s{AccessMatrix(2, 3, 0.0), Placement{{{0, 2}, {1, 2}}}, AuxVars{{0.1, 1.0 / 3}, {0.2, 0.7}}};
  s.access(0, 0) = 0.3;
  s.access(0, 2) = 0.7;
  s.access(1, 1) = 1.0 / 7;
  s.access(1, 2) = 6.0 / 7;
  const auto back = parse_solution(format_solution(s));
  EXPECT_EQ(back.access, s.access);
  EXPECT_EQ(back.placement, s.placement);
  EXPECT_EQ(back.aux, s.aux);
}

TEST(SolutionIo, RejectsIncompleteOrMalformed) {
  EXPECT_THROW(parse_solution("placement 0 1 2\n"), ConfigError);
  EXPECT_THROW(parse_solution("solution files=1 servers=2\nplacement 0 0 1\naccess 0 0.5 0.5\n"), ConfigError);
  EXPECT_THROW(parse_solution("solution files=1 servers=2\nplacement 0 0 1\naccess 0 0.5\naux 0 1 1\n"),
               ConfigError);
  EXPECT_THROW(parse_solution("solution files=1 servers=2\nplacement 3 0 1\n"), ConfigError);
}
