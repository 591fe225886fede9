#include <gtest/gtest.h>

#include <cmath>

#include "ecstream/baselines.hpp"
#include "ecstream/workload.hpp"

using namespace ecstream;

namespace {

SystemConfig small(std::uint64_t seed) {
  auto cfg = small_instance(SmallSpec{}, seed).config;
  cfg.tail_threshold = 5.0;
  return cfg;
}

SystemConfig homogeneous(std::uint64_t seed) {
  auto cfg = small(seed);
  for (auto& s : cfg.servers) s = {12.0, 0.02};
  return cfg;
}

}  // namespace

TEST(Policy, NamesRoundTrip) {
  for (auto k : kAllPolicies) EXPECT_EQ(parse_policy(policy_name(k)), k);
  EXPECT_THROW(parse_policy("RP-XYZ"), ConfigError);
  EXPECT_THROW(parse_policy("rp-pea"), ConfigError);
}

TEST(Policy, MasksFreezeTheRightVariables) {
  for (auto k : kAllPolicies) {
    const auto m = policy_mask(k);
    EXPECT_TRUE(m.aux);
    const auto name = policy_name(k);
    EXPECT_EQ(m.placement, name.substr(0, 2) == "OP");
    EXPECT_EQ(m.access, name.substr(3) == "OA");
  }
}

TEST(ProportionalAccess, HomogeneousEqualsEqualAccess) {
  const auto cfg = homogeneous(2);
  const auto S = random_placement(cfg, 2);
  const auto a = proportional_access(cfg, S), b = equal_access(cfg, S);
  for (std::size_t i = 0; i < cfg.file_count(); ++i)
    for (std::size_t j = 0; j < cfg.server_count(); ++j) EXPECT_NEAR(a(i, j), b(i, j), 1e-12);
}

TEST(ProportionalAccess, FasterServerGetsMore) {
  SystemConfig cfg;
  cfg.servers = {{20.0, 0.01}, {10.0, 0.01}, {5.0, 0.01}};
  cfg.files = {{0, 4, 1, 3, 0.1, {}}};
  const Placement S{{{0, 1, 2}}};
  const auto pi = proportional_access(cfg, S);
  EXPECT_GT(pi(0, 0), pi(0, 1));
  EXPECT_GT(pi(0, 1), pi(0, 2));
  EXPECT_NEAR(pi(0, 0) + pi(0, 1) + pi(0, 2), 1.0, 1e-12);
  // Rate ratio 1/(0.01 + 1/20) : 1/(0.01 + 1/10)
  EXPECT_NEAR(pi(0, 0) / pi(0, 1), 0.11 / 0.06, 1e-9);
}

TEST(Baseline, RandomPlacementEqualAccessKeepsItsStart) {
  const auto cfg = small(3);
  const auto b = make_baseline(PolicyKind::rp_pea, cfg, 3, SolverSettings{});
  const auto S = random_placement(cfg, 3);
  const auto pi = equal_access(cfg, S);
  EXPECT_EQ(b.placement.sets, S.sets);
  for (std::size_t a = 0; a < pi.raw().size(); ++a) EXPECT_EQ(b.access.raw()[a], pi.raw()[a]);
  EXPECT_NEAR(b.mean_term * cfg.theta + b.tail_term * (1 - cfg.theta), b.objective, 1e-9 * b.objective);
}

TEST(Baseline, OptimizedPlacementKeepsEqualShares) {
  const auto cfg = small(4);
  const auto b = make_baseline(PolicyKind::op_pea, cfg, 4, SolverSettings{});
  for (std::size_t i = 0; i < cfg.file_count(); ++i) {
    const double share = static_cast<double>(cfg.files[i].k) / cfg.files[i].n;
    for (int j : b.placement[i]) EXPECT_NEAR(b.access(i, j), share, 1e-12);
  }
}

TEST(Baseline, PspEqualsPeaOnIdenticalServers) {
  const auto cfg = homogeneous(5);
  for (auto [psp, pea] : {std::pair{PolicyKind::rp_psp, PolicyKind::rp_pea},
                          std::pair{PolicyKind::op_psp, PolicyKind::op_pea}}) {
    const auto a = make_baseline(psp, cfg, 5, SolverSettings{});
    const auto b = make_baseline(pea, cfg, 5, SolverSettings{});
    EXPECT_NEAR(a.objective, b.objective, 1e-9 * b.objective) << policy_name(psp);
  }
}

TEST(Baseline, Deterministic) {
  const auto cfg = small(6);
  for (auto k : kAllPolicies) {
    const auto a = make_baseline(k, cfg, 6, SolverSettings{});
    const auto b = make_baseline(k, cfg, 6, SolverSettings{});
    EXPECT_EQ(a.objective, b.objective) << policy_name(k);
    EXPECT_EQ(a.access.raw(), b.access.raw());
    EXPECT_EQ(a.placement.sets, b.placement.sets);
  }
}

// Each policy optimizes over a subset of the full problem from the same start.
TEST(Baseline, FullOptimizerNoWorseOnSmallInstances) {
  int wins = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto cfg = small(seed);
    SolverSettings s;
    s.seed = seed;
    const double full = alternate(cfg, s).objective;
    for (auto k : kAllPolicies) {
      const double b = make_baseline(k, cfg, seed, s).objective;
      ++total;
      wins += full <= b * (1 + 1e-9);
    }
  }
  EXPECT_GE(wins, 0.9 * total);
}

TEST(Baseline, UnstableStartNamesThePolicy) {
  auto cfg = small(7);
  for (auto& f : cfg.files) f.lambda *= 20.0;
  try {
    make_baseline(PolicyKind::rp_psp, cfg, 7, SolverSettings{});
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("RP-PSP"), std::string::npos);
  }
}
