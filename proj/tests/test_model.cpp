#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ecstream/model.hpp"
#include "ecstream/random.hpp"

using namespace ecstream;

namespace {

SystemConfig two_server_config() {
  SystemConfig cfg;
  cfg.servers = {{20.0, 0.01}, {10.0, 0.02}, {15.0, 0.01}};
  VideoFile f;
  f.segments = 10;
  f.k = 2;
  f.n = 3;
  f.lambda = 0.01;
  cfg.files = {f};
  return cfg;
}

bool has(const std::vector<Violation>& v, const std::string& name) {
  for (const auto& x : v)
    if (x.constraint == name) return true;
  return false;
}

// Exhaustive KKT enumeration: each coordinate is at 0, at 1 or free with x = y - mu.
std::vector<double> brute_force_projection(const std::vector<double>& y, double k) {
  const std::size_t n = y.size();
  std::vector<double> best;
  double best_d = INFINITY;
  std::size_t combos = 1;
  for (std::size_t a = 0; a < n; ++a) combos *= 3;
  for (std::size_t code = 0; code < combos; ++code) {
    std::vector<int> state(n);
    std::size_t c = code;
    for (std::size_t a = 0; a < n; ++a, c /= 3) state[a] = static_cast<int>(c % 3);
    double ones = 0, free_sum = 0;
    int free_n = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (state[a] == 1) ones += 1;
      if (state[a] == 2) free_sum += y[a], ++free_n;
    }
    std::vector<double> x(n);
    double mu = 0.0;
    if (free_n > 0) {
      mu = (free_sum - (k - ones)) / free_n;
    } else if (std::abs(ones - k) > 1e-12) {
      continue;
    }
    bool ok = true;
    for (std::size_t a = 0; a < n; ++a) {
      if (state[a] == 0) x[a] = 0;
      if (state[a] == 1) x[a] = 1;
      if (state[a] == 2) {
        x[a] = y[a] - mu;
        if (x[a] < -1e-12 || x[a] > 1 + 1e-12) ok = false;
      }
    }
    if (!ok) continue;
    double d = 0;
    for (std::size_t a = 0; a < n; ++a) d += (x[a] - y[a]) * (x[a] - y[a]);
    if (d < best_d) best_d = d, best = x;
  }
  return best;
}

}  // namespace

TEST(ValidateConfig, EqualAccessOnPlacementIsClean) {
  auto cfg = two_server_config();
  Placement S{{{0, 1, 2}}};
  EXPECT_TRUE(validate_config(cfg, S, equal_access(cfg, S)).empty());
}

TEST(ValidateConfig, SupportOutsidePlacement) {
  auto cfg = two_server_config();
  cfg.servers.push_back({12.0, 0.01});
  Placement S{{{0, 1, 2}}};
  AccessMatrix pi(1, 4, 0.0);
  pi(0, 0) = 1.0;
  pi(0, 1) = 0.5;
  pi(0, 3) = 0.5;
  const auto v = validate_config(cfg, S, pi);
  ASSERT_TRUE(has(v, "support outside placement"));
  for (const auto& x : v)
    if (x.constraint == "support outside placement") {
      EXPECT_EQ(x.file, 0);
      EXPECT_EQ(x.server, 3);
    }
}

TEST(ValidateConfig, RowSumShort) {
  auto cfg = two_server_config();
  Placement S{{{0, 1, 2}}};
  auto pi = equal_access(cfg, S);
  pi(0, 0) -= 0.1;
  EXPECT_TRUE(has(validate_config(cfg, S, pi), "row sum"));
}

TEST(ValidateConfig, RowSumWithinTolerance) {
  auto cfg = two_server_config();
  Placement S{{{0, 1, 2}}};
  auto pi = equal_access(cfg, S);
  pi(0, 0) += 5e-10;
  EXPECT_TRUE(validate_config(cfg, S, pi).empty());
}

TEST(ValidateConfig, PlacementAndCodeInvariants) {
  auto cfg = two_server_config();
  Placement S{{{0, 2}}};
  AccessMatrix pi(1, 3, 0.0);
  pi(0, 0) = pi(0, 2) = 1.0;
  EXPECT_TRUE(has(validate_config(cfg, S, pi), "placement size"));
  cfg.files[0].k = 4;
  EXPECT_TRUE(has(validate_system(cfg), "code"));
  cfg.files[0].k = 2;
  cfg.files[0].cached_prefix = {0, 11, 0};
  EXPECT_TRUE(has(validate_system(cfg), "cached prefix"));
}

TEST(LambdaAgg, SingleTerm) {
  auto cfg = two_server_config();
  AccessMatrix pi(1, 3, 0.0);
  pi(0, 0) = 0.4;
  EXPECT_DOUBLE_EQ(lambda_agg(cfg, pi)[0], 0.004);
}

TEST(LambdaAgg, ZeroWorkload) {
  auto cfg = two_server_config();
  cfg.files[0].lambda = 0.0;
  for (double v : lambda_agg(cfg, AccessMatrix(1, 3, 0.5))) EXPECT_EQ(v, 0.0);
}

TEST(LambdaAgg, TwoFilesHandSum) {
  SystemConfig cfg;
  cfg.servers = {{10, 0.01}, {10, 0.01}};
  cfg.files = {{0, 1, 1, 2, 0.002, {}}, {1, 1, 1, 2, 0.003, {}}};
  AccessMatrix pi(2, 2, 0.5);
  EXPECT_NEAR(lambda_agg(cfg, pi)[0], 0.0025, 1e-15);
  EXPECT_NEAR(lambda_agg(cfg, pi)[1], 0.0025, 1e-15);
}

TEST(LambdaAgg, SumsToRateTimesK) {
  auto cfg = two_server_config();
  Placement S{{{0, 1, 2}}};
  const auto lam = lambda_agg(cfg, equal_access(cfg, S));
  EXPECT_NEAR(std::accumulate(lam.begin(), lam.end(), 0.0), 0.01 * 2, 1e-15);
}

TEST(Utilization, ClosedForm) {
  SystemConfig cfg;
  cfg.servers = {{20.0, 0.01}};
  cfg.files = {{0, 10, 1, 1, 0.01, {}}};
  AccessMatrix pi(1, 1, 1.0);
  EXPECT_NEAR(utilization(cfg, pi)[0], 0.006, 1e-15);
  cfg.files[0].lambda = 0.0;
  EXPECT_EQ(utilization(cfg, pi)[0], 0.0);
}

// Monte-Carlo oracle: rho = Lambda * E[R], R the sum of L shifted-exponential chunk times.
TEST(Utilization, MonteCarloOracle) {
  struct Case {
    double alpha, beta, lambda;
    int L;
    double expect;
  };
  for (const Case c : {Case{20.0, 0.01, 0.01, 10, 0.006}, Case{18.2298, 0.01, 0.1, 100, 0.6485}}) {
    SystemConfig cfg;
    cfg.servers = {{c.alpha, c.beta}};
    cfg.files = {{0, c.L, 1, 1, c.lambda, {}}};
    const double rho = utilization(cfg, AccessMatrix(1, 1, 1.0))[0];
    EXPECT_NEAR(rho, c.expect, 1e-4);
    auto rng = make_rng(7, c.L);
    const int draws = 1000000;
    double sum = 0;
    for (int d = 0; d < draws; ++d) {
      double r = 0;
      for (int l = 0; l < c.L; ++l) r += c.beta - std::log1p(-uniform01(rng)) / c.alpha;
      sum += r;
    }
    const double mc = c.lambda * sum / draws;
    EXPECT_NEAR(mc / rho, 1.0, 0.01);
  }
  // First reference server at lambda 0.1, L 100 is stable.
  SystemConfig cfg;
  cfg.servers = {{18.2298, 0.01}};
  cfg.files = {{0, 100, 1, 1, 0.1, {}}};
  EXPECT_LT(utilization(cfg, AccessMatrix(1, 1, 1.0))[0], 1.0);
  EXPECT_EQ(first_unstable_server(utilization(cfg, AccessMatrix(1, 1, 1.0))), -1);
}

TEST(Utilization, LinearInRateAndAccess) {
  SystemConfig cfg;
  cfg.servers = {{20.0, 0.01}, {12.0, 0.03}};
  cfg.files = {{0, 7, 1, 2, 0.02, {}}, {1, 3, 1, 2, 0.05, {}}};
  AccessMatrix pi(2, 2, 0.5);
  auto rho_at = [&](double dp, double dl) {
    auto c2 = cfg;
    c2.files[0].lambda += dl;
    auto p2 = pi;
    p2(0, 0) += dp;
    return utilization(c2, p2)[0];
  };
  const double h = 1e-3;
  const double s1 = (rho_at(h, 0) - rho_at(0, 0)) / h, s2 = (rho_at(2 * h, 0) - rho_at(h, 0)) / h;
  EXPECT_NEAR(s1, s2, 1e-10);
  const double l1 = (rho_at(0, h) - rho_at(0, 0)) / h, l2 = (rho_at(0, 2 * h) - rho_at(0, h)) / h;
  EXPECT_NEAR(l1, l2, 1e-10);
}

TEST(ProjectAccess, FeasibleInputUnchanged) {
  auto cfg = two_server_config();
  Placement S{{{0, 1, 2}}};
  AccessMatrix pi(1, 3, 0.0);
  pi(0, 0) = 0.9;
  pi(0, 1) = 0.6;
  pi(0, 2) = 0.5;
  const auto out = project_access(pi, S, code_k(cfg));
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(out(0, j), pi(0, j), 1e-12);
}

TEST(ProjectAccess, SymmetricRow) {
  AccessMatrix pi(1, 5, 1.0);
  Placement S{{{0, 1, 2, 3, 4}}};
  const std::vector<int> k{2};
  const auto out = project_access(pi, S, k);
  for (int j = 0; j < 5; ++j) EXPECT_NEAR(out(0, j), 0.4, 1e-12);
}

TEST(ProjectAccess, MatchesKktEnumeration) {
  auto rng = make_rng(11);
  Placement S{{{0, 1, 2, 3}}};
  for (int trial = 0; trial < 200; ++trial) {
    AccessMatrix raw(1, 4);
    std::vector<double> y(4);
    for (int j = 0; j < 4; ++j) y[j] = raw(0, j) = -1.5 + 4.0 * uniform01(rng);
    const int k = 1 + trial % 3;
    const std::vector<int> kv{k};
    const auto out = project_access(raw, S, kv);
    const auto oracle = brute_force_projection(y, k);
    ASSERT_EQ(oracle.size(), 4u);
    double sum = 0;
    for (int j = 0; j < 4; ++j) {
      EXPECT_NEAR(out(0, j), oracle[j], 1e-6);
      sum += out(0, j);
    }
    EXPECT_NEAR(sum, k, 1e-9);
    const auto again = project_access(out, S, kv);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(again(0, j), out(0, j), 1e-12);
  }
}

TEST(ProjectAccess, RestrictsToPlacementAndRejectsOversizedK) {
  AccessMatrix raw(1, 4, 0.7);
  Placement S{{{1, 3}}};
  const std::vector<int> k1{1};
  const auto out = project_access(raw, S, k1);
  EXPECT_EQ(out(0, 0), 0.0);
  EXPECT_EQ(out(0, 2), 0.0);
  EXPECT_NEAR(out(0, 1), 0.5, 1e-12);
  const std::vector<int> k3{3};
  EXPECT_THROW(project_access(raw, S, k3), InfeasibleError);
}
