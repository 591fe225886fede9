#include <gtest/gtest.h>

#include <cmath>

#include "ecstream/analysis.hpp"
#include "ecstream/objective.hpp"
#include "ecstream/workload.hpp"

using namespace ecstream;

namespace {

struct Point {
  Instance inst;
  AuxVars t;
};

Point feasible_point(std::uint64_t seed, double theta = 0.5, double fraction = 0.5) {
  Point p{small_instance({}, seed), {}};
  p.inst.config.theta = theta;
  p.inst.config.tail_threshold = 2.0;
  BoundModel model(p.inst.config, p.inst.access);
  auto rng = make_rng(seed, 99);
  for (std::size_t i = 0; i < p.inst.config.file_count(); ++i) {
    const double tm = t_domain_max(model, p.inst.placement[i]).t_max;
    p.t.t_mean.push_back(fraction * tm * (0.5 + uniform01(rng)));
    p.t.t_tail.push_back(fraction * tm * (0.5 + uniform01(rng)));
  }
  return p;
}

double objective_at(const Point& p, const AccessMatrix& pi, const AuxVars& t) {
  return ObjectiveState(p.inst.config, pi, p.inst.placement, t).objective();
}

bool close(double analytic, double fd, double rel) {
  return std::abs(analytic - fd) <= rel * std::max(std::abs(fd), 1e-8);
}

}  // namespace

TEST(Gradient, AccessMatchesCentralDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = feasible_point(seed);
    const auto g = objective_gradient(p.inst.config, p.inst.access, p.inst.placement, p.t, GradientTarget::access);
    const double h = 1e-6;
    for (std::size_t i = 0; i < p.inst.config.file_count(); ++i)
      for (int j : p.inst.placement[i]) {
        auto up = p.inst.access, dn = p.inst.access;
        up(i, j) += h;
        dn(i, j) -= h;
        const double fd = (objective_at(p, up, p.t) - objective_at(p, dn, p.t)) / (2 * h);
        EXPECT_TRUE(close(g.access(i, j), fd, 1e-4)) << seed << " " << i << " " << j << " " << g.access(i, j) << " " << fd;
      }
  }
}

TEST(Gradient, AuxMatchesCentralDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = feasible_point(seed);
    const auto g = objective_gradient(p.inst.config, p.inst.access, p.inst.placement, p.t, GradientTarget::aux);
    for (std::size_t i = 0; i < p.inst.config.file_count(); ++i)
      for (int s = 0; s < 2; ++s) {
        auto up = p.t, dn = p.t;
        auto& u = s == 0 ? up.t_mean[i] : up.t_tail[i];
        auto& d = s == 0 ? dn.t_mean[i] : dn.t_tail[i];
        const double h = 1e-6 * u;
        u += h;
        d -= h;
        const double fd = (objective_at(p, p.inst.access, up) - objective_at(p, p.inst.access, dn)) / (2 * h);
        const double an = s == 0 ? g.aux.t_mean[i] : g.aux.t_tail[i];
        EXPECT_TRUE(close(an, fd, 1e-4)) << seed << " " << i << " " << s << " " << an << " " << fd;
      }
  }
}

TEST(Gradient, InactiveTermHasZeroGradient) {
  auto p = feasible_point(2, 1.0);
  auto g = objective_gradient(p.inst.config, p.inst.access, p.inst.placement, p.t, GradientTarget::aux);
  for (double v : g.aux.t_tail) EXPECT_EQ(v, 0.0);
  for (double v : g.aux.t_mean) EXPECT_NE(v, 0.0);
  p = feasible_point(2, 0.0);
  g = objective_gradient(p.inst.config, p.inst.access, p.inst.placement, p.t, GradientTarget::aux);
  for (double v : g.aux.t_mean) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, SymmetricServersGetEqualEntries) {
  SystemConfig cfg;
  cfg.servers.assign(4, {15.0, 0.02});
  cfg.files = {{0, 6, 2, 4, 0.2, {}}, {1, 6, 2, 4, 0.2, {}}};
  cfg.tau = 1.0;
  cfg.startup_delay = 1.0;
  cfg.tail_threshold = 1.0;
  Placement S{{{0, 1, 2, 3}, {0, 1, 2, 3}}};
  const auto pi = equal_access(cfg, S);
  AuxVars t{{0.5, 0.5}, {0.7, 0.7}};
  const auto g = objective_gradient(cfg, pi, S, t, GradientTarget::access).access;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 1; j < 4; ++j) EXPECT_NEAR(g(i, j), g(0, 0), 1e-12 * std::abs(g(0, 0)));
}

TEST(Gradient, RejectsInfeasiblePoint) {
  auto p = feasible_point(3);
  p.t.t_mean[0] = 1e3;
  EXPECT_THROW(objective_gradient(p.inst.config, p.inst.access, p.inst.placement, p.t, GradientTarget::aux),
               DomainError);
}

TEST(State, MatchesWeightedObjective) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = feasible_point(seed);
    ObjectiveState st(p.inst.config, p.inst.access, p.inst.placement, p.t);
    const double ref = weighted_objective(p.inst.config, p.inst.access, p.inst.placement, p.t);
    EXPECT_NEAR(st.objective(), ref, 1e-12 * ref);
    EXPECT_TRUE(st.feasible());
    for (std::size_t i = 0; i < p.inst.config.file_count(); ++i) {
      EXPECT_NEAR(st.bound(i, ObjectiveState::kMean), mean_stall_bound(p.inst.config, p.inst.access, i, p.t.t_mean[i]), 1e-12);
      EXPECT_NEAR(st.slot_value(i, ObjectiveState::kMean, p.t.t_mean[i]), st.slot_current(i, ObjectiveState::kMean), 1e-12);
    }
  }
}

TEST(State, SwapMatchesFreshEvaluation) {
  auto rng = make_rng(31);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = feasible_point(seed, 0.5, 0.2);
    ObjectiveState st(p.inst.config, p.inst.access, p.inst.placement, p.t);
    for (int k = 0; k < 20; ++k) {
      const std::size_t i = static_cast<std::size_t>(uniform01(rng) * 5);
      const std::size_t u = static_cast<std::size_t>(uniform01(rng) * 4);
      const std::size_t v = static_cast<std::size_t>(uniform01(rng) * 4);
      st.swap_roles(i, u, v);
      ObjectiveState fresh(p.inst.config, st.access(), st.placement(), p.t);
      EXPECT_EQ(st.feasible(), fresh.feasible());
      if (fresh.feasible()) {
        EXPECT_NEAR(st.objective(), fresh.objective(), 1e-10 * fresh.objective());
      }
    }
  }
}

// Rejected trials are undone from a snapshot; the state must stay exact.
TEST(State, RestoreUndoesRejectedSwaps) {
  auto rng = make_rng(47);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = feasible_point(seed, 0.5, 0.2);
    ObjectiveState st(p.inst.config, p.inst.access, p.inst.placement, p.t);
    for (int k = 0; k < 200; ++k) {
      const std::size_t i = static_cast<std::size_t>(uniform01(rng) * 5);
      const std::size_t u = static_cast<std::size_t>(uniform01(rng) * 4);
      const std::size_t v = static_cast<std::size_t>(uniform01(rng) * 4);
      const double before = st.objective();
      const auto undo = st.save(i, u, v);
      st.swap_roles(i, u, v);
      if (uniform01(rng) < 0.5 || !st.feasible()) {
        st.restore(undo);
        EXPECT_EQ(st.objective(), before);
      }
    }
    ObjectiveState fresh(p.inst.config, st.access(), st.placement(), p.t);
    ASSERT_TRUE(fresh.feasible());
    EXPECT_NEAR(st.objective(), fresh.objective(), 1e-10 * fresh.objective());
  }
}
