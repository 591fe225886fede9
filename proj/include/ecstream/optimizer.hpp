#pragma once

// Alternating minimization of the weighted stall objective over access
// probabilities pi, Chernoff parameters t and placement S. The access and t
// steps are inner convex approximation (proximal-linear surrogate, diminishing
// step) with a backtracking safeguard that keeps every iterate feasible and
// monotone; the placement step permutes server roles per file.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ecstream/analysis.hpp"
#include "ecstream/assignment.hpp"
#include "ecstream/error.hpp"
#include "ecstream/model.hpp"
#include "ecstream/objective.hpp"
#include "ecstream/random.hpp"
#include "ecstream/workload.hpp"

namespace ecstream {

struct SubproblemMask {
  bool access = true;
  bool aux = true;
  bool placement = true;
};

struct SolverSettings {
  double tau_u = 1e-3;  // proximal weight, access surrogate
  double tau_t = 1e-3;  // proximal weight, t surrogate
  double gamma_decay = 0.6;  // gamma^nu = 1 / (1 + nu)^decay
  double eps = 1e-6;         // relative outer tolerance
  int max_outer = 1000;
  int max_inner = 200;
  double alpha_c = 50.0;  // sigmoid steepness of the binary penalty
  double C = 0.0;         // penalty weight; 0 means 10 |objective at init|
  int relax_iters = 20;
  int max_swap_rounds = 20;
  bool polish_aux = true;
  std::uint64_t seed = 1;
  SubproblemMask mask;

  void validate() const {
    if (!(tau_u > 0.0) || !(tau_t > 0.0)) throw ConfigError("proximal weights must be > 0");
    if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
    if (!(gamma_decay > 0.0 && gamma_decay <= 1.0)) throw ConfigError("gamma decay must lie in (0,1]");
    if (max_outer < 1 || max_inner < 1) throw ConfigError("iteration caps must be >= 1");
  }

  double gamma(int nu) const { return 1.0 / std::pow(1.0 + nu, gamma_decay); }
};

struct TraceEntry {
  int iteration = 0;
  std::string step;  // init, access, aux, placement
  double objective = 0.0;
  double row_residual = 0.0;  // max |sum_j pi_ij - k_i|
  double max_load = 0.0;
  int inner = 0;
};

struct SolveTrace {
  std::vector<TraceEntry> entries;
  bool converged = false;

  std::string csv() const {
    std::string out = "iteration,step,objective,row_residual,max_load,inner\n";
    for (const auto& e : entries)
      out += fmt::format("{},{},{:.10g},{:.3g},{:.10g},{}\n", e.iteration, e.step, e.objective,
                         e.row_residual, e.max_load, e.inner);
    return out;
  }
};

namespace detail {

inline double row_residual(const SystemConfig& cfg, const AccessMatrix& pi) {
  double worst = 0.0;
  for (std::size_t i = 0; i < cfg.file_count(); ++i) {
    const auto row = pi.row(i);
    worst = std::max(worst, std::abs(std::accumulate(row.begin(), row.end(), 0.0) - cfg.files[i].k));
  }
  return worst;
}

inline TraceEntry trace_entry(int it, std::string step, const ObjectiveState& st, int inner) {
  const auto& cfg = st.config();
  double load = 0.0;
  for (std::size_t j = 0; j < cfg.server_count(); ++j) load = std::max(load, st.load(j));
  return {it, std::move(step), st.objective(), row_residual(cfg, st.access()), load, inner};
}

inline void require_feasible(const ObjectiveState& st, const char* who) {
  if (auto v = st.violation(); !v.empty())
    throw DomainError(fmt::format("{}: infeasible starting point: {}", who, v));
}

inline bool improves(double candidate, double current) {
  return candidate < current - 1e-12 * std::max(1.0, std::abs(current));
}

}  // namespace detail

struct AccessResult {
  AccessMatrix access;
  SolveTrace trace;
};

/// Access step. The surrogate grad^T (p - pi) + tau_u/2 |p - pi|^2 over the capped
/// simplices is minimized exactly by projecting pi - grad/tau_u; the iterate moves
/// toward it with the diminishing step, halved until the point stays feasible and
/// gives sufficient decrease.
inline AccessResult optimize_access(const SystemConfig& cfg, const Placement& S, const AuxVars& t,
                                    const AccessMatrix& pi0, const SolverSettings& settings) {
  settings.validate();
  require_valid(cfg, S, pi0);
  ObjectiveState st(cfg, pi0, S, t);
  detail::require_feasible(st, "access step");
  const auto k = code_k(cfg);
  AccessResult out{pi0, {}};
  out.trace.entries.push_back(detail::trace_entry(0, "init", st, 0));

  AccessMatrix pi = pi0;
  double f = st.objective();
  for (int nu = 0; nu < settings.max_inner; ++nu) {
    const auto g = st.access_gradient();
    AccessMatrix raw(pi.files(), pi.servers(), 0.0);
    for (std::size_t i = 0; i < pi.files(); ++i)
      for (int j : S[i]) raw(i, j) = pi(i, j) - g(i, j) / settings.tau_u;
    const auto target = project_access(raw, S, k);
    double slope = 0.0;
    for (std::size_t i = 0; i < pi.files(); ++i)
      for (int j : S[i]) {
        const double d = target(i, j) - pi(i, j);
        if (d != 0.0) slope += g(i, j) * d;
      }
    if (!(slope < -1e-13 * std::max(1.0, std::abs(f)))) {
      out.trace.converged = true;
      break;
    }
    double gamma = settings.gamma(nu);
    bool accepted = false;
    AccessMatrix trial(pi.files(), pi.servers(), 0.0);
    for (int halving = 0; halving < 40 && !accepted; ++halving, gamma *= 0.5) {
      for (std::size_t a = 0; a < trial.raw().size(); ++a)
        trial.raw()[a] = pi.raw()[a] + gamma * (target.raw()[a] - pi.raw()[a]);
      st.set_access(trial);
      if (st.feasible() && st.objective() <= f + 1e-4 * gamma * slope) accepted = true;
    }
    if (!accepted) {
      st.set_access(pi);
      out.trace.converged = true;
      break;
    }
    const double prev = f;
    pi = trial;
    f = st.objective();
    out.trace.entries.push_back(detail::trace_entry(nu + 1, "access", st, 1));
    if (prev - f <= 1e-10 * std::max(1.0, std::abs(prev))) {
      out.trace.converged = true;
      break;
    }
  }
  out.access = pi;
  return out;
}

struct AuxResult {
  AuxVars aux;
  SolveTrace trace;
};

namespace detail {

/// Minimizes a 1-D function on (0, hi]: log-spaced scan, then golden section in the
/// bracket around the best grid point.
template <typename F>
std::pair<double, double> minimize_on_interval(F&& fn, double hi) {
  constexpr int grid = 48;
  const double lo = hi * 1e-7;
  std::vector<double> ts(grid), vs(grid);
  int best = 0;
  for (int a = 0; a < grid; ++a) {
    ts[a] = lo * std::pow(hi / lo, static_cast<double>(a) / (grid - 1));
    vs[a] = fn(ts[a]);
    if (vs[a] < vs[best]) best = a;
  }
  double a = ts[std::max(best - 1, 0)], b = ts[std::min(best + 1, grid - 1)];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int it = 0; it < 200 && b - a > 1e-13 * b; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = fn(d);
    }
  }
  std::pair<double, double> res{ts[best], vs[best]};
  if (fc < res.second) res = {c, fc};
  if (fd < res.second) res = {d, fd};
  return res;
}

}  // namespace detail

/// t step. The objective is separable in t given (pi, S), so each file's mean and
/// tail parameters are searched independently over (0, t_max]; a proximal-gradient
/// pass then polishes the result. Only improvements are accepted.
inline AuxResult optimize_aux(const SystemConfig& cfg, const Placement& S, const AccessMatrix& pi,
                              const AuxVars& t0, const SolverSettings& settings) {
  settings.validate();
  require_valid(cfg, S, pi);
  ObjectiveState st(cfg, pi, S, t0);
  detail::require_feasible(st, "aux step");
  BoundModel model(cfg, pi);
  AuxResult out{t0, {}};
  out.trace.entries.push_back(detail::trace_entry(0, "init", st, 0));

  AuxVars t = t0;
  for (std::size_t i = 0; i < cfg.file_count(); ++i) {
    if (!st.active(i, ObjectiveState::kMean) && !st.active(i, ObjectiveState::kTail)) continue;
    const double hi = t_domain_max(model, S[i]).t_max;
    for (int s = 0; s < 2; ++s) {
      if (!st.active(i, s)) continue;
      double& ti = s == ObjectiveState::kMean ? t.t_mean[i] : t.t_tail[i];
      // t_max is a bisection estimate from below; a start within its tolerance is admissible.
      if (ti > hi + kDomainTolerance)
        throw DomainError(fmt::format("file {}: t={} exceeds t_max={}", i, ti, hi));
      const double current = st.slot_value(i, s, ti);
      auto [best_t, best_v] =
          detail::minimize_on_interval([&](double x) { return st.slot_value(i, s, x); }, hi);
      if (settings.polish_aux) {
        // Proximal-gradient refinement with backtracking, by central slope.
        double x = best_t, v = best_v;
        for (int nu = 0; nu < 20; ++nu) {
          const double h = 1e-7 * x;
          const double g = (st.slot_value(i, s, x + h) - st.slot_value(i, s, x - h)) / (2 * h);
          if (!std::isfinite(g)) break;
          const double target = std::clamp(x - g / settings.tau_t, x * 1e-3, hi);
          double gamma = settings.gamma(nu);
          bool moved = false;
          for (int halving = 0; halving < 30; ++halving, gamma *= 0.5) {
            const double cand = x + gamma * (target - x);
            const double cv = st.slot_value(i, s, cand);
            if (detail::improves(cv, v)) {
              x = cand;
              v = cv;
              moved = true;
              break;
            }
          }
          if (!moved) break;
        }
        best_t = x;
        best_v = v;
      }
      if (detail::improves(best_v, current)) ti = best_t;
    }
  }
  st.set_aux(t);
  out.aux = t;
  out.trace.entries.push_back(detail::trace_entry(1, "aux", st, static_cast<int>(cfg.file_count())));
  out.trace.converged = true;
  return out;
}

struct PlacementResult {
  Placement placement;
  AccessMatrix access;
  SolveTrace trace;
};

namespace detail {

inline double sigmoid_slope(double z) {
  // d/dz 1/(1 + e^z)
  const double s = 1.0 / (1.0 + std::exp(z));
  return -s * (1.0 - s);
}

/// Relaxed permutation for one file: Frank-Wolfe over doubly-stochastic x with the
/// linearized objective plus C [s(alpha_c (x-1)) - s(alpha_c x)] per entry, which is
/// smallest at x in {0,1}. Returns perm with new_row[u] = row[perm[u]].
inline std::vector<int> relaxed_permutation(const std::vector<double>& grad_row,
                                            const std::vector<double>& row, double C, double alpha_c,
                                            int iters) {
  const std::size_t m = row.size();
  double finite_max = 0.0;
  for (double g : grad_row)
    if (std::isfinite(g)) finite_max = std::max(finite_max, std::abs(g));
  const double blocked = 1e6 * (1.0 + finite_max);
  std::vector<double> lin(m * m), x(m * m, 1.0 / m), cost(m * m);
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t v = 0; v < m; ++v) {
      const double g = std::isfinite(grad_row[u]) ? grad_row[u] : blocked;
      lin[u * m + v] = row[v] == 0.0 ? 0.0 : g * row[v];
    }
  for (int k = 0; k < iters; ++k) {
    for (std::size_t a = 0; a < m * m; ++a)
      cost[a] = lin[a] + C * alpha_c * (sigmoid_slope(alpha_c * (x[a] - 1.0)) - sigmoid_slope(alpha_c * x[a]));
    const auto vertex = hungarian(cost, m);
    const double gamma = 2.0 / (k + 2.0);
    for (std::size_t a = 0; a < m * m; ++a) x[a] *= 1.0 - gamma;
    for (std::size_t u = 0; u < m; ++u) x[u * m + vertex[u]] += gamma;
  }
  for (std::size_t a = 0; a < m * m; ++a) cost[a] = -x[a];
  return hungarian(cost, m);
}

/// Applies new_row[u] = row[perm[u]] to file i through transpositions; returns them
/// in order so the caller can undo.
inline std::vector<std::pair<std::size_t, std::size_t>> apply_permutation(ObjectiveState& st, std::size_t i,
                                                                          const std::vector<int>& perm) {
  std::vector<std::pair<std::size_t, std::size_t>> done;
  // pos[v]: where original role v sits now; at[u]: which role sits at u
  const std::size_t m = perm.size();
  std::vector<int> pos(m), at(m);
  std::iota(pos.begin(), pos.end(), 0);
  std::iota(at.begin(), at.end(), 0);
  for (std::size_t u = 0; u < m; ++u) {
    const int v = perm[u];
    const int p = pos[v];
    if (p == static_cast<int>(u)) continue;
    st.swap_roles(i, u, p);
    done.emplace_back(u, p);
    const int displaced = at[u];
    at[p] = displaced;
    pos[displaced] = p;
    at[u] = v;
    pos[v] = static_cast<int>(u);
  }
  return done;
}

}  // namespace detail

/// Placement step: per file, a relaxed assignment rounded to a permutation of server
/// roles, followed by first-improvement pairwise exchanges. A move is kept only if
/// the point stays feasible and the objective decreases.
inline PlacementResult optimize_placement(const SystemConfig& cfg, const AccessMatrix& pi,
                                          const AuxVars& t, const Placement& S0,
                                          const SolverSettings& settings) {
  settings.validate();
  require_valid(cfg, S0, pi);
  ObjectiveState st(cfg, pi, S0, t);
  detail::require_feasible(st, "placement step");
  PlacementResult out{S0, pi, {}};
  out.trace.entries.push_back(detail::trace_entry(0, "init", st, 0));
  const double f0 = st.objective();
  const double C = settings.C > 0.0 ? settings.C : 10.0 * std::abs(f0);
  const std::size_t m = cfg.server_count();

  int moves = 0;
  for (int round = 0; round < settings.max_swap_rounds; ++round) {
    bool improved = false;
    for (std::size_t i = 0; i < cfg.file_count(); ++i) {
      if (st.weight(i) == 0.0) continue;
      std::vector<double> row(m);
      for (std::size_t j = 0; j < m; ++j) row[j] = st.access()(i, j);
      const auto perm = detail::relaxed_permutation(st.access_gradient_row(i), row, C,
                                                    settings.alpha_c, settings.relax_iters);
      bool identity = true;
      for (std::size_t u = 0; u < m; ++u) identity = identity && perm[u] == static_cast<int>(u);
      if (!identity) {
        const double before = st.objective();
        const auto swaps = detail::apply_permutation(st, i, perm);
        if (st.feasible() && detail::improves(st.objective(), before)) {
          ++moves;
          improved = true;
        } else {
          for (auto it = swaps.rbegin(); it != swaps.rend(); ++it) st.swap_roles(i, it->first, it->second);
        }
      }
      for (std::size_t u = 0; u < m; ++u)
        for (std::size_t v = u + 1; v < m; ++v) {
          if (st.access()(i, u) == st.access()(i, v) && st.member(i, u) == st.member(i, v)) continue;
          const double before = st.objective();
          const auto undo = st.save(i, u, v);
          st.swap_roles(i, u, v);
          if (st.feasible_at(u, v) && detail::improves(st.objective(), before)) {
            ++moves;
            improved = true;
          } else {
            st.restore(undo);
          }
        }
    }
    // Group exchange of servers u and v, tried once the per-file moves stall: files
    // ranked by their single-file delta are exchanged cumulatively and the best
    // improving prefix is kept (Kernighan-Lin).
    if (improved) continue;
    for (std::size_t u = 0; u < m; ++u)
      for (std::size_t v = u + 1; v < m; ++v) {
        const double before = st.objective();
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t i = 0; i < cfg.file_count(); ++i) {
          if (st.access()(i, u) == st.access()(i, v) && st.member(i, u) == st.member(i, v)) continue;
          const auto undo = st.save(i, u, v);
          st.swap_roles(i, u, v);
          const double delta = st.feasible_at(u, v) ? st.objective() - before : kInf;
          st.restore(undo);
          ranked.emplace_back(delta, i);
        }
        if (ranked.size() < 2) continue;
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        double best = before;
        std::size_t best_len = 0;
        for (std::size_t a = 0; a < ranked.size(); ++a) {
          st.swap_roles(ranked[a].second, u, v);
          if (st.feasible_at(u, v) && detail::improves(st.objective(), best)) {
            best = st.objective();
            best_len = a + 1;
          }
        }
        for (std::size_t a = ranked.size(); a > best_len; --a) st.swap_roles(ranked[a - 1].second, u, v);
        if (best_len > 0) {
          ++moves;
          improved = true;
          continue;
        }
        // Otherwise the same exchange in two files, among the best-ranked few.
        const std::size_t top = std::min<std::size_t>(ranked.size(), 8);
        bool paired = false;
        for (std::size_t a = 0; a < top && !paired; ++a)
          for (std::size_t b = a + 1; b < top && !paired; ++b) {
            const auto undo = st.save({ranked[a].second, ranked[b].second}, u, v);
            st.swap_roles(ranked[a].second, u, v);
            st.swap_roles(ranked[b].second, u, v);
            if (st.feasible_at(u, v) && detail::improves(st.objective(), before)) {
              paired = true;
            } else {
              st.restore(undo);
            }
          }
        if (paired) {
          ++moves;
          improved = true;
        }
      }
    if (!improved) break;
  }

  // Incremental updates drift by rounding; confirm on a fresh evaluation.
  ObjectiveState fresh(cfg, st.access(), st.placement(), t);
  if (fresh.feasible() && fresh.objective() <= f0) {
    out.placement = fresh.placement();
    out.access = fresh.access();
    out.trace.entries.push_back(detail::trace_entry(1, "placement", fresh, moves));
  } else {
    ObjectiveState back(cfg, pi, S0, t);
    out.trace.entries.push_back(detail::trace_entry(1, "placement", back, 0));
  }
  out.trace.converged = true;
  return out;
}

struct OptimizeResult {
  AccessMatrix access;
  Placement placement;
  AuxVars aux;
  SolveTrace trace;
  double objective = 0.0;
  int outer_iterations = 0;
};

/// Starting point for the chosen placement: equal access k/n and t = 0.01 pulled
/// inside each file's admissible interval.
inline AuxVars initial_aux(const SystemConfig& cfg, const AccessMatrix& pi, const Placement& S) {
  BoundModel model(cfg, pi);
  AuxVars t;
  for (std::size_t i = 0; i < cfg.file_count(); ++i) {
    const double hi = t_domain_max(model, S[i]).t_max;
    const double v = std::min(0.01, 0.5 * hi);
    t.t_mean.push_back(v);
    t.t_tail.push_back(v);
  }
  return t;
}

/// Replaces every t that is inadmissible under (cfg, pi) by its initial value. Slots
/// a solve never touched (the mean t at theta = 0, the tail t at theta = 1) can fall
/// outside the domain once pi moves; re-tuning at another theta starts from here.
inline AuxVars admissible_aux(const SystemConfig& cfg, const AccessMatrix& pi, const Placement& S,
                              AuxVars t) {
  const BoundModel model(cfg, pi);
  const auto init = initial_aux(cfg, pi, S);
  for (std::size_t i = 0; i < cfg.file_count(); ++i) {
    if (model.check_file(i, t.t_mean[i]).first != DomainConstraint::none) t.t_mean[i] = init.t_mean[i];
    if (model.check_file(i, t.t_tail[i]).first != DomainConstraint::none) t.t_tail[i] = init.t_tail[i];
  }
  return t;
}

struct StartPoint {
  AccessMatrix access;
  Placement placement;
  AuxVars aux;
};

inline void require_stable(const SystemConfig& cfg, const AccessMatrix& pi, std::string_view who) {
  const auto rho = utilization(cfg, pi);
  if (int j = first_unstable_server(rho); j >= 0)
    throw InfeasibleError(fmt::format("{}: server {} utilization {:.6g} >= 1 at the initial access", who, j, rho[j]));
}

inline StartPoint default_start(const SystemConfig& cfg, std::uint64_t seed) {
  require_valid(cfg);
  StartPoint sp;
  sp.placement = random_placement(cfg, seed);
  sp.access = equal_access(cfg, sp.placement);
  require_stable(cfg, sp.access, "initialization");
  sp.aux = initial_aux(cfg, sp.access, sp.placement);
  return sp;
}

inline OptimizeResult alternate(const SystemConfig& cfg, const StartPoint& init,
                                const SolverSettings& settings) {
  settings.validate();
  require_valid(cfg, init.placement, init.access);
  require_stable(cfg, init.access, "initialization");
  OptimizeResult out{init.access, init.placement, init.aux, {}, 0.0, 0};
  {
    ObjectiveState st(cfg, out.access, out.placement, out.aux);
    detail::require_feasible(st, "initialization");
    out.objective = st.objective();
    out.trace.entries.push_back(detail::trace_entry(0, "init", st, 0));
  }
  auto record = [&](int it, const char* step, const SolveTrace& inner) {
    ObjectiveState st(cfg, out.access, out.placement, out.aux);
    out.objective = st.objective();
    out.trace.entries.push_back(detail::trace_entry(it, step, st, static_cast<int>(inner.entries.size()) - 1));
  };
  for (int it = 1; it <= settings.max_outer; ++it) {
    out.outer_iterations = it;
    const double prev = out.objective;
    if (settings.mask.access) {
      auto res = optimize_access(cfg, out.placement, out.aux, out.access, settings);
      out.access = std::move(res.access);
      record(it, "access", res.trace);
    }
    if (settings.mask.aux) {
      auto res = optimize_aux(cfg, out.placement, out.access, out.aux, settings);
      out.aux = std::move(res.aux);
      record(it, "aux", res.trace);
    }
    if (settings.mask.placement) {
      auto res = optimize_placement(cfg, out.access, out.aux, out.placement, settings);
      out.access = std::move(res.access);
      out.placement = std::move(res.placement);
      record(it, "placement", res.trace);
    }
    if (prev - out.objective <= settings.eps * std::max(std::abs(prev), 1e-300)) {
      out.trace.converged = true;
      break;
    }
  }
  return out;
}

inline OptimizeResult alternate(const SystemConfig& cfg, const SolverSettings& settings) {
  return alternate(cfg, default_start(cfg, settings.seed), settings);
}

/// Solves theta = p / (points - 1) for every p. Each point starts from the seeded
/// default and, in a forward then a backward pass, from its neighbour's (pi, S); the
/// lowest objective wins. A final pass scores every other point's (pi, S) with t
/// re-tuned and restarts from the best one if it beats the current point by more
/// than eps, so no point loses on its own objective to another point's layout.
inline std::vector<OptimizeResult> solve_frontier(const SystemConfig& base, int points,
                                                  const SolverSettings& settings) {
  if (points < 2) throw ConfigError("a frontier needs at least 2 points");
  std::vector<SystemConfig> cfgs(points, base);
  for (int p = 0; p < points; ++p) cfgs[p].theta = static_cast<double>(p) / (points - 1);
  auto from = [&](int p, const OptimizeResult& other) {
    StartPoint sp{other.access, other.placement, initial_aux(cfgs[p], other.access, other.placement)};
    return alternate(cfgs[p], sp, settings);
  };
  std::vector<OptimizeResult> out;
  for (int p = 0; p < points; ++p) {
    out.push_back(alternate(cfgs[p], settings));
    if (p > 0) {
      auto warm = from(p, out[p - 1]);
      if (warm.objective < out[p].objective) out[p] = std::move(warm);
    }
  }
  for (int p = points - 2; p >= 0; --p) {
    auto warm = from(p, out[p + 1]);
    if (warm.objective < out[p].objective) out[p] = std::move(warm);
  }
  // A restart needs a gain above the outer tolerance; the cap only guards against
  // a long chain of such gains.
  for (int round = 0; round < 4 * points; ++round) {
    bool changed = false;
    for (int p = 0; p < points; ++p) {
      std::optional<StartPoint> best;
      double best_value = out[p].objective;
      for (int q = 0; q < points; ++q) {
        if (q == p) continue;
        const auto& o = out[q];
        auto t = admissible_aux(cfgs[p], o.access, o.placement, o.aux);
        t = optimize_aux(cfgs[p], o.placement, o.access, t, settings).aux;
        const double v = ObjectiveState(cfgs[p], o.access, o.placement, t).objective();
        if (best_value - v > settings.eps * std::abs(best_value)) {
          best_value = v;
          best = StartPoint{o.access, o.placement, std::move(t)};
        }
      }
      if (!best) continue;
      auto warm = alternate(cfgs[p], *best, settings);
      if (warm.objective < out[p].objective) {
        out[p] = std::move(warm);
        changed = true;
      }
    }
    if (!changed) break;
  }
  return out;
}

}  // namespace ecstream
