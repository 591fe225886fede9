#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "ecstream/analysis.hpp"
#include "ecstream/error.hpp"
#include "ecstream/model.hpp"
#include "ecstream/objective.hpp"
#include "ecstream/optimizer.hpp"
#include "ecstream/workload.hpp"

namespace ecstream {

enum class PolicyKind { rp_oa, op_pea, rp_pea, op_psp, rp_psp };

inline constexpr std::array<PolicyKind, 5> kAllPolicies{PolicyKind::rp_oa, PolicyKind::op_pea,
                                                       PolicyKind::rp_pea, PolicyKind::op_psp,
                                                       PolicyKind::rp_psp};

inline std::string_view policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::rp_oa: return "RP-OA";
    case PolicyKind::op_pea: return "OP-PEA";
    case PolicyKind::rp_pea: return "RP-PEA";
    case PolicyKind::op_psp: return "OP-PSP";
    case PolicyKind::rp_psp: return "RP-PSP";
  }
  return "unknown";
}

inline PolicyKind parse_policy(std::string_view s) {
  for (auto k : kAllPolicies)
    if (policy_name(k) == s) return k;
  throw ConfigError(fmt::format("unknown policy '{}'", s));
}

/// Access proportional to chunk service rate 1/(beta_j + 1/alpha_j), scaled to k_i and
/// projected onto each file's placement.
inline AccessMatrix proportional_access(const SystemConfig& cfg, const Placement& S) {
  double total = 0.0;
  for (const auto& s : cfg.servers) total += 1.0 / s.mean_service();
  AccessMatrix raw(cfg.file_count(), cfg.server_count(), 0.0);
  for (std::size_t i = 0; i < cfg.file_count(); ++i)
    for (std::size_t j = 0; j < cfg.server_count(); ++j)
      raw(i, j) = cfg.files[i].k / cfg.servers[j].mean_service() / total;
  return project_access(raw, S, code_k(cfg));
}

struct BaselineResult {
  PolicyKind kind;
  AccessMatrix access;
  Placement placement;
  AuxVars aux;
  double objective = 0.0;
  double mean_term = 0.0;
  double tail_term = 0.0;
  SolveTrace trace;
};

inline SubproblemMask policy_mask(PolicyKind k) {
  switch (k) {
    case PolicyKind::rp_oa: return {true, true, false};
    case PolicyKind::op_pea:
    case PolicyKind::op_psp: return {false, true, true};
    case PolicyKind::rp_pea:
    case PolicyKind::rp_psp: return {false, true, false};
  }
  return {};
}

/// Runs a comparison policy from the same random placement the full optimizer starts
/// from (the placement depends only on the seed).
inline BaselineResult make_baseline(PolicyKind kind, const SystemConfig& cfg, std::uint64_t seed,
                                    SolverSettings settings) {
  require_valid(cfg);
  StartPoint start;
  start.placement = random_placement(cfg, seed);
  const bool psp = kind == PolicyKind::op_psp || kind == PolicyKind::rp_psp;
  start.access = psp ? proportional_access(cfg, start.placement) : equal_access(cfg, start.placement);
  require_stable(cfg, start.access, fmt::format("policy {}", policy_name(kind)));
  start.aux = initial_aux(cfg, start.access, start.placement);

  settings.mask = policy_mask(kind);
  settings.seed = seed;
  auto res = alternate(cfg, start, settings);
  BaselineResult out{kind, std::move(res.access), std::move(res.placement), std::move(res.aux),
                     res.objective, 0.0, 0.0, std::move(res.trace)};
  const auto parts = objective_parts(BoundModel(cfg, out.access), out.aux);
  out.mean_term = parts.mean_term;
  out.tail_term = parts.tail_term;
  return out;
}

}  // namespace ecstream
