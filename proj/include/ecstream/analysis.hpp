#pragma once

// Transform-domain evaluation of chunk download times and the two stall bounds.
//
// For a request of file i served by server j, chunk l of the stream completes after
// D = W_j + Y_1 + ... + Y_l, where W_j is the M/G/1 waiting time of server j and the
// Y_v are shifted-exponential chunk service times. With
//
//   M_j(t)   = alpha/(alpha-t) e^{beta t}                      chunk MGF
//   B_j(t)   = sum_f (pi_fj lambda_f / Lambda_j) M_j(t)^{L_f}  request service MGF
//   E[e^{tW}] = (1-rho_j) t / (t - Lambda_j (B_j(t) - 1))      Pollaczek-Khinchine
//   H_ij(t)  = sum_l e^{-t(d_s + (l-1)tau)} E[e^{t D^{(l)}}]
//
// the mean stall obeys E[stall] <= (1/t) log sum_j pi_ij (1 + H_ij) and the tail obeys
// P(stall >= x) <= e^{-tx} sum_j pi_ij (1 + H_ij), for any admissible t > 0.
//
// Everything is carried in log space: M_j^L with L in the thousands overflows doubles
// long before the bounds themselves become large.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ecstream/error.hpp"
#include "ecstream/model.hpp"

namespace ecstream {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Which admissibility condition on t fails (or binds) at a server.
enum class DomainConstraint {
  none,
  positive,     // t > 0
  pole,         // t < alpha_j: the chunk MGF exists
  shifted_mgf,  // alpha_j (e^{(beta_j - tau) t} - 1) + t < 0
  waiting_mgf,  // sum_f pi_fj lambda_f M_j(t)^{L_f} - (Lambda_j + t) < 0
  stability,    // rho_j < 1
};

inline std::string_view constraint_name(DomainConstraint c) {
  switch (c) {
    case DomainConstraint::none: return "none";
    case DomainConstraint::positive: return "t-positive";
    case DomainConstraint::pole: return "mgf-pole";
    case DomainConstraint::shifted_mgf: return "shifted-mgf";
    case DomainConstraint::waiting_mgf: return "waiting-mgf";
    case DomainConstraint::stability: return "stability";
  }
  return "unknown";
}

namespace detail {

inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

/// log of the shifted-exponential MGF; requires t < alpha.
inline double log_mgf(const ServerParams& s, double t) {
  return s.beta * t - std::log1p(-t / s.alpha);
}

/// log sum_{l=1}^{count} e^{l u} by direct log-sum-exp.
inline double log_geometric_direct(double u, int count) {
  double acc = -kInf;
  for (int l = 1; l <= count; ++l) acc = log_add_exp(acc, l * u);
  return acc;
}

inline constexpr double kGeometricDegeneracy = 1e-12;

/// log sum_{l=1}^{count} e^{l u} in closed form, falling back to summation when
/// |1 - e^u| is below the degeneracy threshold.
inline double log_geometric_sum(double u, int count) {
  if (count <= 0) return -kInf;
  const double em1 = std::expm1(u);
  if (std::abs(em1) < kGeometricDegeneracy) return log_geometric_direct(u, count);
  const double Lu = count * u;
  if (u < 0.0) return u + std::log(-std::expm1(Lu)) - std::log(-em1);
  return u + Lu + std::log(-std::expm1(-Lu)) - std::log(em1);
}

/// Mean of l under weights e^{l u}, l = 1..count. Equals d/du log_geometric_sum.
inline double geometric_mean_index(double u, int count) {
  if (count <= 1) return count == 1 ? 1.0 : 0.0;
  if (std::abs(u) < 1e-3) {
    double num = 0.0, den = 0.0;
    for (int l = 1; l <= count; ++l) {
      const double w = std::exp((l - count) * u);
      num += l * w;
      den += w;
    }
    return num / den;
  }
  auto ratio = [](double v) {  // e^v / (e^v - 1)
    return v > 0.0 ? 1.0 / -std::expm1(-v) : std::exp(v) / std::expm1(v);
  };
  return 1.0 + count * ratio(count * u) - ratio(u);
}

}  // namespace detail

/// Parameters of one of the y equal-bandwidth streams of server j: the rate drops by
/// a factor y and the shift grows by y. With y = 1 this is the server itself.
inline ServerParams stream_params(const SystemConfig& cfg, std::size_t j) {
  const auto& s = cfg.servers[j];
  const double y = cfg.streams_per_server;
  return {s.alpha / y, s.beta * y};
}

/// MGF of the shifted-exponential chunk service time, E[e^{tX}].
inline double chunk_mgf(const ServerParams& sp, double t) {
  if (!(t < sp.alpha))
    throw DomainError(fmt::format("chunk MGF pole: t={} >= alpha={}", t, sp.alpha));
  return std::exp(detail::log_mgf(sp, t));
}

struct ShiftedMgf {
  double value = 1.0;       // M_j(t) e^{-t tau}
  double constraint = 0.0;  // alpha (e^{(beta - tau) t} - 1) + t; admissible when < 0
  bool below_one = false;   // value < 1
};

inline ShiftedMgf shifted_chunk_mgf(const ServerParams& sp, double t, double tau) {
  if (!(t < sp.alpha))
    throw DomainError(fmt::format("chunk MGF pole: t={} >= alpha={}", t, sp.alpha));
  ShiftedMgf out;
  out.value = std::exp(detail::log_mgf(sp, t) - t * tau);
  out.constraint = sp.alpha * std::expm1((sp.beta - tau) * t) + t;
  out.below_one = out.value < 1.0;
  return out;
}

/// Evaluation context for one (config, access) pair: caches per-server rates and loads.
/// Holds references; the config and access matrix must outlive it.
class BoundModel {
 public:
  BoundModel(const SystemConfig& cfg, const AccessMatrix& pi) : cfg_(cfg), pi_(pi) {
    if (pi.files() != cfg.file_count() || pi.servers() != cfg.server_count())
      throw ConfigError(fmt::format("access matrix is {}x{}, expected {}x{}", pi.files(),
                                    pi.servers(), cfg.file_count(), cfg.server_count()));
    const std::size_t m = cfg.server_count();
    streams_.resize(m);
    for (std::size_t j = 0; j < m; ++j) streams_[j] = stream_params(cfg, j);
    const double y = cfg.streams_per_server;
    rate_ = lambda_agg(cfg, pi);
    for (double& v : rate_) v /= y;
    load_ = utilization(cfg, pi);
  }

  const SystemConfig& config() const { return cfg_; }
  const AccessMatrix& access() const { return pi_; }
  const ServerParams& stream(std::size_t j) const { return streams_[j]; }
  /// Request rate seen by one stream of server j.
  double stream_rate(std::size_t j) const { return rate_[j]; }
  double load(std::size_t j) const { return load_[j]; }
  const std::vector<double>& loads() const { return load_; }

  /// Access weight of file f on one stream of server j.
  double stream_weight(std::size_t f, std::size_t j) const {
    return pi_(f, j) / cfg_.streams_per_server;
  }

  /// Lambda_j (B_j(t) - 1) = sum_f q_fj lambda_f (M_j(t)^{L_fj} - 1); +inf past the pole.
  double excess_service(std::size_t j, double t) const {
    const auto& sp = streams_[j];
    if (!(t < sp.alpha)) return kInf;
    const double lm = detail::log_mgf(sp, t);
    double sum = 0.0;
    for (std::size_t f = 0; f < cfg_.file_count(); ++f) {
      const double q = stream_weight(f, j);
      if (q == 0.0 || cfg_.files[f].lambda == 0.0) continue;
      sum += q * cfg_.files[f].lambda * std::expm1(segments_at(cfg_.files[f], j) * lm);
    }
    return sum;
  }

  /// d/dt of excess_service.
  double excess_service_slope(std::size_t j, double t) const {
    const auto& sp = streams_[j];
    const double lm = detail::log_mgf(sp, t);
    const double dlm = sp.beta + 1.0 / (sp.alpha - t);
    double sum = 0.0;
    for (std::size_t f = 0; f < cfg_.file_count(); ++f) {
      const double q = stream_weight(f, j);
      if (q == 0.0 || cfg_.files[f].lambda == 0.0) continue;
      const int L = segments_at(cfg_.files[f], j);
      sum += q * cfg_.files[f].lambda * L * std::exp(L * lm) * dlm;
    }
    return sum;
  }

  /// Request service MGF B_j(t) of one stream.
  double service_mgf(std::size_t j, double t) const {
    if (rate_[j] == 0.0)
      throw DomainError(fmt::format("server {} receives no requests; B_j is undefined", j));
    return 1.0 + excess_service(j, t) / rate_[j];
  }

  /// First admissibility condition violated at server j by t, or none.
  DomainConstraint check(std::size_t j, double t) const {
    if (!(t > 0.0)) return DomainConstraint::positive;
    if (!(load_[j] < 1.0)) return DomainConstraint::stability;
    const auto& sp = streams_[j];
    if (!(t < sp.alpha)) return DomainConstraint::pole;
    if (!(sp.alpha * std::expm1((sp.beta - cfg_.tau) * t) + t < 0.0))
      return DomainConstraint::shifted_mgf;
    if (!(t - excess_service(j, t) > 0.0)) return DomainConstraint::waiting_mgf;
    return DomainConstraint::none;
  }

  /// First violated condition over the servers file i actually uses (pi_ij > 0).
  std::pair<DomainConstraint, int> check_file(std::size_t i, double t) const {
    for (std::size_t j = 0; j < cfg_.server_count(); ++j) {
      if (pi_(i, j) == 0.0) continue;
      if (auto c = check(j, t); c != DomainConstraint::none) return {c, static_cast<int>(j)};
    }
    return {DomainConstraint::none, -1};
  }

  void require_admissible(std::size_t i, double t) const {
    auto [c, j] = check_file(i, t);
    if (c != DomainConstraint::none)
      throw DomainError(fmt::format("file {}: t={} violates {} at server {}", i, t,
                                    constraint_name(c), j));
  }

  /// log E[e^{tW}] of the queueing delay ahead of a request at one stream of server j,
  /// under the configured waiting model. Assumes check(j, t) passed.
  double log_waiting_mgf(std::size_t j, double t) const {
    const double excess = excess_service(j, t);
    double out = std::log1p(-load_[j]) + std::log(t) - std::log(t - excess);
    if (cfg_.waiting == WaitingModel::sojourn && rate_[j] > 0.0)
      out += std::log1p(excess / rate_[j]);
    return out;
  }

  /// log E[e^{t D^{(l)}}] for the l-th streamed chunk of a request at server j.
  double log_download_mgf(std::size_t j, int ell, double t) const {
    return log_waiting_mgf(j, t) + ell * detail::log_mgf(streams_[j], t);
  }

  /// log of u = log(M_j(t) e^{-t tau}), the ratio of consecutive terms in H_ij.
  double shifted_log_mgf(std::size_t j, double t) const {
    return detail::log_mgf(streams_[j], t) - t * cfg_.tau;
  }

  /// log H_ij(t), closed form (geometric sum) or term by term.
  double log_h(std::size_t i, std::size_t j, double t, bool closed = true) const {
    const auto& f = cfg_.files[i];
    const int L = segments_at(f, j);
    if (L <= 0) return -kInf;
    const double ds = startup_at(cfg_, f, j);
    if (!closed) {
      double acc = -kInf;
      for (int l = 1; l <= L; ++l)
        acc = detail::log_add_exp(acc, -t * (ds + (l - 1) * cfg_.tau) + log_download_mgf(j, l, t));
      return acc;
    }
    return -t * (ds - cfg_.tau) + log_waiting_mgf(j, t) +
           detail::log_geometric_sum(shifted_log_mgf(j, t), L);
  }

  /// log sum_j pi_ij (1 + H_ij(t)) over servers with pi_ij > 0.
  double log_bound_argument(std::size_t i, double t) const {
    double acc = -kInf;
    for (std::size_t j = 0; j < cfg_.server_count(); ++j) {
      const double p = pi_(i, j);
      if (p == 0.0) continue;
      acc = detail::log_add_exp(acc, std::log(p) + detail::log_add_exp(0.0, log_h(i, j, t)));
    }
    return acc;
  }

  double mean_bound(std::size_t i, double t) const {
    require_admissible(i, t);
    return log_bound_argument(i, t) / t;
  }

  double tail_bound(std::size_t i, double t, double x) const {
    require_admissible(i, t);
    return std::exp(log_bound_argument(i, t) - t * x);
  }

 private:
  const SystemConfig& cfg_;
  const AccessMatrix& pi_;
  std::vector<ServerParams> streams_;
  std::vector<double> rate_;
  std::vector<double> load_;
};

/// B_j(t): MGF of the service time of a request arriving at server j.
inline double file_service_mgf(const SystemConfig& cfg, const AccessMatrix& pi, std::size_t j,
                               double t) {
  BoundModel model(cfg, pi);
  const auto& sp = model.stream(j);
  if (!(t < sp.alpha))
    throw DomainError(fmt::format("service MGF pole: t={} >= alpha={}", t, sp.alpha));
  return model.service_mgf(j, t);
}

/// Z_ij^{(l)}(t): MGF of the download time of the l-th chunk of file i from server j
/// (l = 0 gives the queueing delay alone).
inline double download_mgf(const SystemConfig& cfg, const AccessMatrix& pi, std::size_t i,
                           std::size_t j, int ell, double t) {
  (void)i;  // the transform depends on the file only through l
  BoundModel model(cfg, pi);
  if (auto c = model.check(j, t);
      c != DomainConstraint::none && c != DomainConstraint::shifted_mgf)
    throw DomainError(fmt::format("download MGF at server {} undefined for t={}: {}", j, t,
                                  constraint_name(c)));
  return std::exp(model.log_download_mgf(j, ell, t));
}

enum class HMode { closed, direct };

inline double h_ij(const SystemConfig& cfg, const AccessMatrix& pi, std::size_t i, std::size_t j,
                   double t, HMode mode = HMode::closed) {
  BoundModel model(cfg, pi);
  if (auto c = model.check(j, t);
      c != DomainConstraint::none && c != DomainConstraint::shifted_mgf)
    throw DomainError(fmt::format("H at server {} undefined for t={}: {}", j, t,
                                  constraint_name(c)));
  return std::exp(model.log_h(i, j, t, mode == HMode::closed));
}

inline double mean_stall_bound(const SystemConfig& cfg, const AccessMatrix& pi, std::size_t i,
                               double t) {
  return BoundModel(cfg, pi).mean_bound(i, t);
}

inline double tail_bound(const SystemConfig& cfg, const AccessMatrix& pi, std::size_t i, double t,
                         double x) {
  return BoundModel(cfg, pi).tail_bound(i, t, x);
}

/// Request-share weights lambda_i / sum lambda.
inline std::vector<double> request_weights(const SystemConfig& cfg) {
  const double total = cfg.total_arrival_rate();
  if (!(total > 0.0)) throw DomainError("total arrival rate is zero; objective weights undefined");
  std::vector<double> w;
  w.reserve(cfg.file_count());
  for (const auto& f : cfg.files) w.push_back(f.lambda / total);
  return w;
}

struct ObjectiveParts {
  double objective = 0.0;
  double mean_term = 0.0;  // sum_i w_i meanBound_i
  double tail_term = 0.0;  // sum_i w_i tailBound_i
};

/// Weighted mean and tail terms; a term whose theta weight is zero is skipped (its
/// auxiliary variables are then not required to be admissible).
inline ObjectiveParts objective_parts(const BoundModel& model, const AuxVars& t) {
  const auto& cfg = model.config();
  if (t.t_mean.size() != cfg.file_count() || t.t_tail.size() != cfg.file_count())
    throw ConfigError("auxiliary variables do not match the file count");
  const auto w = request_weights(cfg);
  ObjectiveParts out;
  for (std::size_t i = 0; i < cfg.file_count(); ++i) {
    if (w[i] == 0.0) continue;
    if (cfg.theta > 0.0) out.mean_term += w[i] * model.mean_bound(i, t.t_mean[i]);
    if (cfg.theta < 1.0)
      out.tail_term += w[i] * model.tail_bound(i, t.t_tail[i], cfg.tail_threshold);
  }
  out.objective = cfg.theta * out.mean_term + (1.0 - cfg.theta) * out.tail_term;
  return out;
}

inline double weighted_objective(const SystemConfig& cfg, const AccessMatrix& pi,
                                 const Placement& S, const AuxVars& t) {
  require_valid(cfg, S, pi);
  return objective_parts(BoundModel(cfg, pi), t).objective;
}

struct TDomain {
  double t_max = 0.0;
  DomainConstraint binding = DomainConstraint::none;
  int server = -1;
};

inline constexpr double kDomainTolerance = 1e-10;

namespace detail {

/// Largest t in (0, hi] with g(t) < 0 for a convex g with g(0) = 0, by bisection.
/// Returns 0 when g is nonnegative just right of the origin.
template <typename G>
double convex_root(G&& g, double hi) {
  double lo = 1e-12;
  if (!(g(lo) < 0.0)) return 0.0;
  if (g(hi) < 0.0) return hi;
  for (int it = 0; it < 200 && hi - lo > kDomainTolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace detail

/// Supremum of the admissible t for file i over the given servers. Each condition is
/// convex in t and vanishes at t = 0, so the admissible set is an interval (0, t_max).
inline TDomain t_domain_max(const BoundModel& model, std::span<const int> servers) {
  const auto& cfg = model.config();
  TDomain out{kInf, DomainConstraint::none, -1};
  for (int sj : servers) {
    const auto j = static_cast<std::size_t>(sj);
    if (!(model.load(j) < 1.0))
      throw InfeasibleError(fmt::format("server {} utilization {} >= 1", j, model.load(j)));
    const auto& sp = model.stream(j);
    const double hi = sp.alpha - 1e-9;
    auto consider = [&](double t, DomainConstraint c) {
      if (t < out.t_max) out = {t, c, sj};
    };
    consider(hi, DomainConstraint::pole);
    const double shifted = detail::convex_root(
        [&](double t) { return sp.alpha * std::expm1((sp.beta - cfg.tau) * t) + t; }, hi);
    if (shifted < hi) consider(shifted, DomainConstraint::shifted_mgf);
    const double waiting =
        detail::convex_root([&](double t) { return model.excess_service(j, t) - t; }, hi);
    if (waiting < hi) consider(waiting, DomainConstraint::waiting_mgf);
  }
  if (!(out.t_max > 0.0))
    throw DomainError(fmt::format("empty admissible t-domain ({} at server {})",
                                  constraint_name(out.binding), out.server));
  return out;
}

/// Admissible interval for file i with every server in scope.
inline TDomain t_domain_max(const SystemConfig& cfg, const AccessMatrix& pi, std::size_t i) {
  (void)i;
  BoundModel model(cfg, pi);
  std::vector<int> all(cfg.server_count());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<int>(j);
  return t_domain_max(model, all);
}

/// Admissible interval for file i restricted to its placement S_i.
inline TDomain t_domain_max(const SystemConfig& cfg, const AccessMatrix& pi, const Placement& S,
                            std::size_t i) {
  return t_domain_max(BoundModel(cfg, pi), S[i]);
}

struct BoundReport {
  std::vector<double> mean_bound;  // per file, s
  std::vector<double> tail_bound;  // per file; an upper bound, may exceed 1
  AuxVars aux;
  std::vector<double> load;         // rho_j
  std::vector<double> arrival_rate; // Lambda_j
  double objective = 0.0;
  double mean_term = 0.0;
  double tail_term = 0.0;
  // Per (file, server) intermediates; zero where pi_ij = 0.
  AccessMatrix h_mean, h_tail, q_mean, q_tail;
};

inline BoundReport evaluate_bounds(const SystemConfig& cfg, const AccessMatrix& pi,
                                   const Placement& S, const AuxVars& t) {
  require_valid(cfg, S, pi);
  BoundModel model(cfg, pi);
  const std::size_t r = cfg.file_count(), m = cfg.server_count();
  BoundReport rep;
  rep.aux = t;
  rep.load = model.loads();
  rep.arrival_rate = lambda_agg(cfg, pi);
  rep.h_mean = rep.h_tail = rep.q_mean = rep.q_tail = AccessMatrix(r, m, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    rep.mean_bound.push_back(model.mean_bound(i, t.t_mean[i]));
    rep.tail_bound.push_back(model.tail_bound(i, t.t_tail[i], cfg.tail_threshold));
    for (std::size_t j = 0; j < m; ++j) {
      if (pi(i, j) == 0.0) continue;
      const int L = segments_at(cfg.files[i], j);
      rep.h_mean(i, j) = std::exp(model.log_h(i, j, t.t_mean[i]));
      rep.h_tail(i, j) = std::exp(model.log_h(i, j, t.t_tail[i]));
      rep.q_mean(i, j) = std::exp(detail::log_geometric_sum(model.shifted_log_mgf(j, t.t_mean[i]), L));
      rep.q_tail(i, j) = std::exp(detail::log_geometric_sum(model.shifted_log_mgf(j, t.t_tail[i]), L));
    }
  }
  if (cfg.total_arrival_rate() > 0.0) {
    const auto parts = objective_parts(model, t);
    rep.objective = parts.objective;
    rep.mean_term = parts.mean_term;
    rep.tail_term = parts.tail_term;
  }
  return rep;
}

/// Edge caching: files cached in full at every server stream stop loading the cluster
/// (lambda set to 0); partial prefixes are honoured per (file, server) by segments_at
/// and startup_at.
inline SystemConfig apply_caching(const SystemConfig& cfg) {
  require_valid(cfg);
  SystemConfig out = cfg;
  for (auto& f : out.files) {
    if (f.cached_prefix.empty()) continue;
    const bool full = std::all_of(f.cached_prefix.begin(), f.cached_prefix.end(),
                                  [&](int c) { return c == f.segments; });
    if (full) f.lambda = 0.0;
  }
  return out;
}

struct ExpandedSystem {
  SystemConfig config;
  AccessMatrix access;
  Placement placement;
};

/// Rewrites a cluster with y streams per server as m*y single-stream servers: stream
/// (j, v) becomes server j*y + v with rate alpha_j/y, shift beta_j*y and access pi_ij/y.
inline ExpandedSystem apply_parallel_streams(const SystemConfig& cfg, const AccessMatrix& pi,
                                             const Placement& S) {
  const int y = cfg.streams_per_server;
  if (y < 1) throw ConfigError("streams per server must be >= 1");
  if (y == 1) return {cfg, pi, S};
  const std::size_t m = cfg.server_count(), r = cfg.file_count();
  ExpandedSystem out;
  out.config = cfg;
  out.config.streams_per_server = 1;
  out.config.servers.clear();
  for (std::size_t j = 0; j < m; ++j)
    for (int v = 0; v < y; ++v) out.config.servers.push_back(stream_params(cfg, j));
  for (auto& f : out.config.files) {
    f.n *= y;
    if (!f.cached_prefix.empty()) {
      std::vector<int> expanded;
      for (int c : f.cached_prefix) expanded.insert(expanded.end(), y, c);
      f.cached_prefix = std::move(expanded);
    }
  }
  out.access = AccessMatrix(r, m * y, 0.0);
  out.placement.sets.resize(r);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < m; ++j)
      for (int v = 0; v < y; ++v) out.access(i, j * y + v) = pi(i, j) / y;
    for (int j : S[i])
      for (int v = 0; v < y; ++v) out.placement.sets[i].push_back(j * y + v);
  }
  return out;
}

}  // namespace ecstream
