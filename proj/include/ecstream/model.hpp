#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ecstream/error.hpp"

namespace ecstream {

/// Shifted-exponential chunk service time: density alpha*exp(-alpha*(x-beta)) for x >= beta.
struct ServerParams {
  double alpha = 1.0;  // rate, 1/s
  double beta = 0.0;   // shift, s

  double mean_service() const { return beta + 1.0 / alpha; }
};

struct VideoFile {
  int id = 0;
  int segments = 1;  // L_i
  int k = 1;
  int n = 1;
  double lambda = 0.0;  // Poisson request rate, 1/s
  /// Segments of this file already held at the edge for the chunk stream of each
  /// server. Empty means nothing cached; otherwise one entry per server.
  std::vector<int> cached_prefix;

  int cached_at(std::size_t server) const {
    return cached_prefix.empty() ? 0 : cached_prefix[server];
  }
};

/// How the queueing delay ahead of a request enters the download-time transform.
enum class WaitingModel {
  /// M/G/1 waiting time (Pollaczek-Khinchine): E[e^{tW}] = (1-rho) t / (t - Lambda (B(t)-1)).
  waiting,
  /// The same transform multiplied by B(t), i.e. waiting time plus one extra
  /// independent request service. Always at least as large; kept for comparison.
  sojourn,
};

struct SystemConfig {
  std::vector<ServerParams> servers;
  std::vector<VideoFile> files;
  double tau = 4.0;             // segment duration, s
  double startup_delay = 0.0;   // d_s, s
  double tail_threshold = 0.0;  // x, s
  double theta = 0.5;           // weight of the mean-stall term
  int streams_per_server = 1;   // y
  WaitingModel waiting = WaitingModel::waiting;

  std::size_t server_count() const { return servers.size(); }
  std::size_t file_count() const { return files.size(); }

  double total_arrival_rate() const {
    double sum = 0.0;
    for (const auto& f : files) sum += f.lambda;
    return sum;
  }
};

/// Segments of file i streamed from server j once the cached prefix is skipped.
inline int segments_at(const VideoFile& file, std::size_t server) {
  return file.segments - file.cached_at(server);
}

/// Playback deadline offset for the first chunk fetched from server j: a cached
/// prefix of c segments buys c*tau of extra slack.
inline double startup_at(const SystemConfig& cfg, const VideoFile& file, std::size_t server) {
  return cfg.startup_delay + cfg.tau * file.cached_at(server);
}

/// Dense r x m matrix of scheduling probabilities pi_ij.
class AccessMatrix {
 public:
  AccessMatrix() = default;
  AccessMatrix(std::size_t files, std::size_t servers, double value = 0.0)
      : rows_(files), cols_(servers), data_(files * servers, value) {}

  std::size_t files() const { return rows_; }
  std::size_t servers() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool operator==(const AccessMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Per file, the sorted set S_i of servers holding its n_i coded chunk streams.
struct Placement {
  std::vector<std::vector<int>> sets;

  std::size_t files() const { return sets.size(); }
  const std::vector<int>& operator[](std::size_t i) const { return sets[i]; }
  std::vector<int>& operator[](std::size_t i) { return sets[i]; }

  bool contains(std::size_t i, int server) const {
    return std::binary_search(sets[i].begin(), sets[i].end(), server);
  }

  bool operator==(const Placement&) const = default;
};

/// Auxiliary Chernoff parameters: t_mean for the mean-stall bound, t_tail for the tail bound.
struct AuxVars {
  std::vector<double> t_mean;
  std::vector<double> t_tail;

  std::size_t files() const { return t_mean.size(); }
  bool operator==(const AuxVars&) const = default;
};

struct Violation {
  int file = -1;    // -1 when not file specific
  int server = -1;  // -1 when not server specific
  std::string constraint;
  std::string detail;
};

inline constexpr double kRowSumTolerance = 1e-9;

/// Invariants of the cluster description alone.
inline std::vector<Violation> validate_system(const SystemConfig& cfg) {
  std::vector<Violation> out;
  const auto m = static_cast<int>(cfg.server_count());
  if (m == 0) out.push_back({-1, -1, "server count", "no servers"});
  for (int j = 0; j < m; ++j) {
    const auto& s = cfg.servers[j];
    if (!(s.alpha > 0.0) || !std::isfinite(s.alpha))
      out.push_back({-1, j, "service rate", fmt::format("alpha={} must be > 0", s.alpha)});
    if (!(s.beta >= 0.0) || !std::isfinite(s.beta))
      out.push_back({-1, j, "service shift", fmt::format("beta={} must be >= 0", s.beta)});
  }
  if (!(cfg.tau > 0.0)) out.push_back({-1, -1, "tau", "segment duration must be > 0"});
  if (!(cfg.startup_delay >= 0.0)) out.push_back({-1, -1, "ds", "startup delay must be >= 0"});
  if (!(cfg.tail_threshold >= 0.0)) out.push_back({-1, -1, "x", "tail threshold must be >= 0"});
  if (!(cfg.theta >= 0.0 && cfg.theta <= 1.0))
    out.push_back({-1, -1, "theta", "tradeoff weight must lie in [0,1]"});
  if (cfg.streams_per_server < 1) out.push_back({-1, -1, "y", "streams per server must be >= 1"});
  for (std::size_t i = 0; i < cfg.file_count(); ++i) {
    const auto& f = cfg.files[i];
    const int fi = static_cast<int>(i);
    if (f.segments < 1) out.push_back({fi, -1, "segments", "L must be >= 1"});
    if (f.k < 1 || f.k > f.n || f.n > m)
      out.push_back({fi, -1, "code", fmt::format("need 1 <= k={} <= n={} <= m={}", f.k, f.n, m)});
    if (!(f.lambda >= 0.0) || !std::isfinite(f.lambda))
      out.push_back({fi, -1, "arrival rate", "lambda must be >= 0"});
    if (!f.cached_prefix.empty()) {
      if (f.cached_prefix.size() != static_cast<std::size_t>(m)) {
        out.push_back({fi, -1, "cached prefix", "need one cached prefix per server"});
      } else {
        for (int j = 0; j < m; ++j) {
          const int c = f.cached_prefix[j];
          if (c < 0 || c > f.segments)
            out.push_back({fi, j, "cached prefix",
                           fmt::format("cached prefix {} outside [0, L={}]", c, f.segments)});
        }
      }
    }
  }
  return out;
}

/// Every Placement and AccessMatrix invariant, plus the cluster invariants.
inline std::vector<Violation> validate_config(const SystemConfig& cfg, const Placement& S,
                                              const AccessMatrix& pi) {
  auto out = validate_system(cfg);
  const std::size_t r = cfg.file_count();
  const std::size_t m = cfg.server_count();
  if (S.files() != r) {
    out.push_back({-1, -1, "placement size", fmt::format("placement has {} files, config {}", S.files(), r)});
    return out;
  }
  if (pi.files() != r || pi.servers() != m) {
    out.push_back({-1, -1, "access shape",
                   fmt::format("access matrix is {}x{}, expected {}x{}", pi.files(), pi.servers(), r, m)});
    return out;
  }
  for (std::size_t i = 0; i < r; ++i) {
    const int fi = static_cast<int>(i);
    const auto& set = S[i];
    if (static_cast<int>(set.size()) != cfg.files[i].n)
      out.push_back({fi, -1, "placement size",
                     fmt::format("|S|={} but n={}", set.size(), cfg.files[i].n)});
    for (std::size_t a = 0; a < set.size(); ++a) {
      if (set[a] < 0 || set[a] >= static_cast<int>(m))
        out.push_back({fi, set[a], "placement index", "server index out of range"});
      if (a > 0 && set[a] <= set[a - 1])
        out.push_back({fi, set[a], "placement order", "placement must be sorted and distinct"});
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double p = pi(i, j);
      const int sj = static_cast<int>(j);
      if (!(p >= 0.0 && p <= 1.0))
        out.push_back({fi, sj, "probability range", fmt::format("pi={} outside [0,1]", p)});
      if (p != 0.0 && !S.contains(i, sj))
        out.push_back({fi, sj, "support outside placement",
                       fmt::format("pi={} on a server not holding the file", p)});
      sum += p;
    }
    if (std::abs(sum - cfg.files[i].k) > kRowSumTolerance)
      out.push_back({fi, -1, "row sum", fmt::format("sum pi={} but k={}", sum, cfg.files[i].k)});
  }
  return out;
}

inline std::string describe(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.constraint;
    if (v.file >= 0) out += fmt::format(" file={}", v.file);
    if (v.server >= 0) out += fmt::format(" server={}", v.server);
    if (!v.detail.empty()) out += " (" + v.detail + ")";
  }
  return out;
}

inline void require_valid(const SystemConfig& cfg) {
  if (auto v = validate_system(cfg); !v.empty()) throw ConfigError(describe(v));
}

inline void require_valid(const SystemConfig& cfg, const Placement& S, const AccessMatrix& pi) {
  if (auto v = validate_config(cfg, S, pi); !v.empty()) throw ConfigError(describe(v));
}

/// Aggregate request rate Lambda_j = sum_i lambda_i pi_ij at each server.
inline std::vector<double> lambda_agg(const SystemConfig& cfg, const AccessMatrix& pi) {
  std::vector<double> out(cfg.server_count(), 0.0);
  for (std::size_t i = 0; i < cfg.file_count(); ++i) {
    const double lam = cfg.files[i].lambda;
    if (lam == 0.0) continue;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += lam * pi(i, j);
  }
  return out;
}

/// Offered load rho_j = sum_i pi_ij lambda_i L_ij (beta_j + 1/alpha_j), with L_ij the
/// segments actually streamed from j. Stability needs rho_j < 1.
inline std::vector<double> utilization(const SystemConfig& cfg, const AccessMatrix& pi) {
  std::vector<double> out(cfg.server_count(), 0.0);
  for (std::size_t i = 0; i < cfg.file_count(); ++i) {
    const auto& f = cfg.files[i];
    if (f.lambda == 0.0) continue;
    for (std::size_t j = 0; j < out.size(); ++j) {
      const double p = pi(i, j);
      if (p == 0.0) continue;
      out[j] += p * f.lambda * segments_at(f, j) * cfg.servers[j].mean_service();
    }
  }
  return out;
}

/// Index of the first server with rho_j >= 1, or -1.
inline int first_unstable_server(std::span<const double> rho) {
  for (std::size_t j = 0; j < rho.size(); ++j)
    if (!(rho[j] < 1.0)) return static_cast<int>(j);
  return -1;
}

/// Euclidean projection of y onto {x : 0 <= x <= 1, sum x = total}. The shift mu in
/// x = clamp(y - mu, 0, 1) is bracketed by bisection, then solved exactly on the
/// resulting free set.
inline std::vector<double> project_capped_simplex(std::span<const double> y, double total) {
  const std::size_t n = y.size();
  if (total < 0.0 || total > static_cast<double>(n) + kRowSumTolerance)
    throw InfeasibleError(fmt::format("cannot place mass {} on {} capped coordinates", total, n));
  std::vector<double> x(n);
  if (n == 0) return x;
  auto mass = [&](double mu) {
    double s = 0.0;
    for (double v : y) s += std::clamp(v - mu, 0.0, 1.0);
    return s;
  };
  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  double lo = *lo_it - 1.0;  // mass(lo) = n
  double hi = *hi_it;        // mass(hi) = 0
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > total ? lo : hi) = mid;
  }
  double mu = 0.5 * (lo + hi);
  // Exact solve on the free set implied by the bracket.
  double fixed = 0.0, free_sum = 0.0;
  std::size_t free_count = 0;
  for (double v : y) {
    const double z = v - mu;
    if (z >= 1.0) {
      fixed += 1.0;
    } else if (z > 0.0) {
      free_sum += v;
      ++free_count;
    }
  }
  if (free_count > 0) {
    const double exact = (free_sum - (total - fixed)) / static_cast<double>(free_count);
    // Accept only if it leaves the free set unchanged.
    bool consistent = true;
    for (double v : y) {
      const double z_old = v - mu, z_new = v - exact;
      const bool was_free = z_old > 0.0 && z_old < 1.0;
      if (was_free && (z_new < 0.0 || z_new > 1.0)) consistent = false;
    }
    if (consistent) mu = exact;
  }
  for (std::size_t a = 0; a < n; ++a) x[a] = std::clamp(y[a] - mu, 0.0, 1.0);
  return x;
}

/// Closest feasible access matrix: per row, project onto the capped simplex with
/// total k_i restricted to the placement; zero elsewhere.
inline AccessMatrix project_access(const AccessMatrix& pi_raw, const Placement& S,
                                   std::span<const int> k) {
  if (S.files() != pi_raw.files() || k.size() != pi_raw.files())
    throw ConfigError("project_access: shape mismatch between access, placement and k");
  AccessMatrix out(pi_raw.files(), pi_raw.servers(), 0.0);
  std::vector<double> y;
  for (std::size_t i = 0; i < pi_raw.files(); ++i) {
    const auto& set = S[i];
    if (k[i] > static_cast<int>(set.size()))
      throw InfeasibleError(fmt::format("file {}: k={} exceeds |S|={}", i, k[i], set.size()));
    y.clear();
    for (int j : set) y.push_back(pi_raw(i, j));
    const auto x = project_capped_simplex(y, k[i]);
    for (std::size_t a = 0; a < set.size(); ++a) out(i, set[a]) = x[a];
  }
  return out;
}

inline std::vector<int> code_k(const SystemConfig& cfg) {
  std::vector<int> k;
  k.reserve(cfg.file_count());
  for (const auto& f : cfg.files) k.push_back(f.k);
  return k;
}

/// pi_ij = k_i / n_i on every placed server.
inline AccessMatrix equal_access(const SystemConfig& cfg, const Placement& S) {
  AccessMatrix pi(cfg.file_count(), cfg.server_count(), 0.0);
  for (std::size_t i = 0; i < cfg.file_count(); ++i) {
    const double share = static_cast<double>(cfg.files[i].k) / static_cast<double>(S[i].size());
    for (int j : S[i]) pi(i, j) = share;
  }
  return pi;
}

/// Smallest sorted placement consistent with the support of pi (used when a caller
/// only has an access matrix): servers with pi_ij > 0, padded with the lowest unused
/// indices up to n_i.
inline Placement support_placement(const SystemConfig& cfg, const AccessMatrix& pi) {
  Placement S;
  S.sets.resize(cfg.file_count());
  for (std::size_t i = 0; i < cfg.file_count(); ++i) {
    auto& set = S.sets[i];
    for (std::size_t j = 0; j < pi.servers(); ++j)
      if (pi(i, j) > 0.0) set.push_back(static_cast<int>(j));
    for (std::size_t j = 0; j < pi.servers() && static_cast<int>(set.size()) < cfg.files[i].n; ++j)
      if (pi(i, j) == 0.0) set.push_back(static_cast<int>(j));
    std::sort(set.begin(), set.end());
  }
  return S;
}

}  // namespace ecstream
