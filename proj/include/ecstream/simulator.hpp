#pragma once

// Discrete-event model of the streaming cluster. Requests arrive as superposed
// Poisson streams, pick k_i servers by probabilistic scheduling and enqueue all of
// their chunks at once in each chosen server's FIFO queue. The client starts
// playback after the startup delay and plays segment q once every chosen server has
// delivered its chunk q and segment q-1 has finished.
//
// Because every request's chunks enter a queue contiguously, a queue reduces to a
// Lindley recursion on its next-free time; no event heap is needed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ecstream/error.hpp"
#include "ecstream/model.hpp"
#include "ecstream/random.hpp"

namespace ecstream {

/// Draws k servers with P(j selected) = row[j] exactly: systematic sampling over the
/// cumulated row, visited in a fresh random order per draw, with one uniform offset.
inline void sample_server_set(std::span<const double> row, int k, Rng& rng, std::vector<int>& out,
                              std::vector<int>& order) {
  double sum = 0.0;
  order.clear();
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double p = row[j];
    if (!(p >= 0.0 && p <= 1.0 + kRowSumTolerance))
      throw InfeasibleError(fmt::format("scheduling probability {} outside [0,1] at server {}", p, j));
    if (p > 0.0) order.push_back(static_cast<int>(j));
    sum += p;
  }
  if (std::abs(sum - k) > 1e-6)
    throw InfeasibleError(fmt::format("scheduling row sums to {}, expected {}", sum, k));
  for (std::size_t a = order.size(); a > 1; --a) {
    const auto b = static_cast<std::size_t>(uniform01(rng) * a);
    std::swap(order[a - 1], order[b]);
  }
  const double scale = k / sum;
  double next = uniform01(rng);
  double cum = 0.0;
  out.clear();
  for (int j : order) {
    cum += row[j] * scale;
    if (next < cum) {
      out.push_back(j);
      next += 1.0;
    }
    if (static_cast<int>(out.size()) == k) break;
  }
  // Rounding can leave the last threshold a hair above the final cumulative sum.
  for (auto it = order.rbegin(); static_cast<int>(out.size()) < k && it != order.rend(); ++it)
    if (std::find(out.begin(), out.end(), *it) == out.end()) out.push_back(*it);
}

inline std::vector<int> sample_server_set(std::span<const double> row, int k, Rng& rng) {
  std::vector<int> out, order;
  sample_server_set(row, k, rng, out, order);
  std::sort(out.begin(), out.end());
  return out;
}

struct SimSettings {
  int requests = 10000;          // expected post-warmup requests of the least requested file
  double horizon_seconds = 0.0;  // overrides `requests` when > 0
  double warmup = 0.2;           // fraction of the horizon discarded
  int replications = 1;
  std::uint64_t seed = 1;
  int batches = 20;
  std::vector<double> thresholds;  // tail thresholds; empty means the config's x
  bool keep_samples = false;
  int probe_server = -1;  // record D^{(probe_ell)} at this server when >= 0
  int probe_ell = 1;
};

struct Estimate {
  std::size_t count = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct FileStats {
  Estimate stall;
  std::vector<Estimate> tail;  // P(stall >= x) per threshold
};

struct StallSample {
  int file;
  double arrival;
  double stall;
};

struct SimReport {
  std::vector<double> thresholds;
  std::vector<FileStats> files;
  std::vector<double> rho_hat;     // busy fraction per server (averaged over its streams)
  std::vector<double> lambda_hat;  // request rate per server
  std::vector<double> rho_model;
  double horizon = 0.0;
  double window = 0.0;  // post-warmup time per replication
  std::size_t requests = 0;
  std::size_t invariant_violations = 0;
  bool unstable = false;
  std::vector<StallSample> samples;
  std::vector<double> probe;
};

/// Mean and batch-means standard error of a series, in arrival order.
inline Estimate batch_estimate(std::span<const double> x, int batches = 20) {
  if (x.size() < 2)
    throw Error(ErrorCategory::numeric, fmt::format("need at least 2 samples, have {}", x.size()));
  Estimate e;
  e.count = x.size();
  e.mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  const std::size_t b = std::min<std::size_t>(std::max(batches, 10), x.size());
  std::vector<double> means(b, 0.0);
  for (std::size_t g = 0; g < b; ++g) {
    const std::size_t lo = g * x.size() / b, hi = (g + 1) * x.size() / b;
    means[g] = std::accumulate(x.begin() + lo, x.begin() + hi, 0.0) / (hi - lo);
  }
  const double mbar = std::accumulate(means.begin(), means.end(), 0.0) / b;
  double ss = 0.0;
  for (double m : means) ss += (m - mbar) * (m - mbar);
  e.stderr_ = std::sqrt(ss / (b - 1) / b);
  return e;
}

struct MetricEstimate {
  Estimate mean;
  std::vector<Estimate> tail;
};

inline MetricEstimate estimate_metrics(std::span<const double> samples,
                                       std::span<const double> thresholds, int batches = 20) {
  MetricEstimate out;
  out.mean = batch_estimate(samples, batches);
  std::vector<double> ind(samples.size());
  for (double x : thresholds) {
    for (std::size_t a = 0; a < samples.size(); ++a) ind[a] = samples[a] >= x ? 1.0 : 0.0;
    out.tail.push_back(batch_estimate(ind, batches));
  }
  return out;
}

namespace detail {

struct ReplicationResult {
  std::vector<std::vector<double>> stalls;  // per file, arrival order
  std::vector<double> busy;                 // per server, summed over streams
  std::vector<double> arrivals;             // per server
  std::vector<StallSample> samples;
  std::vector<double> probe;
  std::size_t violations = 0;
  std::size_t requests = 0;
};

inline ReplicationResult simulate_once(const SystemConfig& cfg, const AccessMatrix& pi,
                                       const SimSettings& sim, double horizon, Rng rng) {
  const std::size_t r = cfg.file_count(), m = cfg.server_count();
  const int y = cfg.streams_per_server;
  const double window_start = sim.warmup * horizon;
  ReplicationResult out;
  out.stalls.resize(r);
  out.busy.assign(m, 0.0);
  out.arrivals.assign(m, 0.0);

  std::vector<double> cum_rate(r);
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) cum_rate[i] = (total += cfg.files[i].lambda);
  if (!(total > 0.0)) return out;

  std::vector<double> alpha(m), beta(m);
  for (std::size_t j = 0; j < m; ++j) {
    alpha[j] = cfg.servers[j].alpha / y;
    beta[j] = cfg.servers[j].beta * y;
  }
  std::vector<double> free_at(m * y, 0.0);
  std::vector<int> chosen, order;
  std::vector<double> ready;  // per segment, time the last chosen server delivers it

  auto overlap = [&](double a, double b) {
    return std::max(0.0, std::min(b, horizon) - std::max(a, window_start));
  };

  double now = 0.0;
  while (true) {
    now += -std::log1p(-uniform01(rng)) / total;
    if (now >= horizon) break;
    const double pick = uniform01(rng) * total;
    const auto i = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(std::upper_bound(cum_rate.begin(), cum_rate.end(), pick) - cum_rate.begin(),
                                 static_cast<std::ptrdiff_t>(r - 1)));
    const auto& f = cfg.files[i];
    if (f.lambda == 0.0) continue;
    const bool counted = now >= window_start;
    sample_server_set(pi.row(i), f.k, rng, chosen, order);

    ready.assign(f.segments, 0.0);
    for (int j : chosen) {
      if (counted) out.arrivals[j] += 1.0;
      const int cached = f.cached_at(j);
      const int remote = f.segments - cached;
      if (remote <= 0) continue;
      const int stream = y == 1 ? 0 : static_cast<int>(uniform01(rng) * y);
      double& free = free_at[j * y + stream];
      const double start = std::max(now, free);
      double done = start;
      for (int l = 1; l <= remote; ++l) {
        const double service = beta[j] - std::log1p(-uniform01(rng)) / alpha[j];
        const double prev = done;
        done += service;
        if (!(done >= prev + beta[j])) ++out.violations;
        const int q = cached + l - 1;
        ready[q] = std::max(ready[q], done - now);
        if (counted && j == sim.probe_server && l == sim.probe_ell) out.probe.push_back(done - now);
      }
      if (counted && j == sim.probe_server && sim.probe_ell == 0) out.probe.push_back(start - now);
      out.busy[j] += overlap(start, done);
      free = done;
    }

    // Playback: T1 = max(ds, D1), Tq = max(T(q-1) + tau, Dq).
    double play = std::max(cfg.startup_delay, ready[0]);
    double stall = play - cfg.startup_delay;
    for (int q = 1; q < f.segments; ++q) {
      const double due = play + cfg.tau;
      const double next = std::max(due, ready[q]);
      stall += next - due;
      if (!(next >= due)) ++out.violations;
      play = next;
    }
    if (!(stall >= 0.0)) ++out.violations;
    if (!counted) continue;
    ++out.requests;
    out.stalls[i].push_back(stall);
    if (sim.keep_samples) out.samples.push_back({static_cast<int>(i), now, stall});
  }
  return out;
}

}  // namespace detail

inline double simulation_horizon(const SystemConfig& cfg, const SimSettings& sim) {
  if (sim.horizon_seconds > 0.0) return sim.horizon_seconds;
  double min_rate = 0.0;
  for (const auto& f : cfg.files)
    if (f.lambda > 0.0 && (min_rate == 0.0 || f.lambda < min_rate)) min_rate = f.lambda;
  if (min_rate == 0.0) return 0.0;
  return sim.requests / min_rate / (1.0 - sim.warmup);
}

inline SimReport run_simulation(const SystemConfig& cfg, const AccessMatrix& pi, const Placement& S,
                                const SimSettings& sim) {
  require_valid(cfg, S, pi);
  if (!(sim.warmup >= 0.0 && sim.warmup < 1.0)) throw ConfigError("warmup must lie in [0,1)");
  if (sim.replications < 1) throw ConfigError("replications must be >= 1");

  SimReport rep;
  rep.thresholds = sim.thresholds.empty() ? std::vector<double>{cfg.tail_threshold} : sim.thresholds;
  rep.horizon = simulation_horizon(cfg, sim);
  rep.window = rep.horizon * (1.0 - sim.warmup);
  rep.rho_model = utilization(cfg, pi);
  rep.unstable = first_unstable_server(rep.rho_model) >= 0;

  std::vector<std::future<detail::ReplicationResult>> jobs;
  for (int k = 0; k < sim.replications; ++k)
    jobs.push_back(std::async(std::launch::async, [&, k] {
      return detail::simulate_once(cfg, pi, sim, rep.horizon,
                                   make_rng(sim.seed, static_cast<std::uint64_t>(k) + 1));
    }));

  const std::size_t r = cfg.file_count(), m = cfg.server_count();
  std::vector<std::vector<double>> batch_means(r);
  std::vector<std::vector<std::vector<double>>> tail_batches(r, std::vector<std::vector<double>>(rep.thresholds.size()));
  std::vector<double> sums(r, 0.0);
  std::vector<std::vector<double>> tail_sums(r, std::vector<double>(rep.thresholds.size(), 0.0));
  std::vector<std::size_t> counts(r, 0);
  rep.rho_hat.assign(m, 0.0);
  rep.lambda_hat.assign(m, 0.0);

  // Merge in replication order so the result does not depend on scheduling.
  for (auto& job : jobs) {
    auto res = job.get();
    rep.requests += res.requests;
    rep.invariant_violations += res.violations;
    for (std::size_t j = 0; j < m; ++j) {
      rep.rho_hat[j] += res.busy[j];
      rep.lambda_hat[j] += res.arrivals[j];
    }
    for (std::size_t i = 0; i < r; ++i) {
      const auto& x = res.stalls[i];
      counts[i] += x.size();
      for (double v : x) {
        sums[i] += v;
        for (std::size_t h = 0; h < rep.thresholds.size(); ++h)
          tail_sums[i][h] += v >= rep.thresholds[h] ? 1.0 : 0.0;
      }
      if (x.size() < 2) continue;
      // Batch means of every replication are pooled for the standard error.
      const std::size_t b = std::min<std::size_t>(std::max(sim.batches, 10), x.size());
      for (std::size_t g = 0; g < b; ++g) {
        const std::size_t lo = g * x.size() / b, hi = (g + 1) * x.size() / b;
        double s = 0.0;
        std::vector<double> ts(rep.thresholds.size(), 0.0);
        for (std::size_t a = lo; a < hi; ++a) {
          s += x[a];
          for (std::size_t h = 0; h < ts.size(); ++h) ts[h] += x[a] >= rep.thresholds[h] ? 1.0 : 0.0;
        }
        batch_means[i].push_back(s / (hi - lo));
        for (std::size_t h = 0; h < ts.size(); ++h) tail_batches[i][h].push_back(ts[h] / (hi - lo));
      }
    }
    if (sim.keep_samples) rep.samples.insert(rep.samples.end(), res.samples.begin(), res.samples.end());
    rep.probe.insert(rep.probe.end(), res.probe.begin(), res.probe.end());
  }

  const double total_window = rep.window * sim.replications;
  for (std::size_t j = 0; j < m; ++j) {
    rep.rho_hat[j] = total_window > 0.0 ? rep.rho_hat[j] / (total_window * cfg.streams_per_server) : 0.0;
    rep.lambda_hat[j] = total_window > 0.0 ? rep.lambda_hat[j] / total_window : 0.0;
  }

  auto spread = [](const std::vector<double>& means) {
    const std::size_t b = means.size();
    if (b < 2) return 0.0;
    const double mbar = std::accumulate(means.begin(), means.end(), 0.0) / b;
    double ss = 0.0;
    for (double v : means) ss += (v - mbar) * (v - mbar);
    return std::sqrt(ss / (b - 1) / b);
  };
  rep.files.resize(r);
  for (std::size_t i = 0; i < r; ++i) {
    auto& fs = rep.files[i];
    fs.stall.count = counts[i];
    fs.stall.mean = counts[i] ? sums[i] / counts[i] : std::nan("");
    fs.stall.stderr_ = batch_means[i].empty() ? std::nan("") : spread(batch_means[i]);
    for (std::size_t h = 0; h < rep.thresholds.size(); ++h) {
      Estimate e;
      e.count = counts[i];
      e.mean = counts[i] ? tail_sums[i][h] / counts[i] : std::nan("");
      e.stderr_ = tail_batches[i][h].empty() ? std::nan("") : spread(tail_batches[i][h]);
      fs.tail.push_back(e);
    }
  }
  return rep;
}

}  // namespace ecstream
