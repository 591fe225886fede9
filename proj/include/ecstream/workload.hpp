#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <fmt/format.h>

#include "ecstream/error.hpp"
#include "ecstream/model.hpp"
#include "ecstream/random.hpp"

namespace ecstream {

/// Chunk service parameters of the twelve-node reference cluster (rates in 1/s,
/// shift 10 ms throughout).
inline std::vector<ServerParams> reference_servers() {
  static constexpr double alphas[] = {18.2298, 24.0552, 11.8750, 17.0526, 26.1912, 23.9059,
                                      27.006,  21.3812, 9.9106,  24.9589, 26.5288, 21.8067};
  std::vector<ServerParams> out;
  for (double a : alphas) out.push_back({a, 0.01});
  return out;
}

struct SizeLaw {
  enum class Kind { pareto, fixed } kind = Kind::pareto;
  double shape = 2.0;    // Pareto tail index
  double scale = 300.0;  // Pareto minimum, s
  double seconds = 600.0;

  static SizeLaw pareto(double shape, double scale) { return {Kind::pareto, shape, scale, 0.0}; }
  static SizeLaw fixed(double seconds) { return {Kind::fixed, 0.0, 0.0, seconds}; }
};

/// Files whose index falls below until_fraction * r (and above the previous range) get `rate`.
struct RateRange {
  double until_fraction = 1.0;
  double rate = 0.0;
};

struct CatalogSpec {
  int files = 1000;
  SizeLaw size;
  std::vector<RateRange> rates{{0.5, 0.002}, {1.0, 0.003}};
  double rate_scale = 1.0;
  int n = 10;
  int k = 4;
  double tau = 4.0;
};

inline void validate(const CatalogSpec& spec) {
  if (spec.files < 0) throw ConfigError("catalog: negative file count");
  if (spec.size.kind == SizeLaw::Kind::pareto) {
    if (!(spec.size.shape > 1.0)) throw ConfigError("catalog: Pareto shape must exceed 1");
    if (!(spec.size.scale > 0.0)) throw ConfigError("catalog: Pareto scale must be > 0");
  } else if (!(spec.size.seconds > 0.0)) {
    throw ConfigError("catalog: fixed size must be > 0");
  }
  if (!(spec.tau > 0.0)) throw ConfigError("catalog: tau must be > 0");
  if (spec.k < 1 || spec.k > spec.n) throw ConfigError("catalog: need 1 <= k <= n");
  if (spec.rates.empty() || spec.rates.back().until_fraction < 1.0)
    throw ConfigError("catalog: rate ranges must cover every file");
}

inline double draw_size(const SizeLaw& law, Rng& rng) {
  if (law.kind == SizeLaw::Kind::fixed) return law.seconds;
  return law.scale * std::pow(1.0 - uniform01(rng), -1.0 / law.shape);
}

/// Segment count of a video of `seconds`: its length rounded up to whole segments.
inline int segments_for(double seconds, double tau) {
  // Guard against sizes like 600.0000000001 produced by rounding upstream.
  return std::max(1, static_cast<int>(std::ceil(seconds / tau - 1e-9)));
}

inline double rate_for(const CatalogSpec& spec, int index) {
  const double pos = (index + 0.5) / spec.files;
  for (const auto& r : spec.rates)
    if (pos < r.until_fraction) return r.rate * spec.rate_scale;
  return spec.rates.back().rate * spec.rate_scale;
}

inline std::vector<VideoFile> generate_catalog(const CatalogSpec& spec, std::uint64_t seed) {
  validate(spec);
  auto rng = make_rng(seed, 0x6361746cULL);
  std::vector<VideoFile> out;
  out.reserve(spec.files);
  for (int i = 0; i < spec.files; ++i) {
    VideoFile f;
    f.id = i;
    f.segments = segments_for(draw_size(spec.size, rng), spec.tau);
    f.k = spec.k;
    f.n = spec.n;
    f.lambda = rate_for(spec, i);
    out.push_back(std::move(f));
  }
  return out;
}

/// The reference evaluation setting scaled down: the twelve reference servers (cycled
/// when more are requested), Pareto(2, 300 s) video lengths, 4 s segments.
struct DeskSpec {
  int files = 50;
  int servers = 12;
  int n = 10;
  int k = 4;
  double rate_scale = 1.0;
  double startup_delay = 20.0;
  double tail_threshold = 10.0;
  double theta = 0.5;
  int streams = 1;
};

inline SystemConfig desk_config(const DeskSpec& d, std::uint64_t seed) {
  SystemConfig cfg;
  const auto table = reference_servers();
  for (int j = 0; j < d.servers; ++j) cfg.servers.push_back(table[j % table.size()]);
  CatalogSpec spec;
  spec.files = d.files;
  spec.n = d.n;
  spec.k = d.k;
  spec.rate_scale = d.rate_scale;
  cfg.files = generate_catalog(spec, seed);
  cfg.tau = spec.tau;
  cfg.startup_delay = d.startup_delay;
  cfg.tail_threshold = d.tail_threshold;
  cfg.theta = d.theta;
  cfg.streams_per_server = d.streams;
  require_valid(cfg);
  return cfg;
}

/// Uniform n-of-m placement for every file (partial Fisher-Yates).
inline Placement random_placement(const SystemConfig& cfg, Rng& rng) {
  const int m = static_cast<int>(cfg.server_count());
  Placement S;
  S.sets.resize(cfg.file_count());
  std::vector<int> idx(m);
  for (std::size_t i = 0; i < cfg.file_count(); ++i) {
    const int n = cfg.files[i].n;
    if (n > m) throw ConfigError(fmt::format("file {}: n={} exceeds m={}", i, n, m));
    for (int j = 0; j < m; ++j) idx[j] = j;
    for (int a = 0; a < n; ++a) {
      const int b = a + static_cast<int>(uniform01(rng) * (m - a));
      std::swap(idx[a], idx[b]);
    }
    S.sets[i].assign(idx.begin(), idx.begin() + n);
    std::sort(S.sets[i].begin(), S.sets[i].end());
  }
  return S;
}

inline Placement random_placement(const SystemConfig& cfg, std::uint64_t seed) {
  auto rng = make_rng(seed, 0x706c6163ULL);
  return random_placement(cfg, rng);
}

/// Small random cluster with short videos; rates are scaled so that the busiest
/// server stays at `max_load` under equal access on a random placement.
struct SmallSpec {
  int servers = 4;
  int files = 5;
  int n = 3;
  int k = 2;
  int min_segments = 2;
  int max_segments = 10;
  double max_load = 0.6;
  double startup_delay = 2.0;
  double tau = 1.0;
};

struct Instance {
  SystemConfig config;
  Placement placement;
  AccessMatrix access;
};

inline Instance small_instance(const SmallSpec& spec, std::uint64_t seed) {
  auto rng = make_rng(seed, 0x736d616cULL);
  Instance inst;
  auto& cfg = inst.config;
  cfg.tau = spec.tau;
  cfg.startup_delay = spec.startup_delay;
  for (int j = 0; j < spec.servers; ++j)
    cfg.servers.push_back({5.0 + 20.0 * uniform01(rng), 0.01 + 0.04 * uniform01(rng)});
  for (int i = 0; i < spec.files; ++i) {
    VideoFile f;
    f.id = i;
    f.segments = spec.min_segments +
                 static_cast<int>(uniform01(rng) * (spec.max_segments - spec.min_segments + 1));
    f.k = spec.k;
    f.n = spec.n;
    f.lambda = 0.5 + uniform01(rng);
    cfg.files.push_back(std::move(f));
  }
  inst.placement = random_placement(cfg, rng);
  inst.access = equal_access(cfg, inst.placement);
  const auto rho = utilization(cfg, inst.access);
  const double peak = *std::max_element(rho.begin(), rho.end());
  for (auto& f : cfg.files) f.lambda *= spec.max_load / peak;
  require_valid(cfg, inst.placement, inst.access);
  return inst;
}

}  // namespace ecstream
