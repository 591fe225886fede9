// ecstream command-line driver.

#include <filesystem>
#include <functional>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ecstream/ecstream.hpp"

namespace fs = std::filesystem;
using namespace ecstream;

namespace {

struct Common {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 1;
  std::optional<double> theta;
  std::optional<double> x;
  int replications = 1;
  int horizon = 10000;
  std::string solution;
};

SystemConfig load(const Common& c) {
  auto cfg = load_config(c.config);
  if (c.theta) cfg.theta = *c.theta;
  if (c.x) cfg.tail_threshold = *c.x;
  require_valid(cfg);
  return cfg;
}

fs::path out_dir(const Common& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", c.out, ec.message()));
  return fs::path(c.out);
}

void write(const fs::path& dir, const std::string& name, const std::string& content) {
  detail::write_file((dir / name).string(), content);
}

SolverSettings settings_for(const Common& c) {
  SolverSettings s;
  s.seed = c.seed;
  return s;
}

/// Operating point for commands that evaluate rather than optimize: the given
/// solution, or the seeded random placement with equal access and tuned t.
Solution operating_point(const SystemConfig& cfg, const Common& c) {
  if (!c.solution.empty()) {
    auto sol = load_solution(c.solution);
    require_valid(cfg, sol.placement, sol.access);
    return sol;
  }
  auto start = default_start(cfg, c.seed);
  auto aux = optimize_aux(cfg, start.placement, start.access, start.aux, settings_for(c)).aux;
  return {start.access, start.placement, aux};
}

/// Re-tunes both t vectors at a fixed (pi, S) so the mean and tail bounds are each
/// as tight as the point allows, whatever theta the point was optimized for.
AuxVars tune_both(SystemConfig cfg, const Solution& sol, const SolverSettings& s) {
  cfg.theta = 0.5;
  const auto start = admissible_aux(cfg, sol.access, sol.placement, sol.aux);
  return optimize_aux(cfg, sol.placement, sol.access, start, s).aux;
}

int cmd_analyze(const Common& c) {
  const auto cfg = load(c);
  const auto sol = operating_point(cfg, c);
  const auto rep = evaluate_bounds(cfg, sol.access, sol.placement, sol.aux);
  write(out_dir(c), "bounds.csv", bound_report_csv(rep));
  fmt::print("objective {:.10g} (mean term {:.10g}, tail term {:.10g})\n", rep.objective, rep.mean_term,
             rep.tail_term);
  return 0;
}

int cmd_optimize(const Common& c) {
  const auto cfg = load(c);
  const auto res = alternate(cfg, settings_for(c));
  const auto dir = out_dir(c);
  write(dir, "solution.txt", format_solution({res.access, res.placement, res.aux}));
  write(dir, "trace.csv", res.trace.csv());
  write(dir, "bounds.csv", bound_report_csv(evaluate_bounds(cfg, res.access, res.placement, res.aux)));
  fmt::print("objective {:.10g} after {} outer iterations ({})\n", res.objective, res.outer_iterations,
             res.trace.converged ? "converged" : "iteration cap");
  return 0;
}

int cmd_simulate(const Common& c, bool dump) {
  const auto cfg = load(c);
  auto sol = operating_point(cfg, c);
  sol.aux = tune_both(cfg, sol, settings_for(c));
  const auto bounds = evaluate_bounds(cfg, sol.access, sol.placement, sol.aux);
  SimSettings sim;
  sim.seed = c.seed;
  sim.replications = c.replications;
  sim.requests = c.horizon;
  sim.keep_samples = dump;
  const auto rep = run_simulation(cfg, sol.access, sol.placement, sim);
  const auto checks = check_bounds(bounds, rep);
  const auto dir = out_dir(c);
  write(dir, "simulation.csv", comparison_csv(rep, checks));
  write(dir, "servers.csv", server_csv(rep));
  if (dump) write(dir, "samples.csv", samples_csv(rep));
  std::size_t bad = 0;
  for (const auto& ch : checks) bad += !(ch.mean_ok && ch.tail_ok);
  fmt::print("{} requests simulated, {} of {} files within bounds{}\n", rep.requests, checks.size() - bad,
             checks.size(), rep.unstable ? " (unstable configuration)" : "");
  if (rep.invariant_violations > 0)
    throw Error(ErrorCategory::numeric, fmt::format("{} playback invariant violations", rep.invariant_violations));
  if (bad > 0)
    throw Error(ErrorCategory::validation, fmt::format("{} files exceed their bound by more than 2 stderr", bad));
  return 0;
}

int cmd_baselines(const Common& c) {
  const auto cfg = load(c);
  const auto s = settings_for(c);
  std::string out = "policy,objective,mean_term,tail_term\n";
  const auto full = alternate(cfg, s);
  const auto parts = objective_parts(BoundModel(cfg, full.access), full.aux);
  out += fmt::format("proposed,{:.10g},{:.10g},{:.10g}\n", full.objective, parts.mean_term, parts.tail_term);
  for (auto kind : kAllPolicies) {
    const auto b = make_baseline(kind, cfg, c.seed, s);
    out += fmt::format("{},{:.10g},{:.10g},{:.10g}\n", policy_name(kind), b.objective, b.mean_term, b.tail_term);
  }
  write(out_dir(c), "baselines.csv", out);
  std::cout << out;
  return 0;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto part : detail::split_on(s, ','))
    if (!part.empty()) out.emplace_back(part);
  if (out.empty()) throw ConfigError("empty sweep list");
  return out;
}

double to_double(const std::string& s) { return detail::parse_number<double>(s, "sweep value", 0); }
int to_int(const std::string& s) { return detail::parse_number<int>(s, "sweep value", 0); }

struct SweepArgs {
  std::string arrival_scale, files, servers, code, streams, x;
};

int cmd_sweep(const Common& c, const SweepArgs& a) {
  const auto base = load(c);
  std::vector<std::pair<std::string, std::string>> chosen;
  if (!a.arrival_scale.empty()) chosen.emplace_back("arrival_scale", a.arrival_scale);
  if (!a.files.empty()) chosen.emplace_back("files", a.files);
  if (!a.servers.empty()) chosen.emplace_back("servers", a.servers);
  if (!a.code.empty()) chosen.emplace_back("code", a.code);
  if (!a.streams.empty()) chosen.emplace_back("streams", a.streams);
  if (!a.x.empty()) chosen.emplace_back("x", a.x);
  if (chosen.size() != 1) throw ConfigError("sweep needs exactly one of --arrival-scale --files --servers --code --streams --sweep-x");
  const auto& [param, list] = chosen.front();

  std::vector<std::string> values = split_list(list);
  std::vector<SystemConfig> configs;
  for (const auto& v : values) {
    SystemConfig cfg = base;
    if (param == "arrival_scale") {
      const double k = to_double(v);
      for (auto& f : cfg.files) f.lambda *= k;
    } else if (param == "files") {
      const int n = to_int(v);
      if (n < 1) throw ConfigError("file count must be >= 1");
      cfg.files.clear();
      for (int i = 0; i < n; ++i) {
        cfg.files.push_back(base.files[i % base.files.size()]);
        cfg.files.back().id = i;
      }
    } else if (param == "servers") {
      const int n = to_int(v);
      if (n < 1) throw ConfigError("server count must be >= 1");
      cfg.servers.clear();
      for (int j = 0; j < n; ++j) cfg.servers.push_back(base.servers[j % base.servers.size()]);
      for (auto& f : cfg.files) f.cached_prefix.clear();
    } else if (param == "code") {
      const auto nk = detail::split_on(v, ':');
      if (nk.size() != 2) throw ConfigError(fmt::format("code '{}' must be n:k", v));
      for (auto& f : cfg.files) {
        f.n = detail::parse_number<int>(nk[0], "n", 0);
        f.k = detail::parse_number<int>(nk[1], "k", 0);
      }
    } else if (param == "streams") {
      cfg.streams_per_server = to_int(v);
    } else {
      cfg.tail_threshold = to_double(v);
    }
    require_valid(cfg);
    configs.push_back(std::move(cfg));
  }

  const auto s = settings_for(c);
  std::vector<std::future<OptimizeResult>> jobs;
  for (const auto& cfg : configs)
    jobs.push_back(std::async(std::launch::async, [&cfg, &s] { return alternate(cfg, s); }));
  std::string out = fmt::format("{},objective,mean_term,tail_term,outer_iterations\n", param);
  for (std::size_t p = 0; p < jobs.size(); ++p) {
    const auto res = jobs[p].get();
    const auto parts = objective_parts(BoundModel(configs[p], res.access), res.aux);
    out += fmt::format("{},{:.10g},{:.10g},{:.10g},{}\n", values[p], res.objective, parts.mean_term,
                       parts.tail_term, res.outer_iterations);
  }
  write(out_dir(c), "sweep.csv", out);
  std::cout << out;
  return 0;
}

int cmd_tradeoff(const Common& c, int points) {
  if (points < 2) throw ConfigError("tradeoff needs at least 2 points");
  const auto base = load(c);
  const auto s = settings_for(c);
  std::string out = "theta,objective,mean_term,tail_term\n";
  const auto frontier = solve_frontier(base, points, s);
  for (int p = 0; p < points; ++p) {
    SystemConfig cfg = base;
    cfg.theta = static_cast<double>(p) / (points - 1);
    const auto& res = frontier[p];
    Solution sol{res.access, res.placement, res.aux};
    const auto aux = tune_both(cfg, sol, s);
    SystemConfig eval = cfg;
    eval.theta = 0.5;
    const auto parts = objective_parts(BoundModel(eval, res.access), aux);
    out += fmt::format("{:.10g},{:.10g},{:.10g},{:.10g}\n", cfg.theta, res.objective, parts.mean_term,
                       parts.tail_term);
  }
  write(out_dir(c), "tradeoff.csv", out);
  std::cout << out;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stall-duration bounds, optimization and simulation for erasure-coded video storage"};
  app.require_subcommand(1, 1);
  Common c;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", c.config, "cluster description")->required();
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--theta", c.theta, "weight of the mean-stall term")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--x", c.x, "tail threshold in seconds")->check(CLI::NonNegativeNumber);
  };

  auto* analyze = app.add_subcommand("analyze", "evaluate both bounds");
  add_common(analyze);
  analyze->add_option("--solution", c.solution, "solution file (default: random placement, equal access)");

  auto* optimize = app.add_subcommand("optimize", "alternating optimization of access, t and placement");
  add_common(optimize);

  bool dump = false;
  auto* simulate = app.add_subcommand("simulate", "compare bounds against the discrete-event simulator");
  add_common(simulate);
  simulate->add_option("--solution", c.solution, "solution file (default: random placement, equal access)");
  simulate->add_option("--replications", c.replications, "independent replications")->check(CLI::PositiveNumber);
  simulate->add_option("--horizon", c.horizon, "post-warmup requests of the least requested file")
      ->check(CLI::PositiveNumber);
  simulate->add_flag("--dump", dump, "write per-request stall samples");

  auto* baselines = app.add_subcommand("baselines", "compare against the five reference policies");
  add_common(baselines);

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "optimize over a list of parameter values");
  add_common(sweep);
  sweep->add_option("--arrival-scale", sa.arrival_scale, "arrival-rate multipliers, comma separated");
  sweep->add_option("--files", sa.files, "file counts");
  sweep->add_option("--servers", sa.servers, "server counts");
  sweep->add_option("--code", sa.code, "codes as n:k");
  sweep->add_option("--streams", sa.streams, "parallel streams per server");
  sweep->add_option("--sweep-x", sa.x, "tail thresholds");

  int points = 11;
  auto* tradeoff = app.add_subcommand("tradeoff", "mean/tail frontier over theta");
  add_common(tradeoff);
  tradeoff->add_option("--points", points, "theta grid size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fmt::print(stderr, "error: usage: {}\n", e.what());
    return 2;
  }

  try {
    if (*analyze) return cmd_analyze(c);
    if (*optimize) return cmd_optimize(c);
    if (*simulate) return cmd_simulate(c, dump);
    if (*baselines) return cmd_baselines(c);
    if (*sweep) return cmd_sweep(c, sa);
    if (*tradeoff) return cmd_tradeoff(c, points);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}: {}\n", category_name(e.category()), e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: internal: {}\n", e.what());
    return 3;
  }
  return 0;
}
