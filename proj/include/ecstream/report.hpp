#pragma once

#include <string>
#include <vector>

#include <fmt/format.h>

#include "ecstream/analysis.hpp"
#include "ecstream/simulator.hpp"

namespace ecstream {

/// One row per file (bounds and the t used), one per server (load and request rate),
/// and a final objective row.
inline std::string bound_report_csv(const BoundReport& rep) {
  std::string out = "kind,index,mean_bound,tail_bound,t_mean,t_tail,rho,lambda\n";
  for (std::size_t i = 0; i < rep.mean_bound.size(); ++i)
    out += fmt::format("file,{},{:.10g},{:.10g},{:.10g},{:.10g},,\n", i, rep.mean_bound[i],
                       rep.tail_bound[i], rep.aux.t_mean[i], rep.aux.t_tail[i]);
  for (std::size_t j = 0; j < rep.load.size(); ++j)
    out += fmt::format("server,{},,,,,{:.10g},{:.10g}\n", j, rep.load[j], rep.arrival_rate[j]);
  out += fmt::format("objective,,{:.10g},{:.10g},,,,{:.10g}\n", rep.mean_term, rep.tail_term, rep.objective);
  return out;
}

struct BoundCheck {
  std::size_t file = 0;
  double mean_bound = 0.0;
  double tail_bound = 0.0;
  bool mean_ok = true;
  bool tail_ok = true;
};

/// A bound holds when it is at least the estimate minus two standard errors. Files
/// with fewer than two post-warmup samples are not judged.
inline std::vector<BoundCheck> check_bounds(const BoundReport& bounds, const SimReport& sim) {
  std::vector<BoundCheck> out;
  for (std::size_t i = 0; i < sim.files.size(); ++i) {
    const auto& fs = sim.files[i];
    BoundCheck c{i, bounds.mean_bound[i], bounds.tail_bound[i], true, true};
    if (fs.stall.count >= 2) {
      c.mean_ok = c.mean_bound >= fs.stall.mean - 2.0 * fs.stall.stderr_;
      c.tail_ok = c.tail_bound >= fs.tail[0].mean - 2.0 * fs.tail[0].stderr_;
    }
    out.push_back(c);
  }
  return out;
}

inline std::string comparison_csv(const SimReport& sim, const std::vector<BoundCheck>& checks) {
  std::string out =
      "file,samples,mean_bound,sim_mean,sim_mean_stderr,x,tail_bound,sim_tail,sim_tail_stderr,valid\n";
  for (const auto& c : checks) {
    const auto& fs = sim.files[c.file];
    out += fmt::format("{},{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{}\n", c.file,
                       fs.stall.count, c.mean_bound, fs.stall.mean, fs.stall.stderr_, sim.thresholds[0],
                       c.tail_bound, fs.tail[0].mean, fs.tail[0].stderr_,
                       c.mean_ok && c.tail_ok ? "yes" : "no");
  }
  return out;
}

inline std::string server_csv(const SimReport& sim) {
  std::string out = "server,rho_model,rho_sim,lambda_sim\n";
  for (std::size_t j = 0; j < sim.rho_hat.size(); ++j)
    out += fmt::format("{},{:.10g},{:.10g},{:.10g}\n", j, sim.rho_model[j], sim.rho_hat[j], sim.lambda_hat[j]);
  return out;
}

inline std::string samples_csv(const SimReport& sim) {
  std::string out = "file,arrival,stall\n";
  for (const auto& s : sim.samples) out += fmt::format("{},{:.10g},{:.10g}\n", s.file, s.arrival, s.stall);
  return out;
}

}  // namespace ecstream
