#pragma once

// Line-oriented text formats.
//
// Cluster description: one directive per line, '#' starts a comment.
//
//   tau 4                 segment duration (s), default 4
//   ds 20                 startup delay (s), default 0
//   x 10                  tail threshold (s), default 0
//   theta 0.5             weight of the mean-stall term, default 0.5
//   y 1                   parallel streams per server, default 1
//   waiting pk            queueing-delay transform: pk (default) or sojourn
//   server alpha=18.2298 beta=0.01
//   file L=150 k=2 n=3 lambda=0.002 [cache=0,0,5,...]
//
// Servers and files are numbered in order of appearance. Scalars may appear at most
// once; unknown directives and keys are errors.
//
// Solution (access, placement, auxiliary variables):
//
//   solution files=R servers=M
//   placement <i> <j> <j> ...
//   access <i> <pi_i0> ... <pi_i,M-1>
//   aux <i> <t_mean> <t_tail>

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "ecstream/error.hpp"
#include "ecstream/model.hpp"

namespace ecstream {

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r') ++pos;
    if (pos > start) out.push_back(line.substr(start, pos - start));
  }
  return out;
}

inline std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t pos = 0; pos <= s.size(); ++pos) {
    if (pos == s.size() || s[pos] == sep) {
      out.push_back(s.substr(start, pos - start));
      start = pos + 1;
    }
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::string_view what, int line) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(fmt::format("line {}: bad {} '{}'", line, what, text));
  return value;
}

/// key=value tokens of a block line; rejects keys outside `allowed` and repeats.
inline std::map<std::string, std::string_view> parse_keys(std::span<const std::string_view> tokens,
                                                          const std::set<std::string>& allowed,
                                                          int line) {
  std::map<std::string, std::string_view> out;
  for (auto tok : tokens) {
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(fmt::format("line {}: expected key=value, got '{}'", line, tok));
    std::string key(tok.substr(0, eq));
    if (!allowed.count(key)) throw ConfigError(fmt::format("line {}: unknown key '{}'", line, key));
    if (!out.emplace(key, tok.substr(eq + 1)).second)
      throw ConfigError(fmt::format("line {}: duplicate key '{}'", line, key));
  }
  return out;
}

inline std::string_view require_key(const std::map<std::string, std::string_view>& kv,
                                    const std::string& key, int line) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ConfigError(fmt::format("line {}: missing key '{}'", line, key));
  return it->second;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path));
  out << content;
  if (!out) throw IoError(fmt::format("write failed for '{}'", path));
}

}  // namespace detail

inline SystemConfig parse_config(std::string_view text) {
  SystemConfig cfg;
  std::set<std::string> seen;
  int line_no = 0;
  for (auto raw : detail::split_on(text, '\n')) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto tok = detail::split_ws(raw);
    if (tok.empty()) continue;
    const std::string head(tok[0]);
    const std::span<const std::string_view> rest(tok.data() + 1, tok.size() - 1);

    if (head == "server") {
      const auto kv = detail::parse_keys(rest, {"alpha", "beta"}, line_no);
      ServerParams s;
      s.alpha = detail::parse_number<double>(detail::require_key(kv, "alpha", line_no), "alpha", line_no);
      s.beta = detail::parse_number<double>(detail::require_key(kv, "beta", line_no), "beta", line_no);
      cfg.servers.push_back(s);
      continue;
    }
    if (head == "file") {
      const auto kv = detail::parse_keys(rest, {"L", "k", "n", "lambda", "cache"}, line_no);
      VideoFile f;
      f.id = static_cast<int>(cfg.files.size());
      f.segments = detail::parse_number<int>(detail::require_key(kv, "L", line_no), "L", line_no);
      f.k = detail::parse_number<int>(detail::require_key(kv, "k", line_no), "k", line_no);
      f.n = detail::parse_number<int>(detail::require_key(kv, "n", line_no), "n", line_no);
      f.lambda = detail::parse_number<double>(detail::require_key(kv, "lambda", line_no), "lambda", line_no);
      if (auto it = kv.find("cache"); it != kv.end())
        for (auto part : detail::split_on(it->second, ','))
          f.cached_prefix.push_back(detail::parse_number<int>(part, "cache", line_no));
      cfg.files.push_back(std::move(f));
      continue;
    }

    static const std::set<std::string> scalars{"tau", "ds", "x", "theta", "y", "waiting"};
    if (!scalars.count(head)) throw ConfigError(fmt::format("line {}: unknown directive '{}'", line_no, head));
    if (!seen.insert(head).second) throw ConfigError(fmt::format("line {}: duplicate '{}'", line_no, head));
    if (tok.size() != 2) throw ConfigError(fmt::format("line {}: '{}' takes one value", line_no, head));
    const auto v = tok[1];
    if (head == "tau") cfg.tau = detail::parse_number<double>(v, head, line_no);
    else if (head == "ds") cfg.startup_delay = detail::parse_number<double>(v, head, line_no);
    else if (head == "x") cfg.tail_threshold = detail::parse_number<double>(v, head, line_no);
    else if (head == "theta") cfg.theta = detail::parse_number<double>(v, head, line_no);
    else if (head == "y") cfg.streams_per_server = detail::parse_number<int>(v, head, line_no);
    else if (v == "pk") cfg.waiting = WaitingModel::waiting;
    else if (v == "sojourn") cfg.waiting = WaitingModel::sojourn;
    else throw ConfigError(fmt::format("line {}: waiting must be pk or sojourn", line_no));
  }
  require_valid(cfg);
  return cfg;
}

inline SystemConfig load_config(const std::string& path) {
  return parse_config(detail::read_file(path));
}

inline std::string format_config(const SystemConfig& cfg) {
  std::string out;
  out += fmt::format("tau {:.17g}\nds {:.17g}\nx {:.17g}\ntheta {:.17g}\ny {}\nwaiting {}\n", cfg.tau,
                     cfg.startup_delay, cfg.tail_threshold, cfg.theta, cfg.streams_per_server,
                     cfg.waiting == WaitingModel::waiting ? "pk" : "sojourn");
  for (const auto& s : cfg.servers) out += fmt::format("server alpha={:.17g} beta={:.17g}\n", s.alpha, s.beta);
  for (const auto& f : cfg.files) {
    out += fmt::format("file L={} k={} n={} lambda={:.17g}", f.segments, f.k, f.n, f.lambda);
    if (!f.cached_prefix.empty()) out += fmt::format(" cache={}", fmt::join(f.cached_prefix, ","));
    out += '\n';
  }
  return out;
}

struct Solution {
  AccessMatrix access;
  Placement placement;
  AuxVars aux;
};

inline std::string format_solution(const Solution& s) {
  const std::size_t r = s.access.files(), m = s.access.servers();
  std::string out = fmt::format("solution files={} servers={}\n", r, m);
  for (std::size_t i = 0; i < r; ++i)
    out += fmt::format("placement {} {}\n", i, fmt::join(s.placement[i], " "));
  for (std::size_t i = 0; i < r; ++i) {
    out += fmt::format("access {}", i);
    for (double p : s.access.row(i)) out += fmt::format(" {:.17g}", p);
    out += '\n';
  }
  for (std::size_t i = 0; i < s.aux.files(); ++i)
    out += fmt::format("aux {} {:.17g} {:.17g}\n", i, s.aux.t_mean[i], s.aux.t_tail[i]);
  return out;
}

inline Solution parse_solution(std::string_view text) {
  Solution sol;
  std::size_t r = 0, m = 0;
  bool header = false;
  std::vector<char> have_place, have_access, have_aux;
  int line_no = 0;
  auto index = [&](std::string_view tok) {
    const auto i = detail::parse_number<std::size_t>(tok, "file index", line_no);
    if (i >= r) throw ConfigError(fmt::format("line {}: file index {} out of range", line_no, i));
    return i;
  };
  for (auto raw : detail::split_on(text, '\n')) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto tok = detail::split_ws(raw);
    if (tok.empty()) continue;
    if (tok[0] == "solution") {
      if (header) throw ConfigError(fmt::format("line {}: duplicate header", line_no));
      const auto kv = detail::parse_keys(std::span(tok).subspan(1), {"files", "servers"}, line_no);
      r = detail::parse_number<std::size_t>(detail::require_key(kv, "files", line_no), "files", line_no);
      m = detail::parse_number<std::size_t>(detail::require_key(kv, "servers", line_no), "servers", line_no);
      sol.access = AccessMatrix(r, m, 0.0);
      sol.placement.sets.assign(r, {});
      sol.aux.t_mean.assign(r, 0.0);
      sol.aux.t_tail.assign(r, 0.0);
      have_place.assign(r, 0);
      have_access.assign(r, 0);
      have_aux.assign(r, 0);
      header = true;
      continue;
    }
    if (!header) throw ConfigError(fmt::format("line {}: solution header must come first", line_no));
    if (tok.size() < 2) throw ConfigError(fmt::format("line {}: missing file index", line_no));
    const auto i = index(tok[1]);
    if (tok[0] == "placement") {
      if (have_place[i]++) throw ConfigError(fmt::format("line {}: duplicate placement", line_no));
      for (std::size_t a = 2; a < tok.size(); ++a)
        sol.placement[i].push_back(detail::parse_number<int>(tok[a], "server", line_no));
    } else if (tok[0] == "access") {
      if (have_access[i]++) throw ConfigError(fmt::format("line {}: duplicate access row", line_no));
      if (tok.size() != m + 2)
        throw ConfigError(fmt::format("line {}: access row needs {} entries", line_no, m));
      for (std::size_t j = 0; j < m; ++j)
        sol.access(i, j) = detail::parse_number<double>(tok[j + 2], "probability", line_no);
    } else if (tok[0] == "aux") {
      if (have_aux[i]++) throw ConfigError(fmt::format("line {}: duplicate aux row", line_no));
      if (tok.size() != 4) throw ConfigError(fmt::format("line {}: aux needs t_mean t_tail", line_no));
      sol.aux.t_mean[i] = detail::parse_number<double>(tok[2], "t_mean", line_no);
      sol.aux.t_tail[i] = detail::parse_number<double>(tok[3], "t_tail", line_no);
    } else {
      throw ConfigError(fmt::format("line {}: unknown directive '{}'", line_no, tok[0]));
    }
  }
  if (!header) throw ConfigError("solution header missing");
  for (std::size_t i = 0; i < r; ++i)
    if (!have_place[i] || !have_access[i] || !have_aux[i])
      throw ConfigError(fmt::format("solution incomplete for file {}", i));
  return sol;
}

inline Solution load_solution(const std::string& path) {
  return parse_solution(detail::read_file(path));
}

}  // namespace ecstream
