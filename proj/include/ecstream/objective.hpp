#pragma once

// Incrementally maintained weighted objective and its analytic gradients.
//
// For every file f and each active bound (mean at t_mean[f], tail at t_tail[f]) the
// state caches, per server j, log M_j(t) and Lambda_j (B_j(t) - 1) at that file's t.
// Moving one file's access between two servers then costs O(r) to re-evaluate.

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ecstream/analysis.hpp"
#include "ecstream/error.hpp"
#include "ecstream/model.hpp"

namespace ecstream {

class ObjectiveState {
 public:
  static constexpr int kMean = 0;
  static constexpr int kTail = 1;

  ObjectiveState(const SystemConfig& cfg, AccessMatrix pi, const Placement& S, AuxVars aux)
      : cfg_(cfg), pi_(std::move(pi)), aux_(std::move(aux)) {
    r_ = cfg.file_count();
    m_ = cfg.server_count();
    y_ = cfg.streams_per_server;
    if (pi_.files() != r_ || pi_.servers() != m_) throw ConfigError("access matrix shape mismatch");
    if (aux_.t_mean.size() != r_ || aux_.t_tail.size() != r_)
      throw ConfigError("auxiliary variables do not match the file count");
    member_.assign(r_ * m_, 0);
    for (std::size_t i = 0; i < S.files() && i < r_; ++i)
      for (int j : S[i]) member_[i * m_ + j] = 1;
    weight_ = request_weights(cfg);
    for (std::size_t j = 0; j < m_; ++j) stream_.push_back(stream_params(cfg, j));
    rebuild();
  }

  const SystemConfig& config() const { return cfg_; }
  const AccessMatrix& access() const { return pi_; }
  const AuxVars& aux() const { return aux_; }
  bool member(std::size_t i, std::size_t j) const { return member_[i * m_ + j] != 0; }
  double load(std::size_t j) const { return rho_[j]; }

  Placement placement() const {
    Placement S;
    S.sets.resize(r_);
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < m_; ++j)
        if (member(i, j)) S.sets[i].push_back(static_cast<int>(j));
    return S;
  }

  bool active(std::size_t f, int s) const {
    if (weight_[f] == 0.0) return false;
    return s == kMean ? cfg_.theta > 0.0 : cfg_.theta < 1.0;
  }

  double t_of(std::size_t f, int s) const { return s == kMean ? aux_.t_mean[f] : aux_.t_tail[f]; }

  void set_access(const AccessMatrix& pi) {
    pi_ = pi;
    rebuild_load();
  }

  void set_aux(const AuxVars& aux) {
    aux_ = aux;
    rebuild();
  }

  /// Recomputes every cached quantity from (pi, aux).
  void rebuild() {
    rebuild_aux();
    rebuild_load();
  }

  double objective() const { return objective_; }

  /// Value of the mean (s = kMean) or tail bound of file i, as in the objective.
  double bound(std::size_t i, int s) const {
    const double t = t_of(i, s);
    return s == kMean ? log_a_[i * 2 + s] / t : std::exp(log_a_[i * 2 + s] - t * cfg_.tail_threshold);
  }

  /// Whether every server is stable and each active t is admissible at every server
  /// of its file's placement.
  bool feasible() const { return violation().empty(); }

  std::string violation() const {
    for (std::size_t j = 0; j < m_; ++j)
      if (!(rho_[j] < 1.0)) return fmt::format("server {} utilization {} >= 1", j, rho_[j]);
    for (std::size_t f = 0; f < r_; ++f)
      for (int s = 0; s < 2; ++s) {
        if (!active(f, s)) continue;
        for (std::size_t j = 0; j < m_; ++j) {
          if (!member(f, j)) continue;
          if (auto c = admissible(j, f, s); c != DomainConstraint::none)
            return fmt::format("file {} {} t={} violates {} at server {}", f,
                               s == kMean ? "mean" : "tail", t_of(f, s), constraint_name(c), j);
        }
      }
    return {};
  }

  DomainConstraint admissible(std::size_t j, std::size_t f, int s) const {
    const double t = t_of(f, s);
    if (!(t > 0.0)) return DomainConstraint::positive;
    if (!(rho_[j] < 1.0)) return DomainConstraint::stability;
    if (!(t < stream_[j].alpha)) return DomainConstraint::pole;
    if (!shifted_ok_[idx(j, f, s)]) return DomainConstraint::shifted_mgf;
    if (!(t - ex_[idx(j, f, s)] > 0.0)) return DomainConstraint::waiting_mgf;
    return DomainConstraint::none;
  }

  /// Exchanges the roles of servers u and v for file i: access and placement membership.
  void swap_roles(std::size_t i, std::size_t u, std::size_t v) {
    if (u == v) return;
    const double pu = pi_(i, u), pv = pi_(i, v);
    std::swap(member_[i * m_ + u], member_[i * m_ + v]);
    pi_(i, u) = pv;
    pi_(i, v) = pu;
    move_mass(i, u, pv - pu);
    move_mass(i, v, pu - pv);
    // Only terms at u and v changed; a file using neither keeps -inf there.
    for (std::size_t f = 0; f < r_; ++f) {
      if (!(pi_(f, u) > 0.0 || pi_(f, v) > 0.0 || f == i)) continue;
      for (int s = 0; s < 2; ++s) {
        if (!active(f, s)) continue;
        const bool ok_u = update_term(f, s, u);
        const bool ok_v = update_term(f, s, v);
        if (ok_u && ok_v && esum_[f * 2 + s] > 1e-3) {
          finish_combine(f, s);
        } else {
          combine(f, s);
        }
      }
    }
    sum_objective();
  }

  /// What swap_roles(i, u, v) overwrites, so a rejected trial can be undone exactly.
  struct SwapUndo {
    std::vector<std::size_t> files;
    std::size_t u = 0, v = 0;
    std::array<double, 4> load{};
    std::vector<double> ex, term, eterm, log_a, contrib, ref, esum;
    double objective = 0.0;
  };

  SwapUndo save(std::size_t i, std::size_t u, std::size_t v) const { return save({i}, u, v); }

  /// Snapshot for several files exchanged between the same two servers.
  SwapUndo save(std::initializer_list<std::size_t> files, std::size_t u, std::size_t v) const {
    SwapUndo d{files, u, v, {rho_[u], rho_[v], rate_[u], rate_[v]}, {}, {}, eterm_, log_a_, contrib_, ref_, esum_,
               objective_};
    for (std::size_t j : {u, v}) d.ex.insert(d.ex.end(), ex_.begin() + idx(j, 0, 0), ex_.begin() + idx(j, r_, 0));
    d.term.reserve(r_ * 4);
    for (std::size_t f = 0; f < r_; ++f)
      for (int s = 0; s < 2; ++s)
        for (std::size_t j : {u, v}) d.term.push_back(term_[tidx(f, s, j)]);
    return d;
  }

  void restore(const SwapUndo& d) {
    for (std::size_t i : d.files) {
      std::swap(member_[i * m_ + d.u], member_[i * m_ + d.v]);
      std::swap(pi_(i, d.u), pi_(i, d.v));
    }
    rho_[d.u] = d.load[0];
    rho_[d.v] = d.load[1];
    log_idle_[d.u] = std::log1p(-rho_[d.u]);
    log_idle_[d.v] = std::log1p(-rho_[d.v]);
    rate_[d.u] = d.load[2];
    rate_[d.v] = d.load[3];
    std::copy(d.ex.begin(), d.ex.begin() + r_ * 2, ex_.begin() + idx(d.u, 0, 0));
    std::copy(d.ex.begin() + r_ * 2, d.ex.end(), ex_.begin() + idx(d.v, 0, 0));
    std::size_t a = 0;
    for (std::size_t f = 0; f < r_; ++f)
      for (int s = 0; s < 2; ++s)
        for (std::size_t j : {d.u, d.v}) term_[tidx(f, s, j)] = d.term[a++];
    eterm_ = d.eterm;
    log_a_ = d.log_a;
    contrib_ = d.contrib;
    ref_ = d.ref;
    esum_ = d.esum;
    objective_ = d.objective;
  }

  bool feasible_at(std::size_t u, std::size_t v) const {
    for (std::size_t j : {u, v}) {
      if (!(rho_[j] < 1.0)) return false;
      for (std::size_t f = 0; f < r_; ++f) {
        if (!member(f, j)) continue;
        for (int s = 0; s < 2; ++s)
          if (active(f, s) && admissible(j, f, s) != DomainConstraint::none) return false;
      }
    }
    return true;
  }

  /// d objective / d pi_ij for every (i, j); +inf where file i's t is inadmissible at j.
  AccessMatrix access_gradient() const {
    AccessMatrix g(r_, m_, 0.0);
    const auto w = slot_weights();
    for (std::size_t i = 0; i < r_; ++i) {
      const auto row = gradient_row(i, w);
      for (std::size_t j = 0; j < m_; ++j) g(i, j) = row[j];
    }
    return g;
  }

  /// Gradient row of file i only.
  std::vector<double> access_gradient_row(std::size_t i) const { return gradient_row(i, slot_weights()); }

  /// d objective / d t for every file; zero for inactive bounds.
  AuxVars aux_gradient() const {
    AuxVars g{std::vector<double>(r_, 0.0), std::vector<double>(r_, 0.0)};
    for (std::size_t f = 0; f < r_; ++f)
      for (int s = 0; s < 2; ++s) {
        if (!active(f, s)) continue;
        const double t = t_of(f, s);
        const double log_a = log_a_[f * 2 + s];
        // d log A / dt = sum_j pi_fj H_fj (d log H_fj / dt) / A
        double dlog_a = 0.0;
        for (std::size_t j = 0; j < m_; ++j) {
          if (pi_(f, j) == 0.0) continue;
          const double lh = log_h(f, j, s);
          if (lh == -kInf) continue;
          dlog_a += std::exp(std::log(pi_(f, j)) + lh - log_a) * dlog_h_dt(f, j, s);
        }
        double d;
        if (s == kMean) {
          d = cfg_.theta * (dlog_a / t - log_a / (t * t));
        } else {
          d = (1.0 - cfg_.theta) * std::exp(log_a - t * cfg_.tail_threshold) *
              (dlog_a - cfg_.tail_threshold);
        }
        (s == kMean ? g.t_mean : g.t_tail)[f] = weight_[f] * d;
      }
    return g;
  }

  /// Per-file contribution theta * mean or (1 - theta) * tail at an alternative t,
  /// with everything else fixed; +inf when t is inadmissible on the placement.
  double slot_value(std::size_t i, int s, double t) const {
    if (!(t > 0.0)) return kInf;
    double log_a = -kInf;
    for (std::size_t j = 0; j < m_; ++j) {
      if (!member(i, j)) continue;
      const auto& sp = stream_[j];
      if (!(rho_[j] < 1.0) || !(t < sp.alpha)) return kInf;
      if (!(sp.alpha * std::expm1((sp.beta - cfg_.tau) * t) + t < 0.0)) return kInf;
      const double lm = detail::log_mgf(sp, t);
      const double ex = excess_for(j, lm);
      if (!(t - ex > 0.0)) return kInf;
      if (pi_(i, j) == 0.0) continue;
      const double lh = log_h_raw(i, j, t, lm, ex);
      log_a = detail::log_add_exp(log_a, std::log(pi_(i, j)) + detail::log_add_exp(0.0, lh));
    }
    if (s == kMean) return cfg_.theta * log_a / t;
    return (1.0 - cfg_.theta) * std::exp(log_a - t * cfg_.tail_threshold);
  }

  /// Objective share of file i's bound s at the current t (weighted by theta only).
  double slot_current(std::size_t i, int s) const {
    return s == kMean ? cfg_.theta * bound(i, s) : (1.0 - cfg_.theta) * bound(i, s);
  }

  double weight(std::size_t i) const { return weight_[i]; }

 private:
  std::size_t idx(std::size_t j, std::size_t f, int s) const { return (j * r_ + f) * 2 + s; }
  std::size_t tidx(std::size_t f, int s, std::size_t j) const { return (f * 2 + s) * m_ + j; }

  // Everything that depends on t alone.
  void rebuild_aux() {
    lm_.assign(m_ * r_ * 2, kInf);
    geo_.assign(m_ * r_ * 2, -kInf);
    shifted_ok_.assign(m_ * r_ * 2, 0);
    for (std::size_t j = 0; j < m_; ++j)
      for (std::size_t f = 0; f < r_; ++f)
        for (int s = 0; s < 2; ++s) {
          if (!active(f, s)) continue;
          const double t = t_of(f, s);
          const auto& sp = stream_[j];
          if (!(t < sp.alpha)) continue;
          const double lm = detail::log_mgf(sp, t);
          const auto k = idx(j, f, s);
          lm_[k] = lm;
          shifted_ok_[k] = t > 0.0 && sp.alpha * std::expm1((sp.beta - cfg_.tau) * t) + t < 0.0;
          const int L = segments_at(cfg_.files[f], j);
          if (L > 0 && t > 0.0)
            geo_[k] = -t * (startup_at(cfg_, cfg_.files[f], j) - cfg_.tau) + std::log(t) +
                      detail::log_geometric_sum(lm - t * cfg_.tau, L);
        }
    em1_.clear();
    if (r_ * r_ * m_ * 2 > (std::size_t{1} << 22)) return;
    em1_.resize(r_ * m_ * r_ * 2);
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < m_; ++j) {
        const int L = segments_at(cfg_.files[i], j);
        for (std::size_t k = idx(j, 0, 0); k < idx(j + 1, 0, 0); ++k)
          em1_[i * m_ * r_ * 2 + k] = lm_[k] == kInf ? kInf : std::expm1(L * lm_[k]);
      }
  }

  // Everything that depends on pi, given the t tables.
  void rebuild_load() {
    rho_ = utilization(cfg_, pi_);
    log_idle_.resize(m_);
    for (std::size_t j = 0; j < m_; ++j) log_idle_[j] = std::log1p(-rho_[j]);
    rate_ = lambda_agg(cfg_, pi_);
    for (double& v : rate_) v /= y_;
    ex_.assign(m_ * r_ * 2, kInf);
    for (std::size_t j = 0; j < m_; ++j)
      for (std::size_t k = idx(j, 0, 0); k < idx(j + 1, 0, 0); ++k)
        if (lm_[k] != kInf) ex_[k] = excess_at(k);
    refresh_all_terms();
  }

  // expm1(L_ij log M_j(t)) for slot k = idx(j, f, s).
  double em1(std::size_t i, std::size_t k) const {
    if (!em1_.empty()) return em1_[i * m_ * r_ * 2 + k];
    const std::size_t j = k / (r_ * 2);
    return std::expm1(segments_at(cfg_.files[i], j) * lm_[k]);
  }

  // Lambda_j (B_j(t) - 1) for slot k = idx(j, f, s).
  double excess_at(std::size_t k) const {
    const std::size_t j = k / (r_ * 2);
    double sum = 0.0;
    for (std::size_t g = 0; g < r_; ++g) {
      const double p = pi_(g, j);
      if (p == 0.0 || cfg_.files[g].lambda == 0.0) continue;
      sum += p / y_ * cfg_.files[g].lambda * em1(g, k);
    }
    return sum;
  }

  // Same sum at an arbitrary log M_j(t).
  double excess_for(std::size_t j, double lm) const {
    double sum = 0.0;
    for (std::size_t g = 0; g < r_; ++g) {
      const double p = pi_(g, j);
      if (p == 0.0 || cfg_.files[g].lambda == 0.0) continue;
      sum += p / y_ * cfg_.files[g].lambda * std::expm1(segments_at(cfg_.files[g], j) * lm);
    }
    return sum;
  }

  void move_mass(std::size_t i, std::size_t j, double delta) {
    if (delta == 0.0) return;
    const auto& f = cfg_.files[i];
    const int L = segments_at(f, j);
    rho_[j] += delta * f.lambda * L * cfg_.servers[j].mean_service();
    log_idle_[j] = std::log1p(-rho_[j]);
    rate_[j] += delta * f.lambda / y_;
    const double c = delta / y_ * f.lambda;
    for (std::size_t k = idx(j, 0, 0); k < idx(j + 1, 0, 0); ++k)
      if (lm_[k] != kInf) ex_[k] += c * em1(i, k);
  }

  double log_h_raw(std::size_t f, std::size_t j, double t, double lm, double ex) const {
    const auto& file = cfg_.files[f];
    const int L = segments_at(file, j);
    if (L <= 0) return -kInf;
    double log_w = std::log1p(-rho_[j]) + std::log(t) - std::log(t - ex);
    if (cfg_.waiting == WaitingModel::sojourn && rate_[j] > 0.0) log_w += std::log1p(ex / rate_[j]);
    return -t * (startup_at(cfg_, file, j) - cfg_.tau) + log_w +
           detail::log_geometric_sum(lm - t * cfg_.tau, L);
  }

  // Same as log_h_raw at the current t, reusing the load-independent part.
  double log_h(std::size_t f, std::size_t j, int s) const {
    const auto k = idx(j, f, s);
    const double g = geo_[k];
    if (g == -kInf) return -kInf;
    const double ex = ex_[k];
    double v = g + log_idle_[j] - std::log(t_of(f, s) - ex);
    if (cfg_.waiting == WaitingModel::sojourn && rate_[j] > 0.0) v += std::log1p(ex / rate_[j]);
    return v;
  }

  /// log(pi_fj (1 + H_fj)), -inf when pi_fj = 0.
  double log_term(std::size_t f, std::size_t j, int s) const {
    const double p = pi_(f, j);
    if (p == 0.0) return -kInf;
    const auto k = idx(j, f, s);
    if (!shifted_ok_[k] || !(rho_[j] < 1.0) || !(t_of(f, s) - ex_[k] > 0.0)) return kInf;
    return std::log(p) + detail::log_add_exp(0.0, log_h(f, j, s));
  }

  void refresh_all_terms() {
    term_.assign(r_ * 2 * m_, -kInf);
    for (std::size_t f = 0; f < r_; ++f)
      for (int s = 0; s < 2; ++s) {
        if (!active(f, s)) continue;
        for (std::size_t j = 0; j < m_; ++j) term_[tidx(f, s, j)] = log_term(f, j, s);
      }
    recombine();
  }

  // log-sum-exp over servers, kept as exp(term - ref) with ref the maximum at the
  // last full pass, so a swap only re-exponentiates the two changed terms.
  void combine(std::size_t f, int s) {
    const std::size_t k = f * 2 + s;
    const double* term = &term_[tidx(f, s, 0)];
    double* e = &eterm_[tidx(f, s, 0)];
    const double hi = *std::max_element(term, term + m_);
    ref_[k] = hi;
    esum_[k] = 0.0;
    if (std::isfinite(hi)) {
      for (std::size_t j = 0; j < m_; ++j) esum_[k] += e[j] = std::exp(term[j] - hi);
      log_a_[k] = hi + std::log(esum_[k]);
    } else {
      std::fill(e, e + m_, 0.0);
      log_a_[k] = hi;
    }
    contrib_[k] = weight_[f] * slot_current(f, s);
  }

  // Refreshes term (f, s, j); false when the cached sum cannot absorb the change.
  bool update_term(std::size_t f, int s, std::size_t j) {
    const std::size_t k = f * 2 + s, a = tidx(f, s, j);
    const double t = log_term(f, j, s);
    term_[a] = t;
    if (!std::isfinite(ref_[k]) || t == kInf || t > ref_[k] + 30.0) return false;
    const double e = std::exp(t - ref_[k]);
    esum_[k] += e - eterm_[a];
    eterm_[a] = e;
    return true;
  }

  void finish_combine(std::size_t f, int s) {
    const std::size_t k = f * 2 + s;
    log_a_[k] = ref_[k] + std::log(esum_[k]);
    contrib_[k] = weight_[f] * slot_current(f, s);
  }

  void sum_objective() {
    objective_ = std::accumulate(contrib_.begin(), contrib_.end(), 0.0);
    if (std::isnan(objective_)) objective_ = kInf;
  }

  void recombine() {
    log_a_.assign(r_ * 2, -kInf);
    ref_.assign(r_ * 2, -kInf);
    esum_.assign(r_ * 2, 0.0);
    eterm_.assign(r_ * 2 * m_, 0.0);
    contrib_.assign(r_ * 2, 0.0);
    for (std::size_t f = 0; f < r_; ++f)
      for (int s = 0; s < 2; ++s)
        if (active(f, s)) combine(f, s);
    sum_objective();
  }

  /// Coefficient turning dA_f(t) into d objective for bound s of file f, applied in
  /// log space: returns log kappa with kappa * A-derivative = objective derivative.
  double log_kappa(std::size_t f, int s) const {
    const double t = t_of(f, s);
    const double log_a = log_a_[f * 2 + s];
    if (s == kMean) return std::log(weight_[f] * cfg_.theta) - std::log(t) - log_a;
    return std::log(weight_[f] * (1.0 - cfg_.theta)) - t * cfg_.tail_threshold;
  }

  /// d objective / d pi_fj through the (1 + H_fj) factor of file f itself.
  // Per active slot (f,s,j) with pi_fj > 0: kappa pi H, and that over (t - excess)
  // and over (rate + excess). The indirect gradient terms are linear in these.
  struct SlotWeights {
    std::vector<double> w, q, z;  // [j][f][s]
    std::vector<double> w_sum;    // [j]
  };

  SlotWeights slot_weights() const {
    SlotWeights sw{std::vector<double>(m_ * r_ * 2, 0.0), std::vector<double>(m_ * r_ * 2, 0.0),
                   std::vector<double>(m_ * r_ * 2, 0.0), std::vector<double>(m_, 0.0)};
    for (std::size_t f = 0; f < r_; ++f)
      for (int s = 0; s < 2; ++s) {
        if (!active(f, s)) continue;
        const double lk = log_kappa(f, s);
        for (std::size_t j = 0; j < m_; ++j) {
          if (!(pi_(f, j) > 0.0)) continue;
          const double lh = log_h(f, j, s);
          if (lh == -kInf) continue;
          const auto k = idx(j, f, s);
          const double w = std::exp(lk + std::log(pi_(f, j)) + lh);
          sw.w[k] = w;
          sw.q[k] = w / (t_of(f, s) - ex_[k]);
          if (cfg_.waiting == WaitingModel::sojourn && rate_[j] > 0.0) sw.z[k] = w / (rate_[j] + ex_[k]);
          sw.w_sum[j] += w;
        }
      }
    return sw;
  }

  // Direct terms of file i plus, per server, the load sensitivity of every slot there.
  std::vector<double> gradient_row(std::size_t i, const SlotWeights& sw) const {
    std::vector<double> row(m_, 0.0);
    for (int s = 0; s < 2; ++s) {
      if (!active(i, s)) continue;
      for (std::size_t j = 0; j < m_; ++j) row[j] += direct_term(i, j, s);
    }
    const auto& file = cfg_.files[i];
    if (file.lambda == 0.0) return row;
    const bool sojourn = cfg_.waiting == WaitingModel::sojourn;
    const double lam = file.lambda / y_;
    for (std::size_t j = 0; j < m_; ++j) {
      const int L = segments_at(file, j);
      const double a = file.lambda * L * cfg_.servers[j].mean_service();
      double acc = -a / (1.0 - rho_[j]) * sw.w_sum[j];
      if (sojourn && rate_[j] > 0.0) acc -= lam / rate_[j] * sw.w_sum[j];
      const std::size_t base = j * r_ * 2;
      for (std::size_t k = base; k < base + r_ * 2; ++k) {
        if (sw.w[k] == 0.0) continue;
        const double e = lam * em1(i, k);
        acc += e * sw.q[k];
        if (sojourn) acc += (lam + e) * sw.z[k];
      }
      row[j] += acc;
    }
    return row;
  }

  double direct_term(std::size_t f, std::size_t j, int s) const {
    if (admissible(j, f, s) != DomainConstraint::none) return kInf;
    return std::exp(log_kappa(f, s) + detail::log_add_exp(0.0, log_h(f, j, s)));
  }

  /// d objective / d pi_ij through the queue of server j as seen by file f.

  /// d log W_j(t_f) / d pi_ij.

  /// d log H_fj / dt at file f's t for bound s.
  double dlog_h_dt(std::size_t f, std::size_t j, int s) const {
    const auto& file = cfg_.files[f];
    const auto& sp = stream_[j];
    const int L = segments_at(file, j);
    const double t = t_of(f, s);
    const double lm = lm_[idx(j, f, s)];
    const double ex = ex_[idx(j, f, s)];
    const double dlm = sp.beta + 1.0 / (sp.alpha - t);
    double slope = 0.0;  // d/dt Lambda_j (B_j(t) - 1)
    for (std::size_t g = 0; g < r_; ++g) {
      const double p = pi_(g, j);
      if (p == 0.0 || cfg_.files[g].lambda == 0.0) continue;
      const int Lg = segments_at(cfg_.files[g], j);
      slope += p / y_ * cfg_.files[g].lambda * Lg * std::exp(Lg * lm) * dlm;
    }
    double d = -(startup_at(cfg_, file, j) - cfg_.tau) + 1.0 / t - (1.0 - slope) / (t - ex);
    if (cfg_.waiting == WaitingModel::sojourn && rate_[j] > 0.0) d += slope / (rate_[j] + ex);
    const double u = lm - t * cfg_.tau;
    d += (dlm - cfg_.tau) * detail::geometric_mean_index(u, L);
    return d;
  }


  const SystemConfig& cfg_;
  AccessMatrix pi_;
  AuxVars aux_;
  std::size_t r_ = 0, m_ = 0;
  int y_ = 1;
  std::vector<char> member_;
  std::vector<double> weight_;
  std::vector<ServerParams> stream_;
  std::vector<double> rho_, rate_;
  std::vector<double> log_idle_;  // log(1 - rho_j)
  std::vector<double> lm_, ex_;  // [j][f][s]
  std::vector<double> geo_;  // [j][f][s], pi-independent part of log H
  std::vector<double> em1_;  // [i][j][f][s] expm1(L_ij log M_j(t_fs)), when small enough
  std::vector<char> shifted_ok_;  // [j][f][s], pole and shifted-MGF conditions hold
  std::vector<double> term_;     // [f][s][j] log(pi (1 + H))
  std::vector<double> log_a_;
  std::vector<double> eterm_;       // [f][s][j] exp(term - ref)
  std::vector<double> ref_, esum_;  // [f][s]
  std::vector<double> contrib_;  // [f][s], weighted objective share
  double objective_ = 0.0;
};

enum class GradientTarget { access, aux };

struct ObjectiveGradient {
  AccessMatrix access;
  AuxVars aux;
};

/// Analytic gradient of the weighted objective at a strictly feasible point.
inline ObjectiveGradient objective_gradient(const SystemConfig& cfg, const AccessMatrix& pi,
                                            const Placement& S, const AuxVars& t,
                                            GradientTarget wrt) {
  require_valid(cfg, S, pi);
  ObjectiveState st(cfg, pi, S, t);
  if (auto v = st.violation(); !v.empty()) throw DomainError("gradient at infeasible point: " + v);
  ObjectiveGradient out;
  if (wrt == GradientTarget::access) out.access = st.access_gradient();
  else out.aux = st.aux_gradient();
  return out;
}

}  // namespace ecstream
