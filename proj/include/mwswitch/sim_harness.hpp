#pragma once

// Monte Carlo steady-state estimation for the switch under MaxWeight.
//
// Each replication starts empty, runs warmup_slots, then time-averages over
// sample_slots. The point estimate is the mean of the replication averages
// and the 95% half-width comes from a Student-t interval across replications.
// Replications own disjoint RNG streams and are merged in index order, so the
// estimate depends only on the configuration and seed, not on thread timing.

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mwswitch/bounds.hpp"
#include "mwswitch/core_model.hpp"
#include "mwswitch/errors.hpp"
#include "mwswitch/geometry.hpp"
#include "mwswitch/gg1.hpp"
#include "mwswitch/lyapunov.hpp"
#include "mwswitch/matching.hpp"

namespace mwswitch {

inline constexpr std::uint64_t kMinSampleSlots = 1000;

struct DiagnosticsFlags {
  bool ssc = false;
  bool lyapunov_drift = false;
  bool gg1_coupling = false;
  /// Projection-based diagnostics run on every `every`-th sampled slot.
  int every = 100;
  std::vector<int> ssc_r{1, 2};
};

struct SimConfig {
  explicit SimConfig(TrafficModel m) : model(std::move(m)) {}

  TrafficModel model;
  /// Unset means default_warmup(model).
  std::optional<std::uint64_t> warmup_slots;
  std::uint64_t sample_slots = 1'000'000;
  int replications = 8;
  std::uint64_t seed = 1;
  DiagnosticsFlags diagnostics;
  TieBreak tie_break = TieBreak::kAuto;
  /// Worker threads; 0 uses the hardware concurrency.
  int threads = 0;
  bool check_invariants = true;
};

/// max(1e5, 20 * m / eps) where m = (1 - 1/(2n)) ||sigma||^2 / eps is the heavy-traffic
/// prediction of the mean total queue length.
inline std::uint64_t default_warmup(const TrafficModel& model) {
  const double n = model.n(), eps = model.epsilon();
  const double expected = (1.0 - 1.0 / (2.0 * n)) * model.sigma2().sum() / eps;
  return std::max<std::uint64_t>(100'000, static_cast<std::uint64_t>(std::ceil(20.0 * expected / eps)));
}

inline void validate_config(const SimConfig& cfg) {
  validate_traffic(cfg.model);
  if (cfg.sample_slots < kMinSampleSlots)
    throw ConfigError("sample_slots must be at least " + std::to_string(kMinSampleSlots));
  if (cfg.replications < 1) throw ConfigError("replications must be at least 1");
  if (cfg.diagnostics.every < 1) throw ConfigError("diagnostics.every must be at least 1");
  if (cfg.threads < 0) throw ConfigError("threads must be >= 0");
  for (int r : cfg.diagnostics.ssc_r)
    if (r < 1) throw ConfigError("ssc moment orders must be >= 1");
}

/// 95% two-sided Student-t half-width of the mean of `values`; +inf with fewer than two values.
inline double ci_halfwidth95(std::span<const double> values) {
  const std::size_t k = values.size();
  if (k < 2) return std::numeric_limits<double>::infinity();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(k);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(k - 1));
  const boost::math::students_t dist(static_cast<double>(k - 1));
  const double tq = boost::math::quantile(boost::math::complement(dist, 0.025));
  return tq * sd / std::sqrt(static_cast<double>(k));
}

inline double mean_of(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

/// Per-replication sums of one-slot Lyapunov drifts.
class DriftAccumulator {
 public:
  explicit DriftAccumulator(double kappa = std::numeric_limits<double>::infinity()) : kappa_(kappa) {}

  void add_quadratic(const LyapunovValues& before, const LyapunovValues& after) {
    sums_[0] += after.V - before.V;
    sums_[1] += after.V1 - before.V1;
    sums_[2] += after.V2 - before.V2;
    sums_[3] += after.V3 - before.V3;
    sums_[4] += after.V4 - before.V4;
    ++quadratic_count_;
  }

  void add_wperp(double before, double after) {
    wperp_sum_ += after - before;
    ++wperp_count_;
    if (before >= kappa_) {
      wperp_above_sum_ += after - before;
      ++wperp_above_count_;
    }
  }

  std::uint64_t quadratic_count() const { return quadratic_count_; }
  std::uint64_t wperp_count() const { return wperp_count_; }
  std::uint64_t wperp_above_count() const { return wperp_above_count_; }
  double kappa() const { return kappa_; }

  /// name -> (sum, count)
  std::map<std::string, std::pair<double, std::uint64_t>> sums() const {
    return {{"dV", {sums_[0], quadratic_count_}},
            {"dV1", {sums_[1], quadratic_count_}},
            {"dV2", {sums_[2], quadratic_count_}},
            {"dV3", {sums_[3], quadratic_count_}},
            {"dV4", {sums_[4], quadratic_count_}},
            {"dWperp", {wperp_sum_, wperp_count_}},
            {"dWperp_above_kappa", {wperp_above_sum_, wperp_above_count_}}};
  }

 private:
  double kappa_;
  double sums_[5] = {0, 0, 0, 0, 0};
  std::uint64_t quadratic_count_ = 0;
  double wperp_sum_ = 0.0;
  std::uint64_t wperp_count_ = 0;
  double wperp_above_sum_ = 0.0;
  std::uint64_t wperp_above_count_ = 0;
};

struct DriftStat {
  double mean = 0.0;
  double ci = 0.0;
  std::uint64_t samples = 0;
  /// |mean| <= 3 * ci.
  bool zero_within_3ci = false;
};

/// Time-averaged drifts pooled over replications, each with a t-interval
/// computed from the replication averages.
inline std::map<std::string, DriftStat> drift_zero_check(std::span<const DriftAccumulator> runs) {
  std::map<std::string, std::vector<double>> per_rep;
  std::map<std::string, std::pair<double, std::uint64_t>> pooled;
  for (const auto& acc : runs)
    for (const auto& [name, sc] : acc.sums()) {
      auto& p = pooled[name];
      p.first += sc.first;
      p.second += sc.second;
      if (sc.second > 0) per_rep[name].push_back(sc.first / static_cast<double>(sc.second));
    }
  std::map<std::string, DriftStat> out;
  for (const auto& [name, p] : pooled) {
    DriftStat d;
    d.samples = p.second;
    d.mean = p.second ? p.first / static_cast<double>(p.second) : std::numeric_limits<double>::quiet_NaN();
    d.ci = ci_halfwidth95(per_rep[name]);
    d.zero_within_3ci = p.second > 0 && std::abs(d.mean) <= 3.0 * d.ci;
    out.emplace(name, d);
  }
  return out;
}

struct SscSummary {
  double mean_norm_qperp = 0.0;
  double ci_norm_qperp = 0.0;
  double mean_norm_qpara = 0.0;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  /// r -> E ||q_perp||^r
  std::map<int, double> perp_moments;
  std::uint64_t samples = 0;
};

struct CouplingSummary {
  CouplingAxis axis = CouplingAxis::kRow;
  int index = 0;
  double phi_mean = 0.0;
  double phi_ci = 0.0;
  double upsilon_mean = 0.0;
  double queue_mean = 0.0;
  double analytic_mean = 0.0;
  std::uint64_t violations = 0;
};

struct SimEstimate {
  int n = 0;
  double epsilon = 0.0;
  double mean_total_queue = 0.0;
  double ci_halfwidth = 0.0;
  double scaled_mean = 0.0;  // epsilon * mean
  std::vector<double> replication_means;
  std::optional<SscSummary> ssc;
  std::map<std::string, DriftStat> drift_checks;
  std::vector<CouplingSummary> gg1;
  std::uint64_t warmup_slots = 0;
  std::uint64_t slots_simulated = 0;
};

namespace detail {

struct ReplicationResult {
  double mean_total = 0.0;
  std::uint64_t diag_samples = 0;
  double sum_perp = 0.0;
  double sum_para = 0.0;
  std::map<int, double> sum_perp_pow;
  DriftAccumulator drift;
  std::vector<CouplingTracker> trackers;
};

inline ReplicationResult run_replication(const SimConfig& cfg, std::uint64_t warmup, std::uint64_t replication,
                                         double kappa) {
  const int n = cfg.model.n();
  const auto& diag = cfg.diagnostics;
  ArrivalSampler sampler(cfg.model, cfg.seed, replication);
  auto tie_rng = make_stream(cfg.seed, replication, tie_break_stream_id(n));
  MaxWeightScheduler scheduler(n, cfg.tie_break);

  ReplicationResult res;
  res.drift = DriftAccumulator(kappa);
  for (int r : diag.ssc_r) res.sum_perp_pow[r] = 0.0;

  IntMatrix q = IntMatrix::Zero(n, n), a, q_next, unused;
  LyapunovValues lv, lv_next;
  const bool project = diag.ssc || diag.lyapunov_drift;
  double total_sum = 0.0;
  const std::uint64_t horizon = warmup + cfg.sample_slots;

  for (std::uint64_t t = 0; t < horizon; ++t) {
    const bool sampling = t >= warmup;
    if (t == warmup && diag.lyapunov_drift) lv = quadratic_values(q);
    if (t == warmup && diag.gg1_coupling) {
      res.trackers.emplace_back(0, CouplingAxis::kRow, q);
      res.trackers.emplace_back(0, CouplingAxis::kColumn, q);
    }
    const Schedule s = scheduler.choose(q, tie_rng);
    sampler.draw(a);
    advance(q, s, a, q_next, unused);
    if (cfg.check_invariants) {
      const std::string why = slot_invariant_failure(q, s, a, q_next, unused);
      if (!why.empty())
        throw InvariantViolation("slot " + std::to_string(t) + " of replication " + std::to_string(replication) +
                                 ": " + why);
    }
    if (sampling) {
      total_sum += static_cast<double>(q.sum());
      if (diag.lyapunov_drift) {
        lv_next = quadratic_values(q_next);
        res.drift.add_quadratic(lv, lv_next);
      }
      if (project && (t - warmup) % static_cast<std::uint64_t>(diag.every) == 0) {
        const ConeDecomposition d = project_onto_cone(q.cast<double>());
        const double perp = d.q_perp.norm();
        if (diag.ssc) {
          res.sum_perp += perp;
          res.sum_para += d.q_para.norm();
          for (auto& [r, acc] : res.sum_perp_pow) acc += std::pow(perp, r);
          ++res.diag_samples;
        }
        if (diag.lyapunov_drift) res.drift.add_wperp(perp, project_onto_cone(q_next.cast<double>()).q_perp.norm());
      }
      for (auto& tr : res.trackers)
        if (!tr.observe(q, a, q_next))
          throw DominanceViolation("coupled " + std::string(to_string(tr.axis())) + " queue exceeds the switch at slot " +
                                   std::to_string(t) + " of replication " + std::to_string(replication));
    }
    q.swap(q_next);
    if (diag.lyapunov_drift && sampling) std::swap(lv, lv_next);
  }
  res.mean_total = total_sum / static_cast<double>(cfg.sample_slots);
  return res;
}

}  // namespace detail

/// Steady-state estimate of E[sum q] plus the requested diagnostics.
inline SimEstimate run_steady_state(const SimConfig& cfg) {
  validate_config(cfg);
  const std::uint64_t warmup = cfg.warmup_slots.value_or(default_warmup(cfg.model));
  const ValidationReport v = validate_traffic(cfg.model);
  const double kappa = v.positive_rates ? ssc_drift_params(cfg.model).kappa : std::numeric_limits<double>::infinity();

  const int reps = cfg.replications;
  std::vector<std::optional<detail::ReplicationResult>> results(static_cast<std::size_t>(reps));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < reps; k = next++) {
      try {
        results[static_cast<std::size_t>(k)] =
            detail::run_replication(cfg, warmup, static_cast<std::uint64_t>(k), kappa);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
  };
  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, reps);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  SimEstimate est;
  est.n = cfg.model.n();
  est.epsilon = cfg.model.epsilon();
  est.warmup_slots = warmup;
  est.slots_simulated = static_cast<std::uint64_t>(reps) * (warmup + cfg.sample_slots);
  for (const auto& r : results) est.replication_means.push_back(r->mean_total);
  est.mean_total_queue = mean_of(est.replication_means);
  est.ci_halfwidth = ci_halfwidth95(est.replication_means);
  est.scaled_mean = est.epsilon * est.mean_total_queue;

  const auto& diag = cfg.diagnostics;
  if (diag.ssc) {
    SscSummary s;
    std::vector<double> perp_means;
    double para = 0.0;
    for (const auto& r : results) {
      s.samples += r->diag_samples;
      s.mean_norm_qperp += r->sum_perp;
      para += r->sum_para;
      for (const auto& [k, acc] : r->sum_perp_pow) s.perp_moments[k] += acc;
      if (r->diag_samples) perp_means.push_back(r->sum_perp / static_cast<double>(r->diag_samples));
    }
    const double cnt = static_cast<double>(s.samples);
    s.mean_norm_qperp /= cnt;
    s.mean_norm_qpara = para / cnt;
    for (auto& [k, acc] : s.perp_moments) acc /= cnt;
    s.ci_norm_qperp = ci_halfwidth95(perp_means);
    if (s.mean_norm_qpara > 0.0) s.ratio = s.mean_norm_qperp / s.mean_norm_qpara;
    est.ssc = s;
  }
  if (diag.lyapunov_drift) {
    std::vector<DriftAccumulator> accs;
    for (const auto& r : results) accs.push_back(r->drift);
    est.drift_checks = drift_zero_check(accs);
  }
  if (diag.gg1_coupling) {
    for (std::size_t k = 0; k < results.front()->trackers.size(); ++k) {
      CouplingSummary c;
      const auto& first = results.front()->trackers[k];
      c.axis = first.axis();
      c.index = first.index();
      std::vector<double> phis;
      for (const auto& r : results) {
        const auto& tr = r->trackers[k];
        phis.push_back(tr.phi_mean());
        c.upsilon_mean += tr.upsilon_mean() / reps;
        c.queue_mean += tr.queue_mean() / reps;
        c.violations += tr.violations();
      }
      c.phi_mean = mean_of(phis);
      c.phi_ci = ci_halfwidth95(phis);
      c.analytic_mean = analytic_mean(port_sigma2(cfg.model, c.index, c.axis), cfg.model.epsilon());
      est.gg1.push_back(c);
    }
  }
  return est;
}

struct SscMomentCheck {
  int r = 1;
  double empirical = 0.0;  // E ||q_perp||^r
  double bound = 0.0;      // M_r^r
  bool applicable = false;
  bool holds = false;
};

/// One-sided comparison of empirical collapse moments with M_r^r.
inline std::vector<SscMomentCheck> ssc_moment_check(const SimEstimate& est, const TrafficModel& model) {
  if (!est.ssc) throw ConfigError("ssc_moment_check needs a run with ssc diagnostics enabled");
  std::vector<SscMomentCheck> out;
  for (const auto& [r, m] : est.ssc->perp_moments) {
    const FlaggedValue c = ssc_moment_constant(r, model);
    SscMomentCheck chk;
    chk.r = r;
    chk.empirical = m;
    chk.bound = std::pow(c.value, r);
    chk.applicable = c.applicable;
    chk.holds = m <= chk.bound;
    out.push_back(chk);
  }
  return out;
}

struct SweepRow {
  double eps = 0.0;
  double mean = 0.0;
  double ci = 0.0;
  double scaled_mean = 0.0;
  double ulb = 0.0;
  double thm_lb = 0.0;
  double thm_ub = 0.0;
  double ssc_ratio = std::numeric_limits<double>::quiet_NaN();
  bool theorem_applicable = false;
  SimEstimate estimate;
};

/// Runs the model template at each epsilon (strictly decreasing) and lines the
/// estimates up with the universal lower bound and the MaxWeight bracket.
inline std::vector<SweepRow> heavy_traffic_sweep(const SimConfig& base, std::span<const double> eps_list, int r = 2) {
  if (eps_list.empty()) throw ConfigError("sweep needs at least one epsilon");
  for (std::size_t k = 1; k < eps_list.size(); ++k)
    if (!(eps_list[k] < eps_list[k - 1])) throw ConfigError("sweep epsilons must be strictly decreasing");
  std::vector<SweepRow> rows;
  for (double eps : eps_list) {
    SimConfig cfg = base;
    cfg.model = base.model.with_epsilon(eps);
    cfg.diagnostics.ssc = true;
    const SimEstimate est = run_steady_state(cfg);
    const BoundReport thm = theorem1_bracket(cfg.model, r);
    SweepRow row;
    row.eps = eps;
    row.mean = est.mean_total_queue;
    row.ci = est.ci_halfwidth;
    row.scaled_mean = est.scaled_mean;
    row.ulb = universal_lower_bound(cfg.model);
    row.thm_lb = thm.lower;
    row.thm_ub = thm.upper;
    row.ssc_ratio = est.ssc ? est.ssc->ratio : std::numeric_limits<double>::quiet_NaN();
    row.theorem_applicable = thm.applicable;
    row.estimate = est;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mwswitch
