#pragma once

// Discrete-time single-server queue fed by all arrivals of one input port (or
// one output port), run side by side with the switch on the same arrival
// stream. It serves one packet per slot whenever nonempty, so it never holds
// more than the corresponding switch port.

#include <cstdint>
#include <optional>
#include <string>

#include "mwswitch/core_model.hpp"
#include "mwswitch/errors.hpp"
#include "mwswitch/matching.hpp"

namespace mwswitch {

struct GG1Step {
  std::int64_t phi_next = 0;
  std::int64_t upsilon = 0;  // unused service, 0 or 1
};

/// phi_next = max(phi + alpha - 1, 0), upsilon = phi_next - (phi + alpha - 1).
inline GG1Step step_gg1(std::int64_t phi, std::int64_t alpha) {
  if (phi < 0 || alpha < 0) throw std::invalid_argument("step_gg1: phi and alpha must be >= 0");
  const std::int64_t raw = phi + alpha - 1;
  const std::int64_t next = raw > 0 ? raw : 0;
  return {next, next - raw};
}

/// Exact steady-state mean of the queue when its arrivals have mean 1 - eps
/// and variance row_sigma2: row_sigma2 / (2 eps) - (1 - eps) / 2.
inline double analytic_mean(double row_sigma2, double epsilon) {
  return row_sigma2 / (2.0 * epsilon) - (1.0 - epsilon) / 2.0;
}

enum class CouplingAxis { kRow, kColumn };

inline const char* to_string(CouplingAxis a) { return a == CouplingAxis::kRow ? "row" : "column"; }

/// Follows one coupled queue alongside a running switch.
class CouplingTracker {
 public:
  CouplingTracker(int index, CouplingAxis axis, const IntMatrix& q0)
      : index_(index), axis_(axis), phi_(port_total(q0)) {}

  int index() const { return index_; }
  CouplingAxis axis() const { return axis_; }
  std::int64_t phi() const { return phi_; }

  /// Advances one slot. Returns false if the coupled queue exceeds the switch port afterwards.
  bool observe(const IntMatrix& q, const IntMatrix& arrivals, const IntMatrix& q_next) {
    const std::int64_t alpha = port_total(arrivals);
    const GG1Step s = step_gg1(phi_, alpha);
    phi_sum_ += static_cast<double>(phi_);
    queue_sum_ += static_cast<double>(port_total(q));
    upsilon_sum_ += static_cast<double>(s.upsilon);
    ++slots_;
    phi_ = s.phi_next;
    if (phi_ > port_total(q_next)) {
      ++violations_;
      return false;
    }
    return true;
  }

  std::uint64_t slots() const { return slots_; }
  std::uint64_t violations() const { return violations_; }
  double phi_mean() const { return slots_ ? phi_sum_ / static_cast<double>(slots_) : 0.0; }
  double upsilon_mean() const { return slots_ ? upsilon_sum_ / static_cast<double>(slots_) : 0.0; }
  double queue_mean() const { return slots_ ? queue_sum_ / static_cast<double>(slots_) : 0.0; }

  std::int64_t port_total(const IntMatrix& m) const {
    return axis_ == CouplingAxis::kRow ? m.row(index_).sum() : m.col(index_).sum();
  }

 private:
  int index_;
  CouplingAxis axis_;
  std::int64_t phi_;
  std::uint64_t slots_ = 0;
  std::uint64_t violations_ = 0;
  double phi_sum_ = 0.0;
  double queue_sum_ = 0.0;
  double upsilon_sum_ = 0.0;
};

struct CouplingReport {
  int index = 0;
  CouplingAxis axis = CouplingAxis::kRow;
  std::uint64_t slots = 0;
  double phi_mean = 0.0;
  double upsilon_mean = 0.0;
  double queue_mean = 0.0;  // time-average of the switch port total
  double analytic_mean = 0.0;
  std::uint64_t violations = 0;
};

/// Variance of the total arrivals to one port.
inline double port_sigma2(const TrafficModel& model, int index, CouplingAxis axis) {
  return axis == CouplingAxis::kRow ? model.sigma2().row(index).sum() : model.sigma2().col(index).sum();
}

/// Runs the switch under MaxWeight and the coupled queue of one port for `slots`
/// slots from `initial` (empty by default). Throws DominanceViolation on the
/// first slot where the coupled queue exceeds the port total.
inline CouplingReport coupled_dominance_run(const TrafficModel& model, int index, std::uint64_t slots,
                                            std::uint64_t seed, std::uint64_t replication = 0,
                                            CouplingAxis axis = CouplingAxis::kRow, TieBreak tie = TieBreak::kAuto,
                                            const std::optional<QueueMatrix>& initial = std::nullopt) {
  const int n = model.n();
  if (index < 0 || index >= n) throw std::invalid_argument("coupled_dominance_run: port index out of range");
  ArrivalSampler arrivals(model, seed, replication);
  auto tie_rng = make_stream(seed, replication, tie_break_stream_id(n));
  MaxWeightScheduler scheduler(n, tie);

  IntMatrix q = initial ? initial->values() : IntMatrix::Zero(n, n);
  if (q.rows() != n) throw std::invalid_argument("coupled_dominance_run: initial state has the wrong size");
  IntMatrix a, q_next, unused;
  CouplingTracker tracker(index, axis, q);
  for (std::uint64_t t = 0; t < slots; ++t) {
    const Schedule s = scheduler.choose(q, tie_rng);
    arrivals.draw(a);
    advance(q, s, a, q_next, unused);
    if (!tracker.observe(q, a, q_next))
      throw DominanceViolation("coupled queue exceeds switch " + std::string(to_string(axis)) + " " +
                               std::to_string(index) + " at slot " + std::to_string(t + 1));
    q.swap(q_next);
  }
  CouplingReport r;
  r.index = index;
  r.axis = axis;
  r.slots = tracker.slots();
  r.phi_mean = tracker.phi_mean();
  r.upsilon_mean = tracker.upsilon_mean();
  r.queue_mean = tracker.queue_mean();
  r.analytic_mean = analytic_mean(port_sigma2(model, index, axis), model.epsilon());
  r.violations = tracker.violations();
  return r;
}

}  // namespace mwswitch
