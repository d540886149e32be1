#pragma once

// Switch state, traffic description and one-slot queue dynamics of an
// n x n input-queued switch.
//
// Queue lengths, arrivals, schedules and unused service are exact integers.
// Everything analytic (rates, variances, norms) is double precision.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mwswitch/errors.hpp"

namespace mwswitch {

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Tolerance for face membership of user-supplied rates.
inline constexpr double kFaceTolerance = 1e-9;
/// Tolerance for the mean of an explicit arrival pmf against its target rate.
inline constexpr double kPmfMeanTolerance = 1e-12;

/// n x n matrix of nonnegative integer queue lengths.
class QueueMatrix {
 public:
  explicit QueueMatrix(int n) : q_(IntMatrix::Zero(n, n)) {
    if (n < 2) throw std::invalid_argument("QueueMatrix: port count must be at least 2");
  }

  explicit QueueMatrix(IntMatrix q) : q_(std::move(q)) {
    if (q_.rows() != q_.cols() || q_.rows() < 2)
      throw std::invalid_argument("QueueMatrix: expected a square matrix with n >= 2");
    if ((q_.array() < 0).any()) throw std::invalid_argument("QueueMatrix: negative queue length");
  }

  int n() const { return static_cast<int>(q_.rows()); }
  std::int64_t operator()(int i, int j) const { return q_(i, j); }
  const IntMatrix& values() const { return q_; }
  std::int64_t total() const { return q_.sum(); }
  RealMatrix as_real() const { return q_.cast<double>(); }

  friend bool operator==(const QueueMatrix& a, const QueueMatrix& b) { return a.q_ == b.q_; }

 private:
  IntMatrix q_;
};

/// A maximal schedule: input i is connected to output perm[i].
class Schedule {
 public:
  explicit Schedule(std::vector<int> perm) : perm_(std::move(perm)) {
    const int n = static_cast<int>(perm_.size());
    std::vector<char> seen(perm_.size(), 0);
    for (int j : perm_) {
      if (j < 0 || j >= n || seen[j]) throw std::invalid_argument("Schedule: not a permutation");
      seen[j] = 1;
    }
  }

  static Schedule identity(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    return Schedule(std::move(p));
  }

  int n() const { return static_cast<int>(perm_.size()); }
  int operator[](int i) const { return perm_[i]; }
  bool serves(int i, int j) const { return perm_[i] == j; }
  const std::vector<int>& perm() const { return perm_; }

  IntMatrix matrix() const {
    IntMatrix s = IntMatrix::Zero(n(), n());
    for (int i = 0; i < n(); ++i) s(i, perm_[i]) = 1;
    return s;
  }

  friend bool operator==(const Schedule& a, const Schedule& b) { return a.perm_ == b.perm_; }

 private:
  std::vector<int> perm_;
};

/// Stationary traffic for one member of the heavy-traffic family:
/// lambda = (1 - epsilon) * nu, with an explicit finite pmf per port pair.
class TrafficModel {
 public:
  static TrafficModel bernoulli(RealMatrix nu, double epsilon) {
    TrafficModel m(std::move(nu), epsilon);
    m.bernoulli_ = true;
    const RealMatrix lam = m.lambda();
    m.pmfs_.reserve(static_cast<std::size_t>(m.n() * m.n()));
    for (int i = 0; i < m.n(); ++i)
      for (int j = 0; j < m.n(); ++j) {
        if (lam(i, j) > 1.0)
          throw ConfigError("bernoulli arrivals need lambda <= 1 at (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
        m.pmfs_.push_back({1.0 - lam(i, j), lam(i, j)});
      }
    m.finish();
    return m;
  }

  static TrafficModel uniform_bernoulli(int n, double epsilon) {
    if (n < 2) throw ConfigError("port count must be at least 2");
    return bernoulli(RealMatrix::Constant(n, n, 1.0 / n), epsilon);
  }

  /// pmfs holds either one pmf shared by every pair or n*n pmfs in row-major order.
  static TrafficModel from_pmfs(RealMatrix nu, double epsilon, std::vector<std::vector<double>> pmfs) {
    TrafficModel m(std::move(nu), epsilon);
    const auto cells = static_cast<std::size_t>(m.n() * m.n());
    if (pmfs.size() == 1) pmfs.assign(cells, pmfs.front());
    if (pmfs.size() != cells)
      throw ConfigError("expected 1 or " + std::to_string(cells) + " arrival pmfs, got " +
                        std::to_string(pmfs.size()));
    m.pmfs_ = std::move(pmfs);
    m.finish();
    return m;
  }

  /// Same rate direction and arrival family at a different distance from the face.
  TrafficModel with_epsilon(double epsilon) const {
    if (!bernoulli_) throw ConfigError("only bernoulli models can be re-targeted to another epsilon");
    return bernoulli(nu_, epsilon);
  }

  int n() const { return static_cast<int>(nu_.rows()); }
  double epsilon() const { return epsilon_; }
  const RealMatrix& nu() const { return nu_; }
  RealMatrix lambda() const { return (1.0 - epsilon_) * nu_; }
  const RealMatrix& sigma2() const { return sigma2_; }
  int a_max() const { return a_max_; }
  bool is_bernoulli() const { return bernoulli_; }
  const std::vector<double>& pmf(int i, int j) const { return pmfs_[static_cast<std::size_t>(i * n() + j)]; }

 private:
  TrafficModel(RealMatrix nu, double epsilon) : nu_(std::move(nu)), epsilon_(epsilon) {
    if (nu_.rows() != nu_.cols() || nu_.rows() < 2)
      throw ConfigError("nu must be a square matrix with n >= 2");
    if (!nu_.allFinite()) throw ConfigError("nu has non-finite entries");
    if (!(epsilon_ > 0.0 && epsilon_ < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
    for (int i = 0; i < n(); ++i)
      for (int j = 0; j < n(); ++j)
        if (nu_(i, j) < 0.0)
          throw NegativeRate("nu(" + std::to_string(i) + "," + std::to_string(j) + ") is negative");
  }

  void finish() {
    const RealMatrix lam = lambda();
    sigma2_ = RealMatrix::Zero(n(), n());
    a_max_ = 1;
    for (int i = 0; i < n(); ++i)
      for (int j = 0; j < n(); ++j) {
        const auto& p = pmf(i, j);
        const std::string at = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
        if (p.size() < 2) throw ConfigError("pmf at " + at + " needs support {0,...,a_max} with a_max >= 1");
        double total = 0.0, mean = 0.0, second = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
          if (!(p[k] >= 0.0)) throw ConfigError("pmf at " + at + " has a negative probability");
          total += p[k];
          mean += static_cast<double>(k) * p[k];
          second += static_cast<double>(k * k) * p[k];
        }
        if (std::abs(total - 1.0) > kFaceTolerance) throw ConfigError("pmf at " + at + " does not sum to 1");
        if (!(p[0] > 0.0)) throw ConfigError("pmf at " + at + " must give P(a = 0) > 0");
        if (std::abs(mean - lam(i, j)) > kPmfMeanTolerance)
          throw ConfigError("pmf at " + at + " has mean " + std::to_string(mean) + " but lambda is " +
                            std::to_string(lam(i, j)));
        sigma2_(i, j) = std::max(0.0, second - mean * mean);
        a_max_ = std::max(a_max_, static_cast<int>(p.size()) - 1);
      }
  }

  RealMatrix nu_;
  double epsilon_;
  std::vector<std::vector<double>> pmfs_;
  RealMatrix sigma2_;
  int a_max_ = 1;
  bool bernoulli_ = false;
};

struct ValidationReport {
  int n = 0;
  double epsilon = 0.0;
  double load = 0.0;  // rho = 1 - epsilon
  double nu_min = 0.0;
  double nu_norm = 0.0;
  double lambda_norm2 = 0.0;
  double sigma_norm2 = 0.0;
  int a_max = 1;
  double max_face_deviation = 0.0;
  /// nu_min / (2 ||nu||): largest epsilon for which the collapse and bracket results apply.
  double ssc_threshold = 0.0;
  bool positive_rates = false;
  bool ssc_applicable = false;
};

/// Checks that nu lies on the face of doubly stochastic matrices and
/// summarizes the quantities every analytic bound needs.
inline ValidationReport validate_traffic(const TrafficModel& model) {
  const int n = model.n();
  const RealMatrix& nu = model.nu();
  if (n < 2) throw ConfigError("port count must be at least 2");
  if ((nu.array() < 0.0).any()) throw NegativeRate("nu has a negative entry");

  ValidationReport r;
  r.n = n;
  r.epsilon = model.epsilon();
  r.load = 1.0 - model.epsilon();
  for (int k = 0; k < n; ++k) {
    const double row = nu.row(k).sum();
    const double col = nu.col(k).sum();
    r.max_face_deviation = std::max({r.max_face_deviation, std::abs(row - 1.0), std::abs(col - 1.0)});
    if (std::abs(row - 1.0) > kFaceTolerance)
      throw RowColSumViolation("row " + std::to_string(k) + " of nu sums to " + std::to_string(row));
    if (std::abs(col - 1.0) > kFaceTolerance)
      throw RowColSumViolation("column " + std::to_string(k) + " of nu sums to " + std::to_string(col));
  }
  r.nu_min = nu.minCoeff();
  r.nu_norm = nu.norm();
  r.lambda_norm2 = model.lambda().squaredNorm();
  r.sigma_norm2 = model.sigma2().sum();
  r.a_max = model.a_max();
  r.positive_rates = r.nu_min > 0.0;
  r.ssc_threshold = r.nu_min / (2.0 * r.nu_norm);
  r.ssc_applicable = r.positive_rates && r.epsilon <= r.ssc_threshold * (1.0 + 1e-12);
  return r;
}

/// Result of one slot: q_next = q + a - s + u.
struct SlotOutcome {
  QueueMatrix q_next;
  IntMatrix unused;
  IntMatrix arrivals;
};

/// Allocation-free slot update used by the simulator hot loop.
inline void advance(const IntMatrix& q, const Schedule& s, const IntMatrix& a, IntMatrix& q_next,
                    IntMatrix& unused) {
  const Eigen::Index n = q.rows();
  q_next = q + a;
  unused.setZero(n, n);
  for (int i = 0; i < n; ++i) {
    const int j = s[i];
    if (q_next(i, j) > 0) {
      --q_next(i, j);
    } else {
      unused(i, j) = 1;
    }
  }
}

/// Queue evolution q_next = max(q + a - s, 0) with u = q_next - (q + a - s).
inline SlotOutcome step(const QueueMatrix& q, const Schedule& s, const IntMatrix& a) {
  if (s.n() != q.n() || a.rows() != q.n() || a.cols() != q.n())
    throw std::invalid_argument("step: dimension mismatch");
  if ((a.array() < 0).any()) throw std::invalid_argument("step: negative arrivals");
  IntMatrix next, unused;
  advance(q.values(), s, a, next, unused);
  return SlotOutcome{QueueMatrix(std::move(next)), std::move(unused), a};
}

/// Returns an empty string when every unused-service identity holds, else a description.
inline std::string slot_invariant_failure(const IntMatrix& q, const Schedule& s, const IntMatrix& a,
                                          const IntMatrix& q_next, const IntMatrix& u) {
  const Eigen::Index n = q.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    std::int64_t row_u = 0, col_u = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const std::int64_t sij = s.serves(static_cast<int>(i), static_cast<int>(j)) ? 1 : 0;
      if (q_next(i, j) < 0) return "negative queue";
      if (q_next(i, j) != q(i, j) + a(i, j) - sij + u(i, j)) return "q_next != q + a - s + u";
      if (u(i, j) < 0 || u(i, j) > sij) return "u not bounded by s";
      if (u(i, j) * q_next(i, j) != 0 || u(i, j) * q(i, j) != 0 || u(i, j) * a(i, j) != 0)
        return "unused service on a nonempty queue";
      row_u += u(i, j);
      col_u += u(j, i);
    }
    if (row_u > 1 || col_u > 1) return "unused service row/column sum exceeds 1";
  }
  if (q_next.sum() - q.sum() != a.sum() - static_cast<std::int64_t>(n) + u.sum()) return "conservation";
  return {};
}

/// Independent, reproducible RNG stream keyed by (seed, replication, stream id).
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t stream) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(replication), hi(replication), lo(stream), hi(stream), 0x6d77u};
  return std::mt19937_64(seq);
}

/// Draws the arrival matrix of one slot. Each port pair owns a private stream,
/// so entries are independent across pairs and across slots.
class ArrivalSampler {
 public:
  ArrivalSampler(const TrafficModel& model, std::uint64_t seed, std::uint64_t replication) : n_(model.n()) {
    const int cells = n_ * n_;
    cdfs_.reserve(static_cast<std::size_t>(cells));
    streams_.reserve(static_cast<std::size_t>(cells));
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        const auto& p = model.pmf(i, j);
        std::vector<double> cdf(p.size());
        double acc = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) cdf[k] = (acc += p[k]);
        cdf.back() = 1.0;
        cdfs_.push_back(std::move(cdf));
        streams_.push_back(make_stream(seed, replication, static_cast<std::uint64_t>(i * n_ + j)));
      }
  }

  void draw(IntMatrix& out) {
    out.resize(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        const auto c = static_cast<std::size_t>(i * n_ + j);
        const double u = unit_(streams_[c]);
        const auto& cdf = cdfs_[c];
        std::int64_t k = 0;
        while (u >= cdf[static_cast<std::size_t>(k)]) ++k;
        out(i, j) = k;
      }
  }

  IntMatrix sample() {
    IntMatrix a;
    draw(a);
    return a;
  }

  int n() const { return n_; }

 private:
  int n_;
  std::vector<std::vector<double>> cdfs_;
  std::vector<std::mt19937_64> streams_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

/// Stream id reserved for scheduler tie-breaking within a replication.
inline std::uint64_t tie_break_stream_id(int n) { return static_cast<std::uint64_t>(n) * n; }

}  // namespace mwswitch
