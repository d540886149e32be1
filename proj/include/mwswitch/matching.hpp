#pragma once

// Maximum-weight perfect matching between input and output ports.
//
// The Hungarian method keeps potentials (w, w_tilde) with w_i + w_tilde_j >= q_ij
// on every edge and equality on matched edges; at termination these are an
// optimal solution of the dual of the assignment LP.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <type_traits>
#include <vector>

#include "mwswitch/core_model.hpp"
#include "mwswitch/errors.hpp"

namespace mwswitch {

/// Largest port count accepted by exhaustive enumeration.
inline constexpr int kBruteForceMaxPorts = 8;
inline constexpr double kDualTolerance = 1e-9;
/// Real-valued schedule weights within this many ulps of n * max|q| of the maximum count as ties.
inline constexpr double kTieUlps = 64.0;

/// How ties among maximum-weight schedules are resolved.
enum class TieBreak {
  /// Uniform over the full argmax set (exhaustive, n <= 8).
  kUniform,
  /// Uniformly random relabeling of rows and columns before a Hungarian solve.
  /// Randomizes among optima without a uniformity guarantee.
  kRelabel,
  /// kUniform for small switches, kRelabel otherwise.
  kAuto,
};

inline constexpr int kAutoUniformMaxPorts = 5;

template <typename Scalar>
struct MatchingResult {
  Schedule perm;
  Scalar weight{};
  RealVector w;
  RealVector w_tilde;
};

template <typename Scalar>
struct BruteForceResult {
  Scalar max_weight{};
  std::vector<Schedule> argmax;
};

namespace detail {

// Minimum-cost assignment on cost = -weight, 1-based potentials u (rows), v (cols).
// Returns col_of_row.
template <typename Derived>
std::vector<int> hungarian_max(const Eigen::MatrixBase<Derived>& weight, std::vector<double>& w,
                               std::vector<double>& w_tilde) {
  using Scalar = typename Derived::Scalar;
  using Acc = std::conditional_t<std::is_integral_v<Scalar>, std::int64_t, double>;
  const int n = static_cast<int>(weight.rows());
  const Acc inf = std::numeric_limits<Acc>::max() / 4;
  std::vector<Acc> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      Acc delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const Acc cur = -static_cast<Acc>(weight(i0 - 1, j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n);
  for (int j = 1; j <= n; ++j) col_of_row[p[j] - 1] = j - 1;
  w.assign(n, 0.0);
  w_tilde.assign(n, 0.0);
  // u_i + v_j <= -q_ij, so (-u, -v) is feasible for the max-weight dual.
  for (int i = 1; i <= n; ++i) w[i - 1] = -static_cast<double>(u[i]);
  for (int j = 1; j <= n; ++j) w_tilde[j - 1] = -static_cast<double>(v[j]);
  return col_of_row;
}

template <typename Derived>
auto perm_weight(const Eigen::MatrixBase<Derived>& q, const std::vector<int>& perm) {
  typename Derived::Scalar s{};
  for (std::size_t i = 0; i < perm.size(); ++i) s += q(static_cast<Eigen::Index>(i), perm[i]);
  return s;
}

inline std::vector<std::vector<int>> all_permutations(int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

}  // namespace detail

/// Exhaustive maximum over all n! permutations with the complete set of maximizers.
template <typename Derived>
BruteForceResult<typename Derived::Scalar> brute_force_matching(const Eigen::MatrixBase<Derived>& q) {
  using Scalar = typename Derived::Scalar;
  const int n = static_cast<int>(q.rows());
  if (q.rows() != q.cols()) throw std::invalid_argument("brute_force_matching: matrix must be square");
  if (n > kBruteForceMaxPorts)
    throw SizeLimitExceeded("brute-force matching supports n <= " + std::to_string(kBruteForceMaxPorts) +
                            ", got " + std::to_string(n));
  BruteForceResult<Scalar> out;
  const auto perms = detail::all_permutations(n);
  std::vector<Scalar> weights(perms.size());
  for (std::size_t k = 0; k < perms.size(); ++k) weights[k] = detail::perm_weight(q, perms[k]);
  out.max_weight = *std::max_element(weights.begin(), weights.end());
  // Summation order differs between permutations, so real weights that are
  // equal in exact arithmetic may differ by rounding.
  Scalar slack{};
  if constexpr (std::is_floating_point_v<Scalar>)
    slack = static_cast<Scalar>(kTieUlps * std::numeric_limits<Scalar>::epsilon() * n * q.cwiseAbs().maxCoeff());
  for (std::size_t k = 0; k < perms.size(); ++k)
    if (weights[k] >= out.max_weight - slack) out.argmax.emplace_back(perms[k]);
  return out;
}

/// Maximum-weight perfect matching with optimal LP duals attached.
///
/// With TieBreak::kUniform the schedule is drawn uniformly from the argmax
/// set. Duals from any optimal dual solution certify every optimal schedule,
/// so they stay valid whichever maximizer is returned.
template <typename Derived, typename Rng>
MatchingResult<typename Derived::Scalar> max_weight_matching(const Eigen::MatrixBase<Derived>& q, Rng& rng,
                                                             TieBreak mode = TieBreak::kAuto) {
  using Scalar = typename Derived::Scalar;
  const int n = static_cast<int>(q.rows());
  if (q.rows() != q.cols() || n < 1) throw std::invalid_argument("max_weight_matching: matrix must be square");
  if (mode == TieBreak::kAuto) mode = n <= kAutoUniformMaxPorts ? TieBreak::kUniform : TieBreak::kRelabel;

  std::vector<int> row_label(n), col_label(n);
  std::iota(row_label.begin(), row_label.end(), 0);
  std::iota(col_label.begin(), col_label.end(), 0);
  if (mode == TieBreak::kRelabel) {
    std::shuffle(row_label.begin(), row_label.end(), rng);
    std::shuffle(col_label.begin(), col_label.end(), rng);
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> relabeled(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) relabeled(a, b) = q(row_label[a], col_label[b]);

  std::vector<double> w_rel, wt_rel;
  const std::vector<int> col_of_row_rel = detail::hungarian_max(relabeled, w_rel, wt_rel);

  MatchingResult<Scalar> result{Schedule::identity(n), Scalar{}, RealVector(n), RealVector(n)};
  std::vector<int> perm(n);
  for (int a = 0; a < n; ++a) {
    perm[row_label[a]] = col_label[col_of_row_rel[a]];
    result.w(row_label[a]) = w_rel[a];
    result.w_tilde(col_label[a]) = wt_rel[a];
  }

  if (mode == TieBreak::kUniform) {
    auto bf = brute_force_matching(q);
    std::uniform_int_distribution<std::size_t> pick(0, bf.argmax.size() - 1);
    perm = bf.argmax[pick(rng)].perm();
  }
  result.perm = Schedule(perm);
  result.weight = detail::perm_weight(q, perm);
  return result;
}

/// Max violation of w_i + w_tilde_j >= q_ij (0 when feasible).
template <typename Derived, typename Scalar>
double dual_infeasibility(const Eigen::MatrixBase<Derived>& q, const MatchingResult<Scalar>& r) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    for (Eigen::Index j = 0; j < q.cols(); ++j)
      worst = std::max(worst, static_cast<double>(q(i, j)) - (r.w(i) + r.w_tilde(j)));
  return worst;
}

/// |sum w + sum w_tilde - weight|.
template <typename Scalar>
double duality_gap(const MatchingResult<Scalar>& r) {
  return std::abs(r.w.sum() + r.w_tilde.sum() - static_cast<double>(r.weight));
}

/// True iff every matched edge is tight: q_{i,pi(i)} = w_i + w_tilde_{pi(i)}.
template <typename Derived, typename Scalar>
bool check_complementary_slackness(const Eigen::MatrixBase<Derived>& q, const MatchingResult<Scalar>& r,
                                   double tol = kDualTolerance) {
  for (int i = 0; i < r.perm.n(); ++i) {
    const int j = r.perm[i];
    if (std::abs(static_cast<double>(q(i, j)) - (r.w(i) + r.w_tilde(j))) > tol) return false;
  }
  return true;
}

/// Per-slot MaxWeight schedule selection for the simulator. For small switches
/// it scans a precomputed permutation table and picks uniformly among maximizers
/// by reservoir sampling; otherwise it relabels and runs the Hungarian solver.
class MaxWeightScheduler {
 public:
  MaxWeightScheduler(int n, TieBreak mode) : n_(n), mode_(mode) {
    if (mode_ == TieBreak::kAuto) mode_ = n <= kAutoUniformMaxPorts ? TieBreak::kUniform : TieBreak::kRelabel;
    if (mode_ == TieBreak::kUniform) {
      if (n > kBruteForceMaxPorts)
        throw SizeLimitExceeded("uniform tie-breaking needs n <= " + std::to_string(kBruteForceMaxPorts));
      table_ = detail::all_permutations(n);
    }
  }

  TieBreak mode() const { return mode_; }

  template <typename Rng>
  Schedule choose(const IntMatrix& q, Rng& rng) {
    if (mode_ == TieBreak::kRelabel) return max_weight_matching(q, rng, TieBreak::kRelabel).perm;
    std::size_t best = 0, ties = 0;
    std::int64_t best_w = std::numeric_limits<std::int64_t>::min();
    for (std::size_t k = 0; k < table_.size(); ++k) {
      const auto& p = table_[k];
      std::int64_t wgt = 0;
      for (int i = 0; i < n_; ++i) wgt += q(i, p[i]);
      if (wgt > best_w) {
        best_w = wgt;
        best = k;
        ties = 1;
      } else if (wgt == best_w) {
        ++ties;
        if (std::uniform_int_distribution<std::size_t>(0, ties - 1)(rng) == 0) best = k;
      }
    }
    return Schedule(table_[best]);
  }

 private:
  int n_;
  TieBreak mode_;
  std::vector<std::vector<int>> table_;
};

inline const char* to_string(TieBreak t) {
  switch (t) {
    case TieBreak::kUniform:
      return "uniform";
    case TieBreak::kRelabel:
      return "relabel";
    case TieBreak::kAuto:
      return "auto";
  }
  return "auto";
}

inline TieBreak parse_tie_break(const std::string& s) {
  if (s == "uniform") return TieBreak::kUniform;
  if (s == "relabel") return TieBreak::kRelabel;
  if (s == "auto") return TieBreak::kAuto;
  throw ConfigError("unknown tie_break mode '" + s + "' (expected uniform, relabel or auto)");
}

}  // namespace mwswitch
