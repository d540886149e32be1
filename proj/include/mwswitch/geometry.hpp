#pragma once

// The cone K = { x : x_ij = w_i + w_tilde_j, w, w_tilde >= 0 } generated by the
// row indicators e(i) and column indicators e~(j), its linear span V_K, and a
// certified projection onto K.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mwswitch/core_model.hpp"
#include "mwswitch/errors.hpp"

namespace mwswitch {

inline constexpr double kKktTolerance = 1e-8;

struct ConeDecomposition {
  RealMatrix q_para;  // in K
  RealMatrix q_perp;  // in the polar cone
  RealVector w;
  RealVector w_tilde;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// x_ij = w_i + w_tilde_j.
inline RealMatrix cone_point(const RealVector& w, const RealVector& w_tilde) {
  return w.replicate(1, w_tilde.size()) + w_tilde.transpose().replicate(w.size(), 1);
}

/// Orthogonal projection onto V_K: x_ij -> rowavg_i + colavg_j - totalavg.
inline RealMatrix project_onto_subspace(const RealMatrix& x) {
  const double n = static_cast<double>(x.rows());
  const RealVector row_avg = x.rowwise().sum() / n;
  const RealVector col_avg = x.colwise().sum().transpose() / n;
  const double total_avg = x.sum() / (n * n);
  return cone_point(row_avg, col_avg).array() - total_avg;
}

/// max_ij |x_ij - (rowavg_i + colavg_j - totalavg)|; zero exactly on V_K.
inline double lemma1_residual(const RealMatrix& x) {
  return (x - project_onto_subspace(x)).cwiseAbs().maxCoeff();
}

/// Certificate violations for a candidate (w, w_tilde) >= 0 as the projection of x.
struct KktReport {
  double polar = 0.0;          // max(0, <q_perp, e(i)>, <q_perp, e~(j)>)
  double orthogonality = 0.0;  // |<q_para, q_perp>| / (1 + ||x||^2)
  double pythagoras = 0.0;     // | ||x||^2 - ||q_para||^2 - ||q_perp||^2 | / ||x||^2
  double primal = 0.0;         // max(0, -min w, -min w_tilde)

  double max() const { return std::max({polar, orthogonality, pythagoras, primal}); }
};

inline KktReport kkt_report(const RealMatrix& x, const RealMatrix& q_para, const RealVector& w,
                            const RealVector& w_tilde) {
  const RealMatrix q_perp = x - q_para;
  KktReport k;
  k.polar = std::max({0.0, q_perp.rowwise().sum().maxCoeff(), q_perp.colwise().sum().maxCoeff()});
  const double x2 = x.squaredNorm();
  k.orthogonality = std::abs(q_para.cwiseProduct(q_perp).sum()) / (1.0 + x2);
  if (x2 > 0.0) k.pythagoras = std::abs(x2 - q_para.squaredNorm() - q_perp.squaredNorm()) / x2;
  k.primal = std::max({0.0, -w.minCoeff(), -w_tilde.minCoeff()});
  return k;
}

struct ConeProjectionOptions {
  double tolerance = kKktTolerance;
  int max_iterations = 100000;
  /// Attempt a support-restricted exact least-squares solve every this many iterations.
  int polish_every = 10;
};

namespace detail {

// Least squares on the support `free` (indices < n are rows, >= n are columns),
// other coordinates fixed at zero. Returns nothing if the solution leaves the
// nonnegative orthant.
inline std::optional<RealVector> solve_on_support(const RealMatrix& x, const std::vector<int>& free) {
  const int n = static_cast<int>(x.rows());
  const int m = static_cast<int>(free.size());
  if (m == 0) return RealVector::Zero(2 * n);
  const RealVector row_sum = x.rowwise().sum();
  const RealVector col_sum = x.colwise().sum().transpose();
  RealMatrix normal(m, m);
  RealVector rhs(m);
  for (int a = 0; a < m; ++a) {
    const bool a_row = free[a] < n;
    rhs(a) = a_row ? row_sum(free[a]) : col_sum(free[a] - n);
    for (int b = 0; b < m; ++b) {
      const bool b_row = free[b] < n;
      normal(a, b) = (a_row == b_row) ? (a == b ? n : 0.0) : 1.0;
    }
  }
  const RealVector sol = normal.completeOrthogonalDecomposition().solve(rhs);
  RealVector z = RealVector::Zero(2 * n);
  for (int a = 0; a < m; ++a) z(free[a]) = sol(a);

  // With every row and column free the representation is only unique up to
  // w + c, w_tilde - c; pick the shift that makes min(w) = 0.
  if (m == 2 * n) {
    const double c = z.head(n).minCoeff();
    z.head(n).array() -= c;
    z.tail(n).array() += c;
  }
  const double scale = 1.0 + x.cwiseAbs().maxCoeff();
  if (z.minCoeff() < -1e-12 * scale) return std::nullopt;
  return z.cwiseMax(0.0);
}

inline void canonicalize(RealVector& w, RealVector& w_tilde) {
  const double c = w.minCoeff();
  if (c > 0.0) {
    w.array() -= c;
    w_tilde.array() += c;
  }
}

}  // namespace detail

/// Euclidean projection of x onto K with a KKT certificate.
///
/// Accelerated projected gradient on (w, w_tilde) >= 0 minimizing
/// 0.5 * ||x - (w (+) w_tilde)||^2 with step 1/(2n), the inverse Lipschitz
/// constant of this objective. Every few iterations the support of the
/// iterate is used for an exact least-squares solve, which is accepted once
/// its certificate is within tolerance.
inline ConeDecomposition project_onto_cone(const RealMatrix& x, const ConeProjectionOptions& opt = {}) {
  if (x.rows() != x.cols() || x.rows() < 1) throw std::invalid_argument("project_onto_cone: matrix must be square");
  if (!x.allFinite()) throw std::invalid_argument("project_onto_cone: non-finite input");
  const int n = static_cast<int>(x.rows());
  const double step = 1.0 / (2.0 * n);

  auto gradient = [&](const RealVector& z, RealVector& g) {
    const RealMatrix r = x - cone_point(z.head(n), z.tail(n));
    g.head(n) = -r.rowwise().sum();
    g.tail(n) = -r.colwise().sum().transpose();
    return 0.5 * r.squaredNorm();
  };

  auto finish = [&](RealVector z, int iterations) -> std::optional<ConeDecomposition> {
    RealVector w = z.head(n), wt = z.tail(n);
    detail::canonicalize(w, wt);
    ConeDecomposition d;
    d.q_para = cone_point(w, wt);
    d.kkt_residual = kkt_report(x, d.q_para, w, wt).max();
    if (!(d.kkt_residual <= opt.tolerance)) return std::nullopt;
    d.q_perp = x - d.q_para;
    d.w = std::move(w);
    d.w_tilde = std::move(wt);
    d.iterations = iterations;
    return d;
  };

  auto polish = [&](const RealVector& z, const RealVector& g, int iterations) -> std::optional<ConeDecomposition> {
    std::vector<int> free;
    for (int k = 0; k < 2 * n; ++k)
      if (z(k) > 0.0 || g(k) < 0.0) free.push_back(k);
    auto exact = detail::solve_on_support(x, free);
    if (!exact) return std::nullopt;
    return finish(*exact, iterations);
  };

  RealVector z = RealVector::Zero(2 * n), y = z, g(2 * n), z_next(2 * n);
  double t = 1.0;
  double f_z = gradient(z, g);
  if (auto d = polish(z, g, 0)) return *d;

  for (int it = 1; it <= opt.max_iterations; ++it) {
    gradient(y, g);
    z_next = (y - step * g).cwiseMax(0.0);
    const double f_next = gradient(z_next, g);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (f_next > f_z) {
      // Adaptive restart: drop momentum when the objective goes up.
      t = 1.0;
      y = z_next;
    } else {
      y = z_next + ((t - 1.0) / t_next) * (z_next - z);
      t = t_next;
    }
    z = z_next;
    f_z = f_next;
    if (it % opt.polish_every == 0) {
      if (auto d = polish(z, g, it)) return *d;
      if (auto d = finish(z, it)) return *d;
    }
  }
  throw ConvergenceFailure("cone projection did not reach KKT residual " + std::to_string(opt.tolerance) +
                           " within " + std::to_string(opt.max_iterations) + " iterations");
}

/// True iff ||x - proj_K(x)|| <= tol.
inline bool cone_membership(const RealMatrix& x, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("cone_membership: tol must be positive");
  return project_onto_cone(x).q_perp.norm() <= tol;
}

/// Inner products with the 2n generators: first the n row indicators, then the n column indicators.
inline RealVector generator_inner_products(const RealMatrix& x) {
  const auto n = x.rows();
  RealVector out(2 * n);
  out.head(n) = x.rowwise().sum();
  out.tail(n) = x.colwise().sum().transpose();
  return out;
}

}  // namespace mwswitch
