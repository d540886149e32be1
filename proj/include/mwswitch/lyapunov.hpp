#pragma once

#include <cmath>

#include "mwswitch/core_model.hpp"
#include "mwswitch/geometry.hpp"

namespace mwswitch {

/// Quadratic Lyapunov functions of a queue state.
struct LyapunovValues {
  double V = 0.0;      // ||q||^2
  double V1 = 0.0;     // sum_i (row sum)^2
  double V2 = 0.0;     // sum_j (column sum)^2
  double V3 = 0.0;     // (total)^2
  double V4 = 0.0;     // V1 + V2 - V3 / n
  double W = 0.0;      // ||q||
  double Wperp = 0.0;  // ||q_perp||
  double Vpara = 0.0;  // ||q_para||^2
  double Vperp = 0.0;  // ||q_perp||^2
};

/// The values that need no projection. Exact in integer arithmetic up to the final conversion.
inline LyapunovValues quadratic_values(const IntMatrix& q) {
  LyapunovValues v;
  const auto n = q.rows();
  std::int64_t total = 0, sq = 0, v1 = 0, v2 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::int64_t row = 0, col = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      row += q(i, j);
      col += q(j, i);
      sq += q(i, j) * q(i, j);
    }
    v1 += row * row;
    v2 += col * col;
    total += row;
  }
  v.V = static_cast<double>(sq);
  v.V1 = static_cast<double>(v1);
  v.V2 = static_cast<double>(v2);
  v.V3 = static_cast<double>(total) * static_cast<double>(total);
  v.V4 = v.V1 + v.V2 - v.V3 / static_cast<double>(n);
  v.W = std::sqrt(v.V);
  return v;
}

inline LyapunovValues lyapunov_values(const QueueMatrix& q, const ConeDecomposition& decomp) {
  LyapunovValues v = quadratic_values(q.values());
  v.Vpara = decomp.q_para.squaredNorm();
  v.Vperp = decomp.q_perp.squaredNorm();
  v.Wperp = std::sqrt(v.Vperp);
  return v;
}

inline LyapunovValues lyapunov_values(const QueueMatrix& q) {
  return lyapunov_values(q, project_onto_cone(q.as_real()));
}

}  // namespace mwswitch
