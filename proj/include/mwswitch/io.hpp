#pragma once

// JSON configuration documents, matrix input files, and the JSON/CSV result
// formats. Floats are written with 12 significant digits; non-finite values
// become JSON null.

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mwswitch/bounds.hpp"
#include "mwswitch/core_model.hpp"
#include "mwswitch/errors.hpp"
#include "mwswitch/geometry.hpp"
#include "mwswitch/matching.hpp"
#include "mwswitch/sim_harness.hpp"

namespace mwswitch::io {

using nlohmann::json;

inline std::string format_g12(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// A JSON number carrying at most 12 significant digits, or null.
inline json num(double x) {
  if (!std::isfinite(x)) return nullptr;
  return std::stod(format_g12(x)) + 0.0;  // folds -0 into 0
}

inline json num(const RealVector& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(num(v(k)));
  return a;
}

inline json num(const RealMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(num(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

namespace detail {

inline RealMatrix matrix_from_json(const json& j, int n_hint) {
  if (!j.is_array() || j.empty()) throw ConfigError("matrix must be a non-empty array");
  if (j.front().is_array()) {
    const int n = static_cast<int>(j.size());
    RealMatrix m(n, n);
    for (int i = 0; i < n; ++i) {
      if (!j[i].is_array() || static_cast<int>(j[i].size()) != n) throw ConfigError("matrix must be square");
      for (int k = 0; k < n; ++k) {
        if (!j[i][k].is_number()) throw ConfigError("matrix entries must be numbers");
        m(i, k) = j[i][k].get<double>();
      }
    }
    return m;
  }
  const auto size = j.size();
  int n = n_hint;
  if (n <= 0) n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(size))));
  if (static_cast<std::size_t>(n) * static_cast<std::size_t>(n) != size)
    throw ConfigError("row-major matrix needs n*n = " + std::to_string(n * n) + " entries, got " + std::to_string(size));
  RealMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const auto& e = j[static_cast<std::size_t>(i * n + k)];
      if (!e.is_number()) throw ConfigError("matrix entries must be numbers");
      m(i, k) = e.get<double>();
    }
  return m;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// TrafficModel from {n, epsilon, nu, arrivals}.
inline TrafficModel parse_model(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  if (!j.contains("n") || !j.contains("epsilon")) throw ConfigError("configuration needs 'n' and 'epsilon'");
  const int n = detail::get_or<int>(j, "n", 0);
  const double eps = detail::get_or<double>(j, "epsilon", 0.0);
  if (n < 2) throw ConfigError("n must be at least 2");

  RealMatrix nu;
  const json nu_j = j.value("nu", json("uniform"));
  if (nu_j.is_string()) {
    if (nu_j.get<std::string>() != "uniform") throw ConfigError("nu must be \"uniform\" or an array");
    nu = RealMatrix::Constant(n, n, 1.0 / n);
  } else {
    nu = detail::matrix_from_json(nu_j, n);
    if (nu.rows() != n) throw ConfigError("nu does not match n");
  }

  const json arr = j.value("arrivals", json("bernoulli"));
  if (arr.is_string()) {
    if (arr.get<std::string>() != "bernoulli") throw ConfigError("arrivals must be \"bernoulli\" or {\"pmf\": ...}");
    return TrafficModel::bernoulli(nu, eps);
  }
  if (!arr.is_object() || !arr.contains("pmf")) throw ConfigError("arrivals must be \"bernoulli\" or {\"pmf\": ...}");
  const json& p = arr.at("pmf");
  std::vector<std::vector<double>> pmfs;
  try {
    if (p.is_array() && !p.empty() && p.front().is_number()) {
      pmfs.push_back(p.get<std::vector<double>>());
    } else {
      pmfs = p.get<std::vector<std::vector<double>>>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("arrivals.pmf: ") + e.what());
  }
  return TrafficModel::from_pmfs(nu, eps, std::move(pmfs));
}

/// SimConfig from the model fields plus simulation fields.
inline SimConfig parse_sim_config(const json& j) {
  SimConfig cfg(parse_model(j));
  using detail::get_or;
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  if (j.contains("warmup_slots")) {
    const auto w = get_or<std::int64_t>(j, "warmup_slots", 0);
    if (w < 0) throw ConfigError("warmup_slots must be >= 0");
    cfg.warmup_slots = static_cast<std::uint64_t>(w);
  }
  const auto samples = get_or<std::int64_t>(j, "sample_slots", static_cast<std::int64_t>(cfg.sample_slots));
  if (samples < 0) throw ConfigError("sample_slots must be >= 0");
  cfg.sample_slots = static_cast<std::uint64_t>(samples);
  cfg.replications = get_or<int>(j, "replications", cfg.replications);
  cfg.threads = get_or<int>(j, "threads", cfg.threads);
  cfg.tie_break = parse_tie_break(get_or<std::string>(j, "tie_break", "auto"));
  if (j.contains("diagnostics")) {
    const json& d = j.at("diagnostics");
    if (!d.is_object()) throw ConfigError("diagnostics must be an object");
    cfg.diagnostics.ssc = get_or<bool>(d, "ssc", false);
    cfg.diagnostics.lyapunov_drift = get_or<bool>(d, "lyapunov_drift", false);
    cfg.diagnostics.gg1_coupling = get_or<bool>(d, "gg1_coupling", false);
    cfg.diagnostics.every = get_or<int>(d, "every", cfg.diagnostics.every);
    cfg.diagnostics.ssc_r = get_or<std::vector<int>>(d, "ssc_r", cfg.diagnostics.ssc_r);
  }
  validate_config(cfg);
  return cfg;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Square matrix from JSON (nested rows, row-major flat, or {"matrix": ...})
/// or from whitespace-delimited text with one row per line.
inline RealMatrix parse_matrix_text(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw ConfigError("empty matrix input");
  if (text[first] == '[' || text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("matrix JSON: ") + e.what());
    }
    if (j.is_object()) {
      if (!j.contains("matrix")) throw ConfigError("matrix JSON object needs a 'matrix' field");
      return detail::matrix_from_json(j.at("matrix"), j.value("n", 0));
    }
    return detail::matrix_from_json(j, 0);
  }
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::vector<double> row;
    std::string tok;
    while (cells >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("not a number: '" + tok + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  const int n = static_cast<int>(rows.size());
  RealMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n) throw ConfigError("matrix must be square");
    for (int k = 0; k < n; ++k) m(i, k) = rows[i][k];
  }
  return m;
}

inline RealMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_matrix_text(ss.str());
}

inline json to_json(const ValidationReport& v) {
  return {{"n", v.n},
          {"epsilon", num(v.epsilon)},
          {"load", num(v.load)},
          {"nu_min", num(v.nu_min)},
          {"nu_norm", num(v.nu_norm)},
          {"lambda_norm2", num(v.lambda_norm2)},
          {"sigma_norm2", num(v.sigma_norm2)},
          {"a_max", v.a_max},
          {"ssc_threshold", num(v.ssc_threshold)},
          {"positive_rates", v.positive_rates},
          {"ssc_applicable", v.ssc_applicable}};
}

inline json to_json(const BoundReport& b) {
  json terms = json::object();
  for (const auto& [k, v] : b.terms) terms[k] = num(v);
  return {{"lower", num(b.lower)}, {"upper", num(b.upper)},     {"terms", terms},
          {"applicable", b.applicable}, {"overflow", b.overflow}, {"warnings", b.warnings}};
}

inline json to_json(const ConeDecomposition& d, const RealMatrix& x) {
  return {{"q_para", num(d.q_para)},
          {"q_perp", num(d.q_perp)},
          {"w", num(d.w)},
          {"w_tilde", num(d.w_tilde)},
          {"kkt_residual", num(d.kkt_residual)},
          {"iterations", d.iterations},
          {"norms", {{"q", num(x.norm())}, {"q_para", num(d.q_para.norm())}, {"q_perp", num(d.q_perp.norm())}}}};
}

template <typename Scalar>
json to_json(const MatchingResult<Scalar>& r) {
  return {{"perm", r.perm.perm()},
          {"weight", num(static_cast<double>(r.weight))},
          {"w", num(r.w)},
          {"w_tilde", num(r.w_tilde)}};
}

inline json to_json(const SimEstimate& e) {
  json reps = json::array();
  for (double m : e.replication_means) reps.push_back(num(m));
  json out = {{"n", e.n},
              {"epsilon", num(e.epsilon)},
              {"mean_total_queue", num(e.mean_total_queue)},
              {"ci_halfwidth", num(e.ci_halfwidth)},
              {"scaled_mean", num(e.scaled_mean)},
              {"replication_means", reps},
              {"warmup_slots", e.warmup_slots},
              {"slots_simulated", e.slots_simulated}};
  if (e.ssc) {
    json moments = json::object();
    for (const auto& [r, m] : e.ssc->perp_moments) moments[std::to_string(r)] = num(m);
    out["ssc"] = {{"mean_norm_qperp", num(e.ssc->mean_norm_qperp)},
                  {"ci_norm_qperp", num(e.ssc->ci_norm_qperp)},
                  {"mean_norm_qpara", num(e.ssc->mean_norm_qpara)},
                  {"ratio", num(e.ssc->ratio)},
                  {"perp_moments", moments},
                  {"samples", e.ssc->samples}};
  }
  if (!e.drift_checks.empty()) {
    json d = json::object();
    for (const auto& [k, s] : e.drift_checks)
      d[k] = {{"mean", num(s.mean)}, {"ci", num(s.ci)}, {"samples", s.samples}, {"zero_within_3ci", s.zero_within_3ci}};
    out["drift_checks"] = d;
  }
  if (!e.gg1.empty()) {
    json g = json::array();
    for (const auto& c : e.gg1)
      g.push_back({{"axis", to_string(c.axis)},
                   {"index", c.index},
                   {"phi_mean", num(c.phi_mean)},
                   {"phi_ci", num(c.phi_ci)},
                   {"upsilon_mean", num(c.upsilon_mean)},
                   {"queue_mean", num(c.queue_mean)},
                   {"analytic_mean", num(c.analytic_mean)},
                   {"violations", c.violations}});
    out["gg1"] = g;
  }
  return out;
}

inline json to_json(const std::vector<SscMomentCheck>& checks) {
  json a = json::array();
  for (const auto& c : checks)
    a.push_back({{"r", c.r},
                 {"empirical", num(c.empirical)},
                 {"bound", num(c.bound)},
                 {"applicable", c.applicable},
                 {"holds", c.holds}});
  return a;
}

inline json to_json(const SweepRow& r) {
  return {{"eps", num(r.eps)},
          {"mean", num(r.mean)},
          {"ci", num(r.ci)},
          {"scaled_mean", num(r.scaled_mean)},
          {"ulb", num(r.ulb)},
          {"thm_lb", num(r.thm_lb)},
          {"thm_ub", num(r.thm_ub)},
          {"ssc_ratio", num(r.ssc_ratio)},
          {"theorem_applicable", r.theorem_applicable},
          {"estimate", to_json(r.estimate)}};
}

inline constexpr const char* kSweepCsvHeader = "eps,mean,ci,scaled_mean,ulb,thm_lb,thm_ub,ssc_ratio";

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows)
    out << format_g12(r.eps) << ',' << format_g12(r.mean) << ',' << format_g12(r.ci) << ','
        << format_g12(r.scaled_mean) << ',' << format_g12(r.ulb) << ',' << format_g12(r.thm_lb) << ','
        << format_g12(r.thm_ub) << ',' << format_g12(r.ssc_ratio) << '\n';
}

}  // namespace mwswitch::io
