// Command-line front end: simulate, sweep, bounds, project, match.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 invariant
// violation (or other failure) detected while running.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mwswitch/io.hpp"
#include "mwswitch/mwswitch.hpp"

namespace fs = std::filesystem;
using namespace mwswitch;
using io::json;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("not a number in list: '" + tok + "'");
    }
  }
  return out;
}

json bounds_document(const TrafficModel& model, const std::vector<int>& rs) {
  const ValidationReport v = validate_traffic(model);
  json doc = {{"validation", io::to_json(v)}, {"universal_lower_bound", io::num(universal_lower_bound(model))}};
  json brackets = json::array(), ssc = json::array();
  for (int r : rs) {
    json b = io::to_json(theorem1_bracket(model, r));
    if (model.is_bernoulli() && (model.nu().array() == 1.0 / model.n()).all())
      b["bernoulli"] = io::to_json(bernoulli_bracket(model.n(), model.epsilon(), r));
    brackets.push_back(b);
  }
  for (int r = 1; r <= 4; ++r) {
    const FlaggedValue m = ssc_moment_constant(r, model);
    ssc.push_back({{"r", r}, {"M_r", io::num(m.value)}, {"applicable", m.applicable}});
  }
  doc["brackets"] = brackets;
  doc["ssc_constants"] = ssc;
  if (v.positive_rates) {
    const DriftParams p = ssc_drift_params(model);
    doc["ssc_drift"] = {{"kappa", io::num(p.kappa)}, {"eta", io::num(p.eta)}, {"D", io::num(p.D)}};
  }
  return doc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MaxWeight input-queued switch simulator and heavy-traffic bound calculator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", eps_csv, r_csv = "2", matrix_path, tie = "auto";
  std::uint64_t seed = 0;
  bool have_seed = false;
  std::vector<double> bern;
  std::vector<double> scaling;
  int threads = -1;

  auto* sim = app.add_subcommand("simulate", "steady-state estimate for one configuration");
  sim->add_option("--config", config_path, "configuration JSON")->required();
  auto* seed_opt = sim->add_option("--seed", seed, "override the configuration seed");
  sim->add_option("--out", out_dir, "directory for results.json");
  sim->add_option("--threads", threads, "worker threads (0 = all cores)");

  auto* sweep = app.add_subcommand("sweep", "heavy-traffic sweep over epsilon");
  sweep->add_option("--config", config_path, "configuration JSON (bernoulli arrivals)")->required();
  sweep->add_option("--eps", eps_csv, "strictly decreasing comma-separated epsilons")->required();
  auto* sweep_seed = sweep->add_option("--seed", seed, "override the configuration seed");
  sweep->add_option("--out", out_dir, "directory for sweep.csv and sweep.json");
  sweep->add_option("--r", r_csv, "moment order used for the bracket");
  sweep->add_option("--threads", threads, "worker threads (0 = all cores)");

  auto* bounds = app.add_subcommand("bounds", "evaluate the analytic bounds");
  auto* bcfg = bounds->add_option("--config", config_path, "model JSON");
  auto* bopt = bounds->add_option("--bernoulli", bern, "uniform Bernoulli traffic: N EPSILON")->expected(2);
  bcfg->excludes(bopt);
  bounds->add_option("--r", r_csv, "comma-separated moment orders (>= 2)");
  bounds->add_option("--scaling", scaling, "also evaluate the n-scaling bracket: BETA GAMMA")->expected(2);

  auto* project = app.add_subcommand("project", "project a matrix onto the cone K");
  project->add_option("file", matrix_path, "matrix file (JSON or whitespace text)")->required();

  auto* match = app.add_subcommand("match", "maximum-weight perfect matching with duals");
  match->add_option("file", matrix_path, "matrix file (JSON or whitespace text)")->required();
  match->add_option("--seed", seed, "tie-break seed");
  match->add_option("--tie-break", tie, "uniform | relabel | auto");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  have_seed = (seed_opt->count() + sweep_seed->count()) > 0;

  try {
    std::vector<int> rs;
    for (double r : parse_list(r_csv)) rs.push_back(static_cast<int>(r));

    if (*sim) {
      SimConfig cfg = io::parse_sim_config(io::load_json_file(config_path));
      if (have_seed) cfg.seed = seed;
      if (threads >= 0) cfg.threads = threads;
      const SimEstimate est = run_steady_state(cfg);
      json doc = {{"config", config_path}, {"seed", cfg.seed}, {"estimate", io::to_json(est)}};
      doc["validation"] = io::to_json(validate_traffic(cfg.model));
      doc["universal_lower_bound"] = io::num(universal_lower_bound(cfg.model));
      if (est.ssc) doc["ssc_moment_check"] = io::to_json(ssc_moment_check(est, cfg.model));
      const std::string text = doc.dump(2) + "\n";
      write_file(fs::path(out_dir) / "results.json", text);
      std::cout << text;
      for (const auto& c : est.gg1)
        if (c.violations) return 2;
      return 0;
    }
    if (*sweep) {
      SimConfig cfg = io::parse_sim_config(io::load_json_file(config_path));
      if (have_seed) cfg.seed = seed;
      if (threads >= 0) cfg.threads = threads;
      const std::vector<double> eps = parse_list(eps_csv);
      const auto rows = heavy_traffic_sweep(cfg, eps, rs.empty() ? 2 : rs.front());
      std::ostringstream csv;
      io::write_sweep_csv(csv, rows);
      json arr = json::array();
      for (const auto& r : rows) arr.push_back(io::to_json(r));
      write_file(fs::path(out_dir) / "sweep.csv", csv.str());
      write_file(fs::path(out_dir) / "sweep.json", json{{"rows", arr}}.dump(2) + "\n");
      std::cout << csv.str();
      return 0;
    }
    if (*bounds) {
      json doc;
      if (!bern.empty()) {
        if (bern[0] != static_cast<int>(bern[0])) throw ConfigError("--bernoulli N must be an integer");
        doc = bounds_document(TrafficModel::uniform_bernoulli(static_cast<int>(bern[0]), bern[1]), rs);
      } else if (!config_path.empty()) {
        doc = bounds_document(io::parse_model(io::load_json_file(config_path)), rs);
      } else {
        throw ConfigError("bounds needs --config or --bernoulli");
      }
      if (!scaling.empty()) {
        const int n = doc["validation"]["n"].get<int>();
        json sc = json::array();
        for (int r : rs) sc.push_back(io::to_json(scaling_regime_bracket(n, scaling[0], scaling[1], r)));
        doc["scaling_regime"] = sc;
      }
      std::cout << doc.dump(2) << "\n";
      return 0;
    }
    if (*project) {
      const RealMatrix x = io::read_matrix_file(matrix_path);
      std::cout << io::to_json(project_onto_cone(x), x).dump(2) << "\n";
      return 0;
    }
    if (*match) {
      const RealMatrix q = io::read_matrix_file(matrix_path);
      std::mt19937_64 rng(seed);
      const auto result = max_weight_matching(q, rng, parse_tie_break(tie));
      std::cout << io::to_json(result).dump(2) << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
