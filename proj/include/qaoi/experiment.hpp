#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qaoi/metrics.hpp"
#include "qaoi/policy_io.hpp"

namespace qaoi {

/// One experiment panel: a (T_q, mu_b) pair swept over an erasure grid,
/// solved per objective and replayed replications times per grid point.
struct PanelSpec {
  int tq = 0;
  std::vector<double> epsilons;
  double mu_b = -1.0;
  int delta_max = 0;  // 0 means the production default 100 * tq
  int bucket = 10;
  double discount = 0.75;
  std::vector<Objective> objectives{Objective::PQ, Objective::QAPA};
  std::int64_t horizon = 200000;
  int replications = 20;
  std::uint64_t seed = 1;  // replication i runs with seed + i
  std::string rng = "mt19937_64";

  std::int64_t warmup() const { return 10 * static_cast<std::int64_t>(tq); }

  ModelParams params_for(double epsilon) const {
    ModelParams p;
    p.query_period = tq;
    p.erasure_prob = epsilon;
    p.token_rate = mu_b;
    p.max_age = delta_max > 0 ? delta_max : 100 * tq;
    p.bucket_capacity = bucket;
    p.discount = discount;
    return p;
  }

  void validate() const {
    if (tq < 1) throw ConfigError("tq must be >= 1");
    if (epsilons.empty()) throw ConfigError("epsilon grid is empty");
    if (replications < 1) throw ConfigError("replications must be >= 1");
    if (objectives.empty()) throw ConfigError("objective set is empty");
    if (rng != "mt19937_64") throw ConfigError("unsupported rng '" + rng + "'");
    if (horizon <= warmup())
      throw ConfigError("horizon must exceed the warmup of " + std::to_string(warmup()) +
                        " slots");
    for (const double eps : epsilons) params_for(eps).validate();
  }
};

namespace detail {

inline std::vector<double> parse_epsilon_grid(const std::string& text, long line) {
  std::vector<double> grid;
  for (const auto& raw : split(text, ',')) {
    const std::string token = trim(raw);
    if (token.empty()) throw ConfigError("empty entry in epsilon grid", line);
    const auto range = split(token, ':');
    if (range.size() == 1) {
      grid.push_back(parse_double(token, line));
    } else if (range.size() == 3) {
      const double from = parse_double(trim(range[0]), line);
      const double step = parse_double(trim(range[1]), line);
      const double to = parse_double(trim(range[2]), line);
      if (step <= 0.0) throw ConfigError("epsilon range step must be positive", line);
      for (double v = from; v <= to + 1e-9; v += step)
        grid.push_back(std::round(v * 1e12) / 1e12);
    } else {
      throw ConfigError("epsilon entries are numbers or from:step:to ranges", line);
    }
  }
  return grid;
}

}  // namespace detail

/// Key-value scenario file; '#' starts a comment. Recognized keys: tq,
/// epsilon, mu_b, delta_max, bucket, discount, objective, horizon,
/// replications, seed, rng. Anything else is an error.
inline PanelSpec parse_panel_config_text(const std::string& text) {
  PanelSpec spec;
  std::set<std::string> seen;
  bool have_tq = false, have_eps = false, have_mu = false;

  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (value.empty()) throw ConfigError("missing value for '" + key + "'", line_no);
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'", line_no);

    if (key == "tq") {
      spec.tq = static_cast<int>(detail::parse_int(value, line_no));
      have_tq = true;
    } else if (key == "epsilon") {
      spec.epsilons = detail::parse_epsilon_grid(value, line_no);
      have_eps = true;
    } else if (key == "mu_b") {
      spec.mu_b = detail::parse_double(value, line_no);
      have_mu = true;
    } else if (key == "delta_max") {
      spec.delta_max = static_cast<int>(detail::parse_int(value, line_no));
    } else if (key == "bucket") {
      spec.bucket = static_cast<int>(detail::parse_int(value, line_no));
    } else if (key == "discount") {
      spec.discount = detail::parse_double(value, line_no);
    } else if (key == "objective") {
      spec.objectives.clear();
      for (const auto& obj : detail::split(value, ','))
        spec.objectives.push_back(parse_objective(detail::trim(obj)));
    } else if (key == "horizon") {
      spec.horizon = detail::parse_int(value, line_no);
    } else if (key == "replications") {
      spec.replications = static_cast<int>(detail::parse_int(value, line_no));
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(detail::parse_int(value, line_no));
    } else if (key == "rng") {
      spec.rng = value;
    } else {
      throw ConfigError("unknown key '" + key + "'", line_no);
    }
  }
  if (!have_tq) throw ConfigError("missing required key 'tq'");
  if (!have_eps) throw ConfigError("missing required key 'epsilon'");
  if (!have_mu) throw ConfigError("missing required key 'mu_b'");
  spec.validate();
  return spec;
}

inline PanelSpec parse_panel_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_panel_config_text(buf.str());
}

/// Aggregates for one (epsilon, objective) grid point.
struct PointSummary {
  double epsilon = 0.0;
  Objective objective = Objective::PQ;
  double avg_aoi = 0.0, avg_qaoi = 0.0;
  double se_aoi = 0.0, se_qaoi = 0.0;  // standard error across replications
  int rounds = 0;
  double residual = 0.0;
  MetricsReport pooled;
};

struct ExperimentResult {
  std::vector<PointSummary> points;
  std::filesystem::path summary_file;
  std::filesystem::path manifest_file;
};

namespace detail {

inline std::string point_tag(const PanelSpec& spec, double eps) {
  return "tq" + std::to_string(spec.tq) + "_mub" + gshort(spec.mu_b) + "_eps" + gshort(eps);
}

inline std::string objective_suffix(Objective obj) {
  return obj == Objective::PQ ? "pq" : "qapa";
}

// Display clamp for the per-phase matrices; tail mass lands in the last bin.
inline constexpr int kPhaseAgeCap = 50;

inline void write_phase_csv(const std::filesystem::path& path, const MetricsReport& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const int cap = std::min(kPhaseAgeCap, m.max_age);
  out << "# age bins clamp at " << cap << "; mass above is aggregated into the last bin\n";
  out << "phase,age,probability\n";
  for (int sigma = 0; sigma < m.query_period; ++sigma) {
    for (int age = 1; age <= cap; ++age) {
      double prob = m.phase_pmf[sigma][age];
      if (age == cap)
        for (int tail = cap + 1; tail <= m.max_age; ++tail) prob += m.phase_pmf[sigma][tail];
      out << sigma << ',' << age << ',' << g12(prob) << '\n';
    }
  }
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

inline void write_ccdf_csv(const std::filesystem::path& path,
                           const std::vector<Objective>& objectives,
                           const std::vector<const MetricsReport*>& reports) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "age";
  for (const auto obj : objectives)
    out << ",ccdf_aoi_" << objective_suffix(obj) << ",ccdf_qaoi_" << objective_suffix(obj);
  out << '\n';
  const int max_age = reports.front()->max_age;
  for (int v = 0; v <= max_age; ++v) {
    out << v;
    for (const auto* m : reports) out << ',' << g12(m->ccdf_aoi[v]) << ',' << g12(m->ccdf_qaoi[v]);
    out << '\n';
  }
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

}  // namespace detail

/// Solve, simulate, and aggregate a whole panel, writing per-point policy,
/// first-replication trajectory, CCDF, and phase CSVs plus a panel summary
/// and a manifest tying every artifact to its parameters and seeds.
inline ExperimentResult run_experiment(const PanelSpec& spec, const std::filesystem::path& out_dir,
                                       const SolverConfig& solver_base = SolverConfig{}) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "'");

  ExperimentResult result;
  nlohmann::json manifest;
  manifest["rng"] = spec.rng;
  manifest["panel"] = {
      {"tq", spec.tq},           {"mu_b", spec.mu_b},
      {"delta_max", spec.delta_max > 0 ? spec.delta_max : 100 * spec.tq},
      {"bucket", spec.bucket},   {"discount", spec.discount},
      {"horizon", spec.horizon}, {"replications", spec.replications},
      {"seed", spec.seed},       {"warmup", spec.warmup()},
  };
  manifest["points"] = nlohmann::json::array();

  for (const double eps : spec.epsilons) {
    const ModelParams params = spec.params_for(eps);
    const std::string tag = detail::point_tag(spec, eps);
    nlohmann::json point;
    point["epsilon"] = eps;
    point["files"] = nlohmann::json::object();

    std::vector<MetricsReport> pooled_per_objective;
    for (const Objective obj : spec.objectives) {
      SolverConfig solver = solver_base;
      solver.objective = obj;
      SolveResult solved;
      try {
        solved = policy_iteration(params, solver);
      } catch (const SolverError& e) {
        throw SolverError("grid point eps=" + detail::gshort(eps) + " objective=" +
                              to_string(obj) + ": " + e.what(),
                          e.residual, e.sweeps);
      }

      const std::string suffix = detail::objective_suffix(obj);
      const auto policy_path = out_dir / ("policy_" + tag + "_" + suffix + ".csv");
      save_policy(policy_path, PolicyFile{params, obj, solved.policy, solved.value});

      std::vector<MetricsReport> reps;
      std::vector<double> rep_aoi, rep_qaoi;
      std::filesystem::path traj_path;
      for (int i = 0; i < spec.replications; ++i) {
        SimConfig sim{spec.horizon, spec.seed + static_cast<std::uint64_t>(i), spec.warmup()};
        const auto records = simulate(solved.policy, params, sim);
        if (i == 0) {
          traj_path = out_dir / ("traj_" + tag + "_" + suffix + "_rep0.csv");
          write_trajectory_csv(traj_path, records);
        }
        const auto window = std::span<const TrajectoryRecord>(records).subspan(
            static_cast<std::size_t>(sim.warmup));
        reps.push_back(compute_metrics(window, params));
        rep_aoi.push_back(reps.back().avg_aoi);
        rep_qaoi.push_back(reps.back().avg_qaoi);
      }

      PointSummary summary;
      summary.epsilon = eps;
      summary.objective = obj;
      summary.pooled = merge_reports(reps);
      summary.avg_aoi = summary.pooled.avg_aoi;
      summary.avg_qaoi = summary.pooled.avg_qaoi;
      auto standard_error = [](const std::vector<double>& xs) {
        if (xs.size() < 2) return 0.0;
        double mean = 0.0;
        for (const double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (const double x : xs) var += (x - mean) * (x - mean);
        var /= static_cast<double>(xs.size() - 1);
        return std::sqrt(var / static_cast<double>(xs.size()));
      };
      summary.se_aoi = standard_error(rep_aoi);
      summary.se_qaoi = standard_error(rep_qaoi);
      summary.rounds = solved.rounds;
      summary.residual = solved.residual;

      const auto phase_path = out_dir / ("phase_" + tag + "_" + suffix + ".csv");
      detail::write_phase_csv(phase_path, summary.pooled);

      nlohmann::json obj_entry;
      obj_entry["policy_file"] = policy_path.filename().string();
      obj_entry["trajectory_file"] = traj_path.filename().string();
      obj_entry["phase_file"] = phase_path.filename().string();
      obj_entry["solver"] = {{"rounds", summary.rounds}, {"residual", summary.residual}};
      nlohmann::json seeds = nlohmann::json::array();
      for (int i = 0; i < spec.replications; ++i)
        seeds.push_back(spec.seed + static_cast<std::uint64_t>(i));
      obj_entry["seeds"] = seeds;
      obj_entry["metrics"] = {{"avg_aoi", summary.avg_aoi},   {"avg_qaoi", summary.avg_qaoi},
                              {"se_aoi", summary.se_aoi},     {"se_qaoi", summary.se_qaoi},
                              {"slots", summary.pooled.slot_count},
                              {"queries", summary.pooled.query_count}};
      point[to_string(obj)] = obj_entry;

      pooled_per_objective.push_back(summary.pooled);
      result.points.push_back(std::move(summary));
    }

    const auto ccdf_path = out_dir / ("ccdf_" + tag + ".csv");
    std::vector<const MetricsReport*> views;
    for (const auto& m : pooled_per_objective) views.push_back(&m);
    detail::write_ccdf_csv(ccdf_path, spec.objectives, views);
    point["files"]["ccdf"] = ccdf_path.filename().string();
    manifest["points"].push_back(std::move(point));
  }

  result.summary_file = out_dir / "summary.csv";
  {
    std::ofstream out(result.summary_file);
    if (!out) throw IoError("cannot open '" + result.summary_file.string() + "' for writing");
    out << "epsilon,tq,mu_b,policy,avg_aoi,avg_qaoi\n";
    for (const auto& pt : result.points)
      out << detail::gshort(pt.epsilon) << ',' << spec.tq << ',' << detail::gshort(spec.mu_b)
          << ',' << to_string(pt.objective) << ',' << detail::g12(pt.avg_aoi) << ','
          << detail::g12(pt.avg_qaoi) << '\n';
    if (!out) throw IoError("failed while writing '" + result.summary_file.string() + "'");
  }
  manifest["summary_file"] = result.summary_file.filename().string();

  result.manifest_file = out_dir / "manifest.json";
  {
    std::ofstream out(result.manifest_file);
    if (!out) throw IoError("cannot open '" + result.manifest_file.string() + "' for writing");
    out << manifest.dump(2) << '\n';
    if (!out) throw IoError("failed while writing '" + result.manifest_file.string() + "'");
  }
  return result;
}

/// Replay a saved policy; optional panel config cross-checks the scenario.
inline std::vector<TrajectoryRecord> replay(const PolicyFile& file, const SimConfig& sim,
                                            const PanelSpec* cross_check = nullptr) {
  if (cross_check) {
    const auto& p = file.params;
    if (cross_check->tq != p.query_period)
      throw ConfigError("policy file tq " + std::to_string(p.query_period) +
                        " does not match config tq " + std::to_string(cross_check->tq));
    const ModelParams expect = cross_check->params_for(p.erasure_prob);
    if (expect.max_age != p.max_age || expect.bucket_capacity != p.bucket_capacity ||
        expect.token_rate != p.token_rate || expect.discount != p.discount)
      throw ConfigError("policy file parameters do not match the config");
    bool eps_in_grid = false;
    for (const double eps : cross_check->epsilons) eps_in_grid |= eps == p.erasure_prob;
    if (!eps_in_grid) throw ConfigError("policy file epsilon is not in the config grid");
  }
  return simulate(file.policy, file.params, sim);
}

/// Small fixed scenario in the spirit of the toy example: queries every 7th
/// slot and roughly one transmission budgeted per 3 slots. Writes one
/// trajectory CSV per objective, nothing else.
inline std::vector<std::filesystem::path> demo_fig1(const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "'");

  ModelParams p = ModelParams::defaults(7, 0.3, 1.0 / 3.0);
  std::vector<std::filesystem::path> written;
  for (const Objective obj : {Objective::PQ, Objective::QAPA}) {
    SolverConfig cfg;
    cfg.objective = obj;
    const auto solved = policy_iteration(p, cfg);
    const auto records = simulate(solved.policy, p, SimConfig{140, 7, 0});
    const auto path =
        out_dir / ("traj_fig1_" + detail::objective_suffix(obj) + ".csv");
    write_trajectory_csv(path, records);
    written.push_back(path);
  }
  return written;
}

}  // namespace qaoi
