// Command-line driver: solve policies, replay them, and run experiment
// sweeps that emit the CSV artifacts (trajectories, CCDFs, phase matrices,
// summaries) plus a manifest per panel.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qaoi/experiment.hpp"

namespace {

int run_solve(int tq, double epsilon, double mu_b, int delta_max, int bucket, double discount,
              const std::string& objective, const std::string& out,
              const qaoi::SolverConfig& base) {
  qaoi::ModelParams p;
  p.query_period = tq;
  p.erasure_prob = epsilon;
  p.token_rate = mu_b;
  p.max_age = delta_max > 0 ? delta_max : 100 * tq;
  p.bucket_capacity = bucket;
  p.discount = discount;
  p.validate();

  qaoi::SolverConfig cfg = base;
  cfg.objective = qaoi::parse_objective(objective);
  const auto solved = qaoi::policy_iteration(p, cfg);
  qaoi::save_policy(out, qaoi::PolicyFile{p, cfg.objective, solved.policy, solved.value});
  std::printf("solved %s over %lld states in %d rounds (residual %.3e) -> %s\n",
              qaoi::to_string(cfg.objective), static_cast<long long>(qaoi::state_count(p)),
              solved.rounds, solved.residual, out.c_str());
  return 0;
}

int run_simulate(const std::string& policy_path, const std::string& config_path,
                 std::optional<std::int64_t> horizon, std::optional<std::uint64_t> seed,
                 std::optional<std::int64_t> warmup, const std::string& out) {
  const auto file = qaoi::load_policy(policy_path);

  std::optional<qaoi::PanelSpec> panel;
  if (!config_path.empty()) panel = qaoi::parse_panel_config(config_path);

  qaoi::SimConfig sim;
  sim.horizon = horizon ? *horizon : (panel ? panel->horizon : 0);
  if (sim.horizon < 1)
    throw qaoi::ConfigError("simulate needs --horizon (or a --config that provides one)");
  sim.seed = seed ? *seed : (panel ? panel->seed : 1);
  sim.warmup = warmup ? *warmup
                      : (panel ? panel->warmup()
                               : 10 * static_cast<std::int64_t>(file.params.query_period));

  const auto records = qaoi::replay(file, sim, panel ? &*panel : nullptr);
  qaoi::write_trajectory_csv(out, records);
  std::printf("replayed %lld slots of %s (seed %llu) -> %s\n",
              static_cast<long long>(sim.horizon), qaoi::to_string(file.objective),
              static_cast<unsigned long long>(sim.seed), out.c_str());
  return 0;
}

int run_experiments(const std::vector<std::string>& configs, const std::string& out) {
  std::vector<std::pair<qaoi::PanelSpec, std::filesystem::path>> panels;
  for (const auto& path : configs) {
    auto spec = qaoi::parse_panel_config(path);
    auto dir = configs.size() == 1
                   ? std::filesystem::path(out)
                   : std::filesystem::path(out) / std::filesystem::path(path).stem();
    for (const auto& [other, existing] : panels)
      if (existing == dir) throw qaoi::ConfigError("config files map to the same output dir");
    panels.emplace_back(std::move(spec), std::move(dir));
  }
  for (const auto& [spec, dir] : panels) {
    const auto result = qaoi::run_experiment(spec, dir);
    std::printf("panel tq=%d mu_b=%g: %zu grid points -> %s\n", spec.tq, spec.mu_b,
                result.points.size(), dir.string().c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query-aware age-of-information policies: solve, replay, sweep"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "Solve one scenario and write the policy CSV");
  int tq = 0, delta_max = 0, bucket = 10;
  double epsilon = 0.0, mu_b = 0.0, discount = 0.75;
  std::string objective, solve_out;
  qaoi::SolverConfig solver_base;
  solve->add_option("--tq", tq, "Query period in slots")->required();
  solve->add_option("--epsilon", epsilon, "Erasure probability")->required();
  solve->add_option("--mu-b", mu_b, "Token generation probability")->required();
  solve->add_option("--delta-max", delta_max, "Age clamp (default 100*tq)");
  solve->add_option("--bucket", bucket, "Token bucket capacity");
  solve->add_option("--discount", discount, "Discount factor");
  solve->add_option("--objective", objective, "PQ or QAPA")->required();
  solve->add_option("--out", solve_out, "Policy CSV path")->required();
  solve->add_option("--tol", solver_base.eval_tolerance, "Evaluation tolerance");
  solve->add_option("--max-sweeps", solver_base.max_eval_sweeps, "Evaluation sweep budget");
  solve->add_option("--max-rounds", solver_base.max_improvement_rounds, "Improvement budget");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Replay a policy file into a trajectory CSV");
  std::string policy_path, sim_config, sim_out;
  std::int64_t horizon_flag = 0, warmup_flag = 0;
  std::uint64_t seed_flag = 0;
  auto* horizon_opt = simulate->add_option("--horizon", horizon_flag, "Slots to simulate");
  auto* seed_opt = simulate->add_option("--seed", seed_flag, "RNG seed");
  auto* warmup_opt = simulate->add_option("--warmup", warmup_flag, "Warmup slots (metrics only)");
  simulate->add_option("--policy", policy_path, "Policy CSV from solve/experiment")->required();
  simulate->add_option("--config", sim_config, "Panel config to cross-check and take defaults");
  simulate->add_option("--out", sim_out, "Trajectory CSV path")->required();

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run a config-driven sweep");
  std::vector<std::string> exp_configs;
  std::string exp_out;
  experiment->add_option("--config", exp_configs, "Panel config file(s)")->required();
  experiment->add_option("--out", exp_out, "Output directory")->required();

  // demo-fig1
  auto* demo = app.add_subcommand("demo-fig1", "Write toy-scenario trajectories");
  std::string demo_out = "demo_fig1";
  demo->add_option("--out", demo_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*solve)
      return run_solve(tq, epsilon, mu_b, delta_max, bucket, discount, objective, solve_out,
                       solver_base);
    if (*simulate)
      return run_simulate(policy_path, sim_config,
                          horizon_opt->count() ? std::optional(horizon_flag) : std::nullopt,
                          seed_opt->count() ? std::optional(seed_flag) : std::nullopt,
                          warmup_opt->count() ? std::optional(warmup_flag) : std::nullopt,
                          sim_out);
    if (*experiment) return run_experiments(exp_configs, exp_out);
    if (*demo) {
      for (const auto& path : qaoi::demo_fig1(demo_out))
        std::printf("wrote %s\n", path.string().c_str());
      return 0;
    }
  } catch (const qaoi::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 2;
  } catch (const qaoi::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const qaoi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
