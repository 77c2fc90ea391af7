#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairdyn/baseline.hpp"
#include "fairdyn/estimate.hpp"
#include "fairdyn/io.hpp"
#include "fairdyn/model.hpp"
#include "fairdyn/optimize.hpp"
#include "fairdyn/rng.hpp"
#include "fairdyn/simulate.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fairdyn;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

struct CliOptions {
  std::string config_path;
  std::string out_flag;
  std::optional<uint64_t> seed;
};

/// Output directory precedence: --out flag, then FAIRDYN_OUT, then the config
/// value, then ./out.
fs::path resolve_out_dir(const CliOptions& cli, const io::ExperimentConfig& cfg) {
  if (!cli.out_flag.empty()) return cli.out_flag;
  if (const char* env = std::getenv("FAIRDYN_OUT"); env && *env) return env;
  if (cfg.out_dir) return *cfg.out_dir;
  return "out";
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::schema_error, "cannot write " + path.string());
  return out;
}

int cmd_solve(const CliOptions& cli) {
  io::ExperimentConfig cfg = io::load_config(cli.config_path);
  if (!cfg.solve) fail(Errc::schema_error, "config has no 'solve' block");
  if (cli.seed) cfg.solve->spec.solver.seed = *cli.seed;

  const LoadedModel loaded = load_model(cfg.model_path);
  const opt::SolveReport report = opt::solve(cfg.solve->spec, loaded.model);

  const fs::path out_dir = resolve_out_dir(cli, cfg);
  fs::create_directories(out_dir);
  {
    auto out = open_out(out_dir / "solve_report.json");
    io::write_solve_report_json(out, report, cfg.solve->spec, loaded.model);
  }
  {
    auto out = open_out(out_dir / "policy.json");
    io::write_policy_json(out, report.policy);
  }
  std::cout << (report.feasible ? "feasible" : "infeasible")
            << " objective=" << report.objective_value << " -> " << out_dir.string() << "\n";
  return report.feasible ? kExitOk : kExitInfeasible;
}

int cmd_simulate(const CliOptions& cli) {
  io::ExperimentConfig cfg = io::load_config(cli.config_path);
  if (!cfg.simulate) fail(Errc::schema_error, "config has no 'simulate' block");

  const LoadedModel loaded = load_model(cfg.model_path);
  const Policy policy = io::read_policy_json(cfg.simulate->policy_path);
  const sim::Trajectory traj =
      sim::simulate(loaded.model, policy, loaded.mu0, cfg.simulate->horizon, cfg.simulate->cost);

  const fs::path out_dir = resolve_out_dir(cli, cfg);
  fs::create_directories(out_dir);
  auto out = open_out(out_dir / "trajectory.csv");
  io::write_trajectory_csv(out, traj, "long-term", std::nullopt, std::nullopt, true);

  const auto settled = sim::detect_convergence(traj, cfg.simulate->tol);
  std::cout << "T=" << traj.horizon() << " converged_at="
            << (settled ? std::to_string(*settled) : std::string("none")) << " -> "
            << (out_dir / "trajectory.csv").string() << "\n";
  return kExitOk;
}

int cmd_compare(const CliOptions& cli) {
  io::ExperimentConfig cfg = io::load_config(cli.config_path);
  if (!cfg.compare) fail(Errc::schema_error, "config has no 'compare' block");
  io::CompareConfig& cc = *cfg.compare;
  if (cli.seed) cc.solve.spec.solver.seed = *cli.seed;
  if (cc.seeds.empty()) {
    const uint64_t base = cli.seed.value_or(0);
    for (uint64_t i = 0; i < 10; ++i) cc.seeds.push_back(rng::derive_seed(base, 0xc03ba3e, i));
  }

  const LoadedModel loaded = load_model(cfg.model_path);
  const opt::SolveReport solved = opt::solve(cc.solve.spec, loaded.model);
  const double cost = cc.solve.spec.cost;

  const fs::path out_dir = resolve_out_dir(cli, cfg);
  fs::create_directories(out_dir);
  auto out = open_out(out_dir / "compare.csv");

  const sim::Trajectory long_term =
      sim::simulate(loaded.model, solved.policy, loaded.mu0, cc.horizon, cost);
  io::write_trajectory_csv(out, long_term, "long-term", std::nullopt, std::nullopt, true);

  // The plain utility-maximizing baseline (lambda = 0) always runs; each
  // positive lambda adds a fairness-regularized baseline.
  std::vector<double> lambdas = {0.0};
  for (double l : cc.lambdas) {
    if (l > 0.0) lambdas.push_back(l);
  }
  for (const double lambda : lambdas) {
    const auto runs = baseline::run_retraining_loop(loaded.model, loaded.mu0, cc.horizon, lambda,
                                                    cc.samples_per_step, cc.seeds, cost,
                                                    cc.epochs, cc.lr);
    const std::string kind = lambda == 0.0 ? "short-maxutil" : "short-eop";
    for (const baseline::RetrainRun& run : runs) {
      io::write_trajectory_csv(out, run.trajectory, kind, run.seed, run.lambda, false);
    }
  }
  std::cout << "policies=" << 1 + lambdas.size() << " seeds=" << cc.seeds.size() << " -> "
            << (out_dir / "compare.csv").string() << "\n";
  return solved.feasible ? kExitOk : kExitInfeasible;
}

int cmd_estimate(const CliOptions& cli) {
  io::ExperimentConfig cfg = io::load_config(cli.config_path);
  if (!cfg.estimate) fail(Errc::schema_error, "config has no 'estimate' block");
  io::EstimateConfig& ec = *cfg.estimate;
  const uint64_t seed = cli.seed.value_or(1);

  const LoadedModel loaded = load_model(cfg.model_path);
  const estimation::SensitivityReport report = estimation::end_to_end_sensitivity(
      loaded.model, loaded.mu0, ec.probes, ec.spec, ec.samples, seed);

  const fs::path out_dir = resolve_out_dir(cli, cfg);
  fs::create_directories(out_dir);
  {
    auto out = open_out(out_dir / "estimate_report.json");
    io::write_sensitivity_report_json(out, report);
  }
  if (ec.export_datasets) {
    for (const estimation::ProbeKind probe : ec.probes) {
      const Policy probe_pi = estimation::probe_policy(probe, loaded.model.n);
      const auto samples = estimation::generate_temporal_dataset(
          loaded.model, loaded.mu0, probe_pi, ec.samples,
          rng::derive_seed(seed, 0xe571u + static_cast<int>(probe)));
      auto out = open_out(out_dir / ("dataset_" + estimation::probe_name(probe) + ".csv"));
      io::write_temporal_csv(out, samples);
    }
  }
  std::cout << "rows=" << report.rows.size() << " -> "
            << (out_dir / "estimate_report.json").string() << "\n";
  return kExitOk;
}

int cmd_presets() {
  nlohmann::json j;
  j["dynamics"] = dynamics_preset_names();
  j["optimization"] = opt::optimization_preset_names();
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-term fair policy search over Markovian population dynamics"};
  app.require_subcommand(1);

  CliOptions cli;
  app.add_option("--config", cli.config_path, "Experiment configuration (JSON)");
  app.add_option("--out", cli.out_flag, "Output directory (overrides FAIRDYN_OUT and config)");
  uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed override");

  auto* solve = app.add_subcommand("solve", "Solve the configured policy program");
  auto* simulate = app.add_subcommand("simulate", "Evolve a saved policy over the horizon");
  auto* compare = app.add_subcommand("compare", "Long-term policy vs retrained baselines");
  auto* estimate = app.add_subcommand("estimate", "Estimation sensitivity pipeline");
  auto* presets = app.add_subcommand("presets", "List bundled dynamics and program presets");

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) cli.seed = seed_value;

  try {
    if (presets->parsed()) return cmd_presets();
    if (cli.config_path.empty()) {
      std::cerr << "error: --config is required\n";
      return kExitError;
    }
    if (solve->parsed()) return cmd_solve(cli);
    if (simulate->parsed()) return cmd_simulate(cli);
    if (compare->parsed()) return cmd_compare(cli);
    if (estimate->parsed()) return cmd_estimate(cli);
  } catch (const fairdyn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
