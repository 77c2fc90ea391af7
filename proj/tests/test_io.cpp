#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fairdyn/io.hpp"
#include "support/oracles.hpp"

using namespace fairdyn;
namespace fs = std::filesystem;

namespace {

LoadedModel bundled_model() {
  return load_model(std::string(FAIRDYN_SOURCE_DIR) + "/data/synthetic_model.json");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string field;
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("fairdyn_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string command = std::string(FAIRDYN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("trajectory CSV layout and cumulative columns") {
  const LoadedModel loaded = bundled_model();
  const Policy policy = Policy::uniform(4);
  const sim::Trajectory traj = sim::simulate(loaded.model, policy, loaded.mu0, 5, 0.8);

  std::ostringstream out;
  io::write_trajectory_csv(out, traj, "long-term", std::nullopt, std::nullopt, true);

  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == io::kTrajectoryHeader);

  int rows = 0;
  double previous_cum_utility = 0.0;
  double recomputed = 0.0;
  int previous_t = -1;
  while (std::getline(in, line)) {
    const auto fields = split(line);
    REQUIRE(fields.size() == 20);
    const int t = std::stoi(fields[0]);
    const double mu = std::stod(fields[3]);
    CHECK(mu >= 0.0);
    CHECK(mu <= 1.0);
    if (t != previous_t) {
      recomputed += std::stod(fields[4]);  // utility appears once per block
      previous_t = t;
      previous_cum_utility = std::stod(fields[14]);
      CHECK(previous_cum_utility == doctest::Approx(recomputed).epsilon(1e-12));
    }
    CHECK(fields[17] == "long-term");
    CHECK(fields[18] == "");
    CHECK(fields[19] == "");
    ++rows;
  }
  CHECK(rows == 6 * 2 * 4);  // (T+1) x groups x states
}

TEST_CASE("policy files round-trip bit for bit") {
  const fs::path dir = fresh_dir("policy");
  std::mt19937_64 gen(3);
  const Policy policy = fairdyn::test::random_policy(gen, 4);
  {
    std::ofstream out(dir / "policy.json");
    io::write_policy_json(out, policy);
  }
  const Policy reread = io::read_policy_json(dir / "policy.json");
  CHECK((policy.table() - reread.table()).cwiseAbs().maxCoeff() == 0.0);

  // Identical tables drive identical simulations.
  const LoadedModel loaded = bundled_model();
  const sim::Trajectory a = sim::simulate(loaded.model, policy, loaded.mu0, 30, 0.8);
  const sim::Trajectory b = sim::simulate(loaded.model, reread, loaded.mu0, 30, 0.8);
  for (size_t t = 0; t < a.states.size(); ++t) {
    for (int s = 0; s < 2; ++s) {
      CHECK((a.states[t][s].vec() - b.states[t][s].vec()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("temporal dataset CSV round-trips with masked labels") {
  const LoadedModel loaded = bundled_model();
  const Policy probe = estimation::probe_policy(estimation::ProbeKind::random, 4);
  const auto samples = estimation::generate_temporal_dataset(loaded.model, loaded.mu0, probe, 500, 23);

  const fs::path dir = fresh_dir("dataset");
  {
    std::ofstream out(dir / "temporal.csv");
    io::write_temporal_csv(out, samples);
  }
  const auto reread = io::read_temporal_csv(dir / "temporal.csv");
  REQUIRE(reread.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(reread[i].x0 == samples[i].x0);
    CHECK(reread[i].s == samples[i].s);
    CHECK(reread[i].d0 == samples[i].d0);
    CHECK(reread[i].y0 == samples[i].y0);
    CHECK(reread[i].x1 == samples[i].x1);
  }
}

TEST_CASE("config parsing") {
  const std::string good = R"({
    "model": "data/synthetic_model.json",
    "out": "runs/demo",
    "solve": {"preset": "utilmax-eop", "c": 0.8, "epsilon": 0.026,
              "solver": {"fd_step": 1.49e-8, "restarts": 2, "seed": 7}}
  })";
  const io::ExperimentConfig cfg = io::parse_config_json(good, "test");
  REQUIRE(cfg.solve.has_value());
  CHECK(cfg.solve->spec.cost == 0.8);
  CHECK(cfg.solve->spec.constraints[0].threshold == 0.026);
  CHECK(cfg.solve->spec.solver.restarts == 2);
  CHECK(cfg.solve->spec.solver.seed == 7);
  CHECK(*cfg.out_dir == "runs/demo");

  // Unknown keys anywhere are rejected.
  CHECK_THROWS_AS(io::parse_config_json(R"({"model": "m.json", "solve": {}, "oops": 1})", "test"),
                  Error);
  CHECK_THROWS_AS(
      io::parse_config_json(R"({"model": "m.json", "solve": {"preset": "utilmax-eop", "eps": 1}})",
                            "test"),
      Error);

  // Negative epsilon violates the preset precondition.
  CHECK_THROWS_AS(io::parse_config_json(
                      R"({"model": "m.json", "solve": {"preset": "utilmax-eop", "epsilon": -1}})",
                      "test"),
                  Error);

  // Explicit objective/constraint form.
  const std::string explicit_form = R"({
    "model": "data/synthetic_model.json",
    "solve": {"objective": "max-qualification", "c": 0.8,
              "constraints": [{"kind": "utility", "epsilon": 0.0},
                               {"kind": "monotone-policy"}]}
  })";
  const io::ExperimentConfig explicit_cfg = io::parse_config_json(explicit_form, "test");
  CHECK(explicit_cfg.solve->spec.objective == opt::Objective::max_qualification);
  REQUIRE(explicit_cfg.solve->spec.constraints.size() == 2);
  CHECK(explicit_cfg.solve->spec.constraints[1].kind == opt::ConstraintKind::monotone_policy);
}

TEST_CASE("cli: presets listing") {
  const std::string path = (fs::temp_directory_path() / "fairdyn_presets.json").string();
  const std::string command = std::string(FAIRDYN_CLI_PATH) + " presets > " + path + " 2>/dev/null";
  REQUIRE(WEXITSTATUS(std::system(command.c_str())) == 0);
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  CHECK(text.find("recourse") != std::string::npos);
  CHECK(text.find("one-sided-fast") != std::string::npos);
  CHECK(text.find("utilmax-eop") != std::string::npos);
  int dynamics_count = 0;
  for (const std::string& name : dynamics_preset_names()) {
    if (text.find("\"" + name + "\"") != std::string::npos) ++dynamics_count;
  }
  CHECK(dynamics_count == 6);
}

TEST_CASE("cli: solve, simulate, and exit codes") {
  const fs::path dir = fresh_dir("cli");
  const std::string model = std::string(FAIRDYN_SOURCE_DIR) + "/data/synthetic_model.json";

  {
    std::ofstream cfg(dir / "solve.json");
    cfg << R"({"model": ")" << model << R"(",
               "solve": {"preset": "utilmax-eop", "c": 0.8, "epsilon": 0.026,
                         "solver": {"fd_step": 1.49e-8, "restarts": 2}},
               "simulate": {"policy": ")" << (dir / "run/policy.json").string() << R"(", "T": 50, "c": 0.8}})";
  }
  CHECK(run_cli("--config " + (dir / "solve.json").string() + " --out " + (dir / "run").string() +
                " solve") == 0);
  CHECK(fs::exists(dir / "run/solve_report.json"));
  CHECK(fs::exists(dir / "run/policy.json"));

  CHECK(run_cli("--config " + (dir / "solve.json").string() + " --out " + (dir / "run").string() +
                " simulate") == 0);
  CHECK(fs::exists(dir / "run/trajectory.csv"));

  // Config error: negative epsilon.
  {
    std::ofstream cfg(dir / "bad.json");
    cfg << R"({"model": ")" << model
        << R"(", "solve": {"preset": "utilmax-eop", "epsilon": -0.5}})";
  }
  CHECK(run_cli("--config " + (dir / "bad.json").string() + " solve") == 1);

  // Missing config file.
  CHECK(run_cli("--config " + (dir / "missing.json").string() + " solve") == 1);

  // Contradictory constraints: infeasible, exit 2.
  {
    std::ofstream cfg(dir / "infeasible.json");
    cfg << R"({"model": ")" << model << R"(",
               "solve": {"objective": "max-utility", "c": 0.8,
                         "constraints": [{"kind": "eop", "epsilon": 0.0},
                                          {"kind": "utility", "epsilon": 1.0}],
                         "solver": {"max_iterations": 40, "fd_step": 1.49e-8}}})";
  }
  CHECK(run_cli("--config " + (dir / "infeasible.json").string() + " --out " +
                (dir / "run2").string() + " solve") == 2);

  // FAIRDYN_OUT steers the output directory when no flag is given.
  const std::string env_command = "FAIRDYN_OUT=" + (dir / "envrun").string() + " " +
                                  std::string(FAIRDYN_CLI_PATH) + " --config " +
                                  (dir / "solve.json").string() + " solve > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(env_command.c_str())) == 0);
  CHECK(fs::exists(dir / "envrun/policy.json"));
}

TEST_CASE("cli: compare emits all three policy kinds") {
  const fs::path dir = fresh_dir("compare");
  const std::string model = std::string(FAIRDYN_SOURCE_DIR) + "/data/synthetic_model.json";
  {
    std::ofstream cfg(dir / "compare.json");
    cfg << R"({"model": ")" << model << R"(",
               "compare": {"solve": {"preset": "utilmax-eop", "c": 0.8, "epsilon": 0.026,
                                      "solver": {"fd_step": 1.49e-8, "restarts": 2}},
                           "T": 4, "lambda": [1, 2], "seeds": [1, 2], "m": 200, "epochs": 40}})";
  }
  REQUIRE(run_cli("--config " + (dir / "compare.json").string() + " --out " + dir.string() +
                  " compare") == 0);

  std::ifstream in(dir / "compare.csv");
  REQUIRE(in.good());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == io::kTrajectoryHeader);

  std::set<std::string> kinds;
  std::map<std::string, std::set<std::string>> seeds_by_lambda;
  while (std::getline(in, line)) {
    const auto fields = split(line);
    REQUIRE(fields.size() == 20);
    kinds.insert(fields[17]);
    if (!fields[19].empty()) seeds_by_lambda[fields[19]].insert(fields[18]);
  }
  CHECK(kinds == std::set<std::string>{"long-term", "short-maxutil", "short-eop"});
  for (const auto& [lambda, seeds] : seeds_by_lambda) {
    CHECK(seeds.size() == 2);  // one trajectory per seed per lambda
  }
  CHECK(seeds_by_lambda.size() == 3);  // lambda = 0, 1, 2
}

TEST_CASE("cli: estimate writes the sensitivity report") {
  const fs::path dir = fresh_dir("estimate");
  const std::string model = std::string(FAIRDYN_SOURCE_DIR) + "/data/synthetic_model.json";
  {
    std::ofstream cfg(dir / "estimate.json");
    cfg << R"({"model": ")" << model << R"(",
               "estimate": {"probes": ["random"], "m": 2000, "c": 0.9, "epsilon": 0.00005,
                            "solver": {"fd_step": 1.49e-8, "restarts": 1},
                            "export_datasets": true}})";
  }
  REQUIRE(run_cli("--config " + (dir / "estimate.json").string() + " --out " + dir.string() +
                  " --seed 5 estimate") == 0);
  CHECK(fs::exists(dir / "estimate_report.json"));
  CHECK(fs::exists(dir / "dataset_random.csv"));
  const auto samples = io::read_temporal_csv(dir / "dataset_random.csv");
  CHECK(samples.size() == 2000);
}
