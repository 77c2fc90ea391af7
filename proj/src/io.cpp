#include "fairdyn/io.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fairdyn/metrics.hpp"

namespace fairdyn::io {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

[[noreturn]] void schema_fail(const std::string& origin, const std::string& what) {
  fail(Errc::schema_error, origin + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& origin, const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      schema_fail(origin, "unknown key '" + item.key() + "' in " + where);
    }
  }
}

const json& require_json(const json& obj, const std::string& key, const std::string& origin) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(origin, "missing key '" + key + "'");
  return *it;
}

json policy_to_json(const Policy& policy) {
  json rows = json::array();
  for (int s = 0; s < kNumGroups; ++s) {
    json row = json::array();
    for (int x = 0; x < policy.states(); ++x) row.push_back(policy(s, x));
    rows.push_back(std::move(row));
  }
  return json{{"n", policy.states()}, {"groups", kNumGroups}, {"pi", std::move(rows)}};
}

json metrics_to_json(const sim::StepMetrics& m) {
  return json{{"utility", m.utility},
              {"eop", m.eop},
              {"dp", m.dp},
              {"inequity", m.inequity},
              {"q0", m.qualification[0]},
              {"q1", m.qualification[1]},
              {"loan0", m.loan[0]},
              {"loan1", m.loan[1]},
              {"payback0", m.payback[0]},
              {"payback1", m.payback[1]}};
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const sim::Trajectory& trajectory,
                          const std::string& policy_kind, std::optional<uint64_t> seed,
                          std::optional<double> lambda, bool with_header) {
  if (with_header) out << kTrajectoryHeader << "\n";
  const std::string seed_col = seed ? std::to_string(*seed) : "";
  const std::string lambda_col = lambda ? fmt(*lambda) : "";
  for (size_t t = 0; t < trajectory.states.size(); ++t) {
    const sim::StepMetrics& m = trajectory.metrics[t];
    for (int s = 0; s < kNumGroups; ++s) {
      const markov::Distribution& mu = trajectory.states[t][s];
      for (int x = 0; x < mu.size(); ++x) {
        out << t << ',' << s << ',' << x << ',' << fmt(mu[x]) << ',' << fmt(m.utility) << ','
            << fmt(m.eop) << ',' << fmt(m.dp) << ',' << fmt(m.inequity) << ','
            << fmt(m.qualification[0]) << ',' << fmt(m.qualification[1]) << ',' << fmt(m.loan[0])
            << ',' << fmt(m.loan[1]) << ',' << fmt(m.payback[0]) << ',' << fmt(m.payback[1])
            << ',' << fmt(trajectory.cum_utility[t]) << ',' << fmt(trajectory.cum_inequity[t])
            << ',' << fmt(trajectory.cum_eop[t]) << ',' << policy_kind << ',' << seed_col << ','
            << lambda_col << "\n";
      }
    }
  }
}

void write_policy_json(std::ostream& out, const Policy& policy) {
  out << policy_to_json(policy).dump(2) << "\n";
}

Policy read_policy_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::schema_error, "cannot open policy file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    schema_fail(path.string(), e.what());
  }
  reject_unknown_keys(j, {"n", "groups", "pi"}, path.string(), "policy");
  if (!j.contains("pi") || !j["pi"].is_array() || j["pi"].size() != kNumGroups) {
    schema_fail(path.string(), "pi must be a 2-row table");
  }
  const int n = j.value("n", static_cast<int>(j["pi"][0].size()));
  Eigen::MatrixXd table(kNumGroups, n);
  for (int s = 0; s < kNumGroups; ++s) {
    if (static_cast<int>(j["pi"][s].size()) != n) schema_fail(path.string(), "ragged pi table");
    for (int x = 0; x < n; ++x) table(s, x) = j["pi"][s][x].get<double>();
  }
  return Policy(std::move(table));
}

void write_solve_report_json(std::ostream& out, const opt::SolveReport& report,
                             const opt::OptimizationSpec& spec, const GenerativeModel& model) {
  json j;
  j["feasible"] = report.feasible;
  j["objective_value"] = report.objective_value;
  j["iterations"] = report.iterations;
  j["fd_step_used"] = report.fd_step_used;
  j["restarts_used"] = report.restarts_used;
  j["certificates"] = {{"irreducible", {report.irreducible[0], report.irreducible[1]}},
                       {"aperiodic", {report.aperiodic[0], report.aperiodic[1]}}};
  j["constraint_residuals"] = std::vector<double>(
      report.constraint_residuals.data(),
      report.constraint_residuals.data() + report.constraint_residuals.size());
  j["policy"] = policy_to_json(report.policy);

  // Stationary metrics at the returned policy, for readability.
  if (report.irreducible[0] && report.irreducible[1] && report.aperiodic[0] &&
      report.aperiodic[1]) {
    std::array<markov::Distribution, 2> stationary = {
        markov::stationary_distribution(build_group_kernel(model, report.policy, 0)),
        markov::stationary_distribution(build_group_kernel(model, report.policy, 1))};
    const metrics::MetricContext ctx =
        metrics::make_context(model, report.policy, stationary, spec.cost);
    j["stationary"] = {
        {"mu0", std::vector<double>(stationary[0].vec().data(),
                                    stationary[0].vec().data() + stationary[0].size())},
        {"mu1", std::vector<double>(stationary[1].vec().data(),
                                    stationary[1].vec().data() + stationary[1].size())},
        {"utility", metrics::utility(ctx)},
        {"eop", metrics::eop_unfairness(ctx)},
        {"dp", metrics::dp_unfairness(ctx)},
        {"inequity", metrics::inequity(ctx)},
        {"q0", metrics::group_qualification(ctx, 0)},
        {"q1", metrics::group_qualification(ctx, 1)}};
  }
  out << j.dump(2) << "\n";
}

void write_sensitivity_report_json(std::ostream& out,
                                   const estimation::SensitivityReport& report) {
  json rows = json::array();
  for (const estimation::SensitivityRow& row : report.rows) {
    json r;
    r["probe"] = row.probe;
    r["feasible"] = row.feasible;
    r["policy"] = policy_to_json(row.policy);
    r["stationary_metrics"] = metrics_to_json(row.stationary_metrics);
    rows.push_back(std::move(r));
  }
  out << json{{"rows", std::move(rows)}}.dump(2) << "\n";
}

void write_temporal_csv(std::ostream& out,
                        const std::vector<estimation::TemporalSample>& samples) {
  out << "x0,s,d0,y0,x1\n";
  for (const estimation::TemporalSample& rec : samples) {
    out << rec.x0 << ',' << rec.s << ',' << rec.d0 << ',';
    if (rec.y0) out << *rec.y0;
    out << ',' << rec.x1 << "\n";
  }
}

std::vector<estimation::TemporalSample> read_temporal_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::schema_error, "cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "x0,s,d0,y0,x1") {
    schema_fail(path.string(), "bad temporal dataset header");
  }
  std::vector<estimation::TemporalSample> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    estimation::TemporalSample rec{};
    std::getline(row, field, ',');
    rec.x0 = std::stoi(field);
    std::getline(row, field, ',');
    rec.s = std::stoi(field);
    std::getline(row, field, ',');
    rec.d0 = std::stoi(field);
    std::getline(row, field, ',');
    if (!field.empty()) rec.y0 = std::stoi(field);
    std::getline(row, field, ',');
    rec.x1 = std::stoi(field);
    if ((rec.d0 == 1) != rec.y0.has_value()) {
      schema_fail(path.string(), "y0 must be present exactly when d0 = 1");
    }
    samples.push_back(rec);
  }
  return samples;
}

// --- experiment configuration -------------------------------------------

namespace {

opt::SolverConfig parse_solver(const json& j, const std::string& origin) {
  reject_unknown_keys(
      j, {"max_iterations", "fd_step", "feasibility_tol", "restarts", "seed", "warm_start"},
      origin, "solver");
  opt::SolverConfig cfg;
  cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
  cfg.fd_step = j.value("fd_step", cfg.fd_step);
  cfg.feasibility_tol = j.value("feasibility_tol", cfg.feasibility_tol);
  cfg.restarts = j.value("restarts", cfg.restarts);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("warm_start")) {
    const auto& rows = j["warm_start"];
    if (!rows.is_array() || rows.size() != kNumGroups) {
      schema_fail(origin, "warm_start must be a 2-row table");
    }
    const int n = static_cast<int>(rows[0].size());
    Eigen::MatrixXd table(kNumGroups, n);
    for (int s = 0; s < kNumGroups; ++s) {
      for (int x = 0; x < n; ++x) table(s, x) = rows[s][x].get<double>();
    }
    cfg.warm_start = Policy(std::move(table));
  }
  return cfg;
}

opt::ConstraintKind parse_constraint_kind(const std::string& kind, const std::string& origin) {
  if (kind == "eop") return opt::ConstraintKind::eop_max;
  if (kind == "dp") return opt::ConstraintKind::dp_max;
  if (kind == "inequity") return opt::ConstraintKind::inequity_max;
  if (kind == "state-gap") return opt::ConstraintKind::state_gap_max;
  if (kind == "utility") return opt::ConstraintKind::utility_min;
  if (kind == "monotone-policy") return opt::ConstraintKind::monotone_policy;
  schema_fail(origin, "unknown constraint kind '" + kind + "'");
}

opt::Objective parse_objective(const std::string& name, const std::string& origin) {
  if (name == "max-utility") return opt::Objective::max_utility;
  if (name == "max-qualification") return opt::Objective::max_qualification;
  if (name == "min-eop") return opt::Objective::min_eop;
  if (name == "min-default") return opt::Objective::min_default;
  if (name == "max-average-score") return opt::Objective::max_average_score;
  if (name == "min-minimax-risk") return opt::Objective::min_minimax_risk;
  schema_fail(origin, "unknown objective '" + name + "'");
}

SolveConfig parse_solve(const json& j, const std::string& origin) {
  reject_unknown_keys(
      j, {"preset", "c", "epsilon", "objective", "constraints", "enforce_convergence", "solver"},
      origin, "solve");
  SolveConfig cfg;
  const double c = j.value("c", 0.8);
  if (j.contains("preset")) {
    cfg.preset = j["preset"].get<std::string>();
    if (cfg.preset == "utilmax-eop") {
      cfg.epsilon = j.value("epsilon", 0.01);
      cfg.spec = opt::preset_utilmax_eop(c, cfg.epsilon);
    } else if (cfg.preset == "maxqual") {
      cfg.spec = opt::preset_maxqual(c);
    } else {
      schema_fail(origin, "unknown optimization preset '" + cfg.preset + "'");
    }
  } else {
    cfg.spec.objective = parse_objective(
        require_json(j, "objective", origin).get<std::string>(), origin);
    cfg.spec.cost = c;
    cfg.spec.enforce_convergence = j.value("enforce_convergence", true);
    if (j.contains("constraints")) {
      for (const auto& jc : j["constraints"]) {
        reject_unknown_keys(jc, {"kind", "epsilon"}, origin, "constraint");
        opt::Constraint constraint;
        constraint.kind =
            parse_constraint_kind(require_json(jc, "kind", origin).get<std::string>(), origin);
        constraint.threshold = jc.value("epsilon", 0.0);
        cfg.spec.constraints.push_back(constraint);
      }
    }
  }
  if (j.contains("solver")) cfg.spec.solver = parse_solver(j["solver"], origin);
  return cfg;
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    schema_fail(origin, e.what());
  }
  reject_unknown_keys(j, {"model", "out", "solve", "simulate", "compare", "estimate"}, origin,
                      "config");
  ExperimentConfig cfg;
  cfg.model_path = require_json(j, "model", origin).get<std::string>();
  if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();

  if (j.contains("solve")) cfg.solve = parse_solve(j["solve"], origin);

  if (j.contains("simulate")) {
    const json& js = j["simulate"];
    reject_unknown_keys(js, {"policy", "T", "tol", "c"}, origin, "simulate");
    SimulateConfig sc;
    sc.policy_path = require_json(js, "policy", origin).get<std::string>();
    sc.horizon = js.value("T", sc.horizon);
    sc.tol = js.value("tol", sc.tol);
    sc.cost = js.value("c", sc.cost);
    if (sc.horizon < 1) fail(Errc::invariant_violation, origin + ": simulate.T must be >= 1");
    cfg.simulate = std::move(sc);
  }

  if (j.contains("compare")) {
    const json& jc = j["compare"];
    reject_unknown_keys(jc, {"solve", "T", "lambda", "seeds", "m", "epochs", "lr"}, origin,
                        "compare");
    CompareConfig cc;
    cc.solve = parse_solve(require_json(jc, "solve", origin), origin);
    cc.horizon = jc.value("T", cc.horizon);
    if (jc.contains("lambda")) cc.lambdas = jc["lambda"].get<std::vector<double>>();
    if (jc.contains("seeds")) cc.seeds = jc["seeds"].get<std::vector<uint64_t>>();
    cc.samples_per_step = jc.value("m", cc.samples_per_step);
    cc.epochs = jc.value("epochs", cc.epochs);
    cc.lr = jc.value("lr", cc.lr);
    cfg.compare = std::move(cc);
  }

  if (j.contains("estimate")) {
    const json& je = j["estimate"];
    reject_unknown_keys(je, {"probes", "c", "epsilon", "m", "solver", "export_datasets"}, origin,
                        "estimate");
    EstimateConfig ec;
    for (const auto& p : require_json(je, "probes", origin)) {
      ec.probes.push_back(estimation::parse_probe(p.get<std::string>()));
    }
    const double c = je.value("c", 0.9);
    const double epsilon = je.value("epsilon", 0.00005);
    ec.spec = opt::preset_utilmax_eop(c, epsilon);
    if (je.contains("solver")) ec.spec.solver = parse_solver(je["solver"], origin);
    ec.samples = je.value("m", ec.samples);
    ec.export_datasets = je.value("export_datasets", false);
    cfg.estimate = std::move(ec);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::schema_error, "cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_json(buffer.str(), path.string());
}

}  // namespace fairdyn::io
