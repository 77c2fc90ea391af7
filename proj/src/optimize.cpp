#include "fairdyn/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "fairdyn/rng.hpp"

namespace fairdyn::opt {

namespace {

constexpr double kBigPenalty = 1e6;
constexpr int kOuterStages = 30;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

int residual_count(const OptimizationSpec& spec, const GenerativeModel& model) {
  int count = 0;
  for (const Constraint& c : spec.constraints) {
    switch (c.kind) {
      case ConstraintKind::state_gap_max: count += model.n; break;
      case ConstraintKind::monotone_policy: count += kNumGroups * (model.n - 1); break;
      default: count += 1; break;
    }
  }
  if (spec.enforce_convergence) count += kNumGroups;
  return count;
}

double objective_value(Objective objective, const metrics::MetricContext& ctx) {
  switch (objective) {
    case Objective::max_utility: return -metrics::utility(ctx);
    case Objective::max_qualification:
    case Objective::min_default: {
      double q = 0.0;
      for (int s = 0; s < kNumGroups; ++s) {
        q += metrics::group_qualification(ctx, s) * ctx.model->gamma[s];
      }
      return -q;
    }
    case Objective::min_eop: return metrics::eop_unfairness(ctx);
    case Objective::max_average_score: return -metrics::average_score(ctx);
    case Objective::min_minimax_risk: return metrics::minimax_risk(ctx);
  }
  fail(Errc::invalid_argument, "unknown objective selector");
}

void check_spec(const OptimizationSpec& spec) {
  if (!(spec.cost >= 0.0 && spec.cost <= 1.0)) {
    fail(Errc::invariant_violation, "cost c = " + std::to_string(spec.cost) + " outside [0,1]");
  }
  for (const Constraint& c : spec.constraints) {
    const bool needs_threshold = c.kind != ConstraintKind::monotone_policy;
    const bool threshold_must_be_nonnegative = c.kind == ConstraintKind::eop_max ||
                                               c.kind == ConstraintKind::dp_max ||
                                               c.kind == ConstraintKind::inequity_max ||
                                               c.kind == ConstraintKind::state_gap_max;
    if (needs_threshold && threshold_must_be_nonnegative && c.threshold < 0.0) {
      fail(Errc::invariant_violation,
           "constraint threshold " + std::to_string(c.threshold) + " must be >= 0");
    }
  }
  if (spec.solver.max_iterations < 1 || spec.solver.restarts < 1) {
    fail(Errc::invariant_violation, "solver counts must be >= 1");
  }
  if (!(spec.solver.fd_step > 0.0) || !(spec.solver.feasibility_tol > 0.0)) {
    fail(Errc::invariant_violation, "solver steps and tolerances must be positive");
  }
}

}  // namespace

Evaluation evaluate(const Policy& policy, const OptimizationSpec& spec,
                    const GenerativeModel& model) {
  model.require_variant(ModelVariant::feature_state);
  check_spec(spec);

  Evaluation out;
  out.residuals = Eigen::VectorXd::Constant(residual_count(spec, model), kNan);

  std::array<markov::Distribution, 2> mu = {markov::Distribution::uniform(model.n),
                                            markov::Distribution::uniform(model.n)};
  out.certificates_ok = true;
  for (int s = 0; s < kNumGroups; ++s) {
    const markov::TransitionKernel kernel = build_group_kernel(model, policy, s);
    out.irreducible[s] = markov::check_irreducible(kernel);
    out.aperiodic[s] = markov::check_aperiodic(kernel);
    if (out.irreducible[s] && out.aperiodic[s]) {
      mu[s] = markov::stationary_distribution(kernel);
    } else {
      out.certificates_ok = false;
    }
  }

  if (spec.enforce_convergence) {
    const int base = static_cast<int>(out.residuals.size()) - kNumGroups;
    for (int s = 0; s < kNumGroups; ++s) {
      out.residuals[base + s] = (out.irreducible[s] && out.aperiodic[s]) ? 1.0 : -1.0;
    }
  }
  if (!out.certificates_ok) {
    out.objective = kNan;
    return out;
  }

  const metrics::MetricContext ctx = metrics::make_context(model, policy, mu, spec.cost);
  out.objective = objective_value(spec.objective, ctx);
  out.stationary = std::move(mu);

  int idx = 0;
  for (const Constraint& c : spec.constraints) {
    switch (c.kind) {
      case ConstraintKind::eop_max:
        out.residuals[idx++] = c.threshold - metrics::eop_unfairness(ctx);
        break;
      case ConstraintKind::dp_max:
        out.residuals[idx++] = c.threshold - metrics::dp_unfairness(ctx);
        break;
      case ConstraintKind::inequity_max:
        out.residuals[idx++] = c.threshold - metrics::inequity(ctx);
        break;
      case ConstraintKind::state_gap_max: {
        const Eigen::VectorXd gap = metrics::state_gap(ctx);
        for (int x = 0; x < model.n; ++x) out.residuals[idx++] = c.threshold - gap[x];
        break;
      }
      case ConstraintKind::utility_min:
        out.residuals[idx++] = metrics::utility(ctx) - c.threshold;
        break;
      case ConstraintKind::monotone_policy:
        for (int s = 0; s < kNumGroups; ++s) {
          for (int x = 0; x + 1 < model.n; ++x) {
            out.residuals[idx++] = policy(s, x + 1) - policy(s, x);
          }
        }
        break;
    }
  }
  return out;
}

namespace {

/// Augmented-Lagrangian solver state over the flattened policy vector
/// theta[s * n + x] in the box [kPolicyClamp, 1 - kPolicyClamp].
class AugmentedLagrangianSolver {
 public:
  AugmentedLagrangianSolver(const OptimizationSpec& spec, const GenerativeModel& model)
      : spec_(spec),
        model_(model),
        dim_(kNumGroups * model.n),
        lo_(kPolicyClamp),
        hi_(1.0 - kPolicyClamp),
        smooth_residuals_(static_cast<int>(
            residual_count(spec, model) - (spec.enforce_convergence ? kNumGroups : 0))) {}

  SolveReport run() {
    std::mt19937_64 restart_gen(rng::derive_seed(spec_.solver.seed, 0x9a75u));
    Eigen::VectorXd warm = flatten(spec_.solver.warm_start
                                       ? *spec_.solver.warm_start
                                       : Policy::uniform(model_.n));

    // The warm start doubles as the report of last resort when every
    // candidate fails the certificate pre-screen.
    have_fallback_ = true;
    fallback_violation_ = std::numeric_limits<double>::infinity();
    fallback_objective_ = std::numeric_limits<double>::infinity();
    fallback_theta_ = project(warm);

    for (int r = 0; r < spec_.solver.restarts; ++r) {
      Eigen::VectorXd start(dim_);
      if (r == 0) {
        start = warm;
      } else {
        for (int i = 0; i < dim_; ++i) start[i] = rng::next_unit(restart_gen);
      }
      minimize_from(project(start));
    }

    return assemble_report();
  }

 private:
  Eigen::VectorXd flatten(const Policy& policy) const {
    Eigen::VectorXd theta(dim_);
    for (int s = 0; s < kNumGroups; ++s) {
      for (int x = 0; x < model_.n; ++x) theta[s * model_.n + x] = policy(s, x);
    }
    return theta;
  }

  Policy unflatten(const Eigen::VectorXd& theta) const {
    Eigen::MatrixXd table(kNumGroups, model_.n);
    for (int s = 0; s < kNumGroups; ++s) {
      for (int x = 0; x < model_.n; ++x) table(s, x) = theta[s * model_.n + x];
    }
    return Policy(std::move(table));
  }

  Eigen::VectorXd project(Eigen::VectorXd theta) const {
    return theta.cwiseMax(lo_).cwiseMin(hi_);
  }

  struct Probe {
    double objective;                // J_LT, kBigPenalty when unusable
    Eigen::VectorXd residuals;       // smooth residuals only
    bool usable;
  };

  Probe probe(const Eigen::VectorXd& theta) {
    Probe p{kBigPenalty, Eigen::VectorXd::Zero(smooth_residuals_), false};
    Evaluation ev;
    try {
      ev = evaluate(unflatten(project(theta)), spec_, model_);
    } catch (const Error&) {
      return p;  // numerical failure in the stationary solve: reject candidate
    }
    if (!ev.certificates_ok) return p;  // certificate pre-screen
    p.objective = ev.objective;
    p.residuals = ev.residuals.head(smooth_residuals_);
    p.usable = true;
    track_candidate(theta, p);
    return p;
  }

  void track_candidate(const Eigen::VectorXd& theta, const Probe& p) {
    const double violation =
        p.residuals.size() > 0 ? std::max(0.0, -p.residuals.minCoeff()) : 0.0;
    if (violation <= spec_.solver.feasibility_tol) {
      if (!have_feasible_ || p.objective < best_feasible_objective_) {
        have_feasible_ = true;
        best_feasible_objective_ = p.objective;
        best_feasible_theta_ = project(theta);
      }
    }
    // Least-infeasible fallback, ties broken by objective.
    if (!have_fallback_ || violation < fallback_violation_ - 1e-15 ||
        (violation <= fallback_violation_ + 1e-15 && p.objective < fallback_objective_)) {
      have_fallback_ = true;
      fallback_violation_ = violation;
      fallback_objective_ = p.objective;
      fallback_theta_ = project(theta);
    }
  }

  double merit(const Probe& p, const Eigen::VectorXd& lambda, double rho) const {
    if (!p.usable) return kBigPenalty;
    double value = p.objective;
    for (int i = 0; i < smooth_residuals_; ++i) {
      const double shifted = std::max(0.0, lambda[i] - rho * p.residuals[i]);
      value += (shifted * shifted - lambda[i] * lambda[i]) / (2.0 * rho);
    }
    return value;
  }

  double merit_at(const Eigen::VectorXd& theta, const Eigen::VectorXd& lambda, double rho) {
    return merit(probe(theta), lambda, rho);
  }

  Eigen::VectorXd merit_gradient(const Eigen::VectorXd& theta, double base_value,
                                 const Eigen::VectorXd& lambda, double rho) {
    const double h = spec_.solver.fd_step;
    Eigen::VectorXd grad(dim_);
    for (int j = 0; j < dim_; ++j) {
      Eigen::VectorXd shifted = theta;
      // Step inward at the upper box face so the perturbed policy stays valid.
      if (theta[j] + h <= hi_) {
        shifted[j] = theta[j] + h;
        grad[j] = (merit_at(shifted, lambda, rho) - base_value) / h;
      } else {
        shifted[j] = theta[j] - h;
        grad[j] = (base_value - merit_at(shifted, lambda, rho)) / h;
      }
    }
    return grad;
  }

  /// Projected gradient descent with Barzilai-Borwein step sizes and an
  /// Armijo backtracking line search; returns the stage iterate.
  Eigen::VectorXd minimize_stage(Eigen::VectorXd theta, const Eigen::VectorXd& lambda,
                                 double rho) {
    double value = merit_at(theta, lambda, rho);
    Eigen::VectorXd grad = merit_gradient(theta, value, lambda, rho);
    double step = 1.0;
    Eigen::VectorXd prev_theta = theta;
    Eigen::VectorXd prev_grad = grad;

    for (int iter = 0; iter < spec_.solver.max_iterations; ++iter) {
      ++total_iterations_;
      const Eigen::VectorXd direction = project(theta - step * grad) - theta;
      if (direction.lpNorm<Eigen::Infinity>() < 1e-12) break;

      const double slope = grad.dot(direction);
      double tau = 1.0;
      double candidate_value = 0.0;
      Eigen::VectorXd candidate;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls) {
        candidate = project(theta + tau * direction);
        candidate_value = merit_at(candidate, lambda, rho);
        if (candidate_value <= value + 1e-4 * tau * std::min(slope, 0.0)) {
          accepted = true;
          break;
        }
        tau *= 0.5;
      }
      if (!accepted || candidate_value >= value - 1e-14) break;

      prev_theta = theta;
      prev_grad = grad;
      theta = candidate;
      value = candidate_value;
      grad = merit_gradient(theta, value, lambda, rho);

      const Eigen::VectorXd s = theta - prev_theta;
      const Eigen::VectorXd y = grad - prev_grad;
      const double sy = s.dot(y);
      step = sy > 1e-16 ? std::clamp(s.squaredNorm() / sy, 1e-6, 1e3) : 1.0;
    }
    return theta;
  }

  void minimize_from(Eigen::VectorXd theta) {
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(smooth_residuals_);
    double rho = 10.0;
    double previous_violation = std::numeric_limits<double>::infinity();
    double previous_objective = std::numeric_limits<double>::infinity();

    for (int stage = 0; stage < kOuterStages; ++stage) {
      theta = minimize_stage(std::move(theta), lambda, rho);
      const Probe p = probe(theta);
      if (!p.usable) break;

      double violation = 0.0;
      for (int i = 0; i < smooth_residuals_; ++i) {
        violation = std::max(violation, -p.residuals[i]);
        lambda[i] = std::max(0.0, lambda[i] - rho * p.residuals[i]);
      }
      // Stop once the iterate is feasible and the objective has settled; the
      // multipliers need at least one update round before that is meaningful.
      if (stage > 0 && violation <= spec_.solver.feasibility_tol &&
          std::abs(p.objective - previous_objective) <= 1e-12) {
        break;
      }
      if (violation > 0.25 * previous_violation) rho = std::min(rho * 10.0, 1e8);
      previous_violation = violation;
      previous_objective = p.objective;
    }
  }

  SolveReport assemble_report() {
    const Eigen::VectorXd theta = have_feasible_ ? best_feasible_theta_ : fallback_theta_;
    Policy policy = unflatten(project(theta));
    const Evaluation ev = evaluate(policy, spec_, model_);
    const double violation =
        ev.residuals.size() > 0 ? std::max(0.0, -ev.residuals.minCoeff()) : 0.0;
    SolveReport report{std::move(policy),
                       ev.certificates_ok && violation <= spec_.solver.feasibility_tol,
                       ev.objective,
                       ev.residuals,
                       total_iterations_,
                       ev.irreducible,
                       ev.aperiodic,
                       spec_.solver.fd_step,
                       spec_.solver.restarts};
    return report;
  }

  const OptimizationSpec& spec_;
  const GenerativeModel& model_;
  int dim_;
  double lo_;
  double hi_;
  int smooth_residuals_;

  int total_iterations_ = 0;
  bool have_feasible_ = false;
  double best_feasible_objective_ = 0.0;
  Eigen::VectorXd best_feasible_theta_;
  bool have_fallback_ = false;
  double fallback_violation_ = 0.0;
  double fallback_objective_ = 0.0;
  Eigen::VectorXd fallback_theta_;
};

}  // namespace

SolveReport solve(const OptimizationSpec& spec, const GenerativeModel& model) {
  model.require_variant(ModelVariant::feature_state);
  check_spec(spec);
  if (spec.solver.warm_start && spec.solver.warm_start->states() != model.n) {
    fail(Errc::dimension_mismatch, "warm start has the wrong number of states");
  }
  AugmentedLagrangianSolver solver(spec, model);
  return solver.run();
}

OptimizationSpec preset_utilmax_eop(double c, double epsilon) {
  if (!(c >= 0.0 && c <= 1.0)) {
    fail(Errc::invariant_violation, "cost c = " + std::to_string(c) + " outside [0,1]");
  }
  if (epsilon < 0.0) {
    fail(Errc::invariant_violation, "epsilon = " + std::to_string(epsilon) + " must be >= 0");
  }
  OptimizationSpec spec;
  spec.objective = Objective::max_utility;
  spec.constraints = {{ConstraintKind::eop_max, epsilon}};
  spec.cost = c;
  spec.enforce_convergence = true;
  return spec;
}

OptimizationSpec preset_maxqual(double c) {
  if (!(c >= 0.0 && c <= 1.0)) {
    fail(Errc::invariant_violation, "cost c = " + std::to_string(c) + " outside [0,1]");
  }
  OptimizationSpec spec;
  spec.objective = Objective::max_qualification;
  spec.constraints = {{ConstraintKind::utility_min, 0.0}};
  spec.cost = c;
  spec.enforce_convergence = true;
  return spec;
}

const std::vector<std::string>& optimization_preset_names() {
  static const std::vector<std::string> names = {"utilmax-eop", "maxqual"};
  return names;
}

}  // namespace fairdyn::opt
