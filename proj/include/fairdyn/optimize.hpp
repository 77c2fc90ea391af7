#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fairdyn/markov.hpp"
#include "fairdyn/metrics.hpp"
#include "fairdyn/model.hpp"

namespace fairdyn::opt {

/// Iterates are clamped into [kPolicyClamp, 1 - kPolicyClamp] before kernel
/// construction so strictly positive dynamics keep strictly positive kernels.
inline constexpr double kPolicyClamp = 1e-9;

enum class Objective {
  max_utility,
  max_qualification,   // maximize sum_s Q(pi|s) gamma(s)
  min_eop,
  min_default,         // same quantity as max_qualification, kept as its own selector
  max_average_score,
  min_minimax_risk,
};

enum class ConstraintKind {
  eop_max,          // EOPUnf <= threshold
  dp_max,           // DPUnf <= threshold
  inequity_max,     // I <= threshold
  state_gap_max,    // |mu(x|0) - mu(x|1)| <= threshold for every x (one residual per state)
  utility_min,      // U >= threshold
  monotone_policy,  // pi(x+1, s) >= pi(x, s) for all x, s (threshold unused)
};

struct Constraint {
  ConstraintKind kind;
  double threshold = 0.0;
};

struct SolverConfig {
  int max_iterations = 200;    // inner-iteration cap per outer stage
  double fd_step = 1.49e-10;   // forward-difference step for gradients
  std::optional<Policy> warm_start;  // defaults to the uniform 0.5 policy
  double feasibility_tol = 1e-8;
  int restarts = 1;            // total starts (warm start counts as the first)
  uint64_t seed = 0;           // drives the extra restart points
};

struct OptimizationSpec {
  Objective objective = Objective::max_utility;
  std::vector<Constraint> constraints;
  double cost = 0.5;  // c
  bool enforce_convergence = true;
  SolverConfig solver;
};

/// Result of evaluating one candidate policy. Residuals follow the constraint
/// list order (vector-valued kinds expand in place); when convergence is
/// enforced, one residual per group is appended, +1 if both certificates hold
/// for that group and -1 otherwise. objective is the minimized quantity J_LT;
/// it is NaN when a certificate fails (no unique stationary point exists).
struct Evaluation {
  double objective = 0.0;
  Eigen::VectorXd residuals;
  std::array<bool, 2> irreducible{};
  std::array<bool, 2> aperiodic{};
  bool certificates_ok = false;
  std::optional<std::array<markov::Distribution, 2>> stationary;
};

Evaluation evaluate(const Policy& policy, const OptimizationSpec& spec,
                    const GenerativeModel& model);

struct SolveReport {
  Policy policy;
  bool feasible = false;
  double objective_value = 0.0;  // J_LT at the returned policy
  Eigen::VectorXd constraint_residuals;
  int iterations = 0;
  std::array<bool, 2> irreducible{};
  std::array<bool, 2> aperiodic{};
  double fd_step_used = 0.0;
  int restarts_used = 0;
};

/// Solves the constrained policy program with an augmented-Lagrangian scheme
/// over box-bounded policy variables and finite-difference gradients. The
/// report is deterministic in (spec, model, seed). Infeasibility is not an
/// error: the least-infeasible iterate is returned with feasible=false.
SolveReport solve(const OptimizationSpec& spec, const GenerativeModel& model);

/// Maximize utility at cost c subject to EOPUnf <= epsilon plus convergence.
OptimizationSpec preset_utilmax_eop(double c, double epsilon);

/// Maximize gamma-weighted qualification subject to U >= 0 plus convergence.
OptimizationSpec preset_maxqual(double c);

const std::vector<std::string>& optimization_preset_names();

}  // namespace fairdyn::opt
