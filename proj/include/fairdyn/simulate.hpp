#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "fairdyn/markov.hpp"
#include "fairdyn/metrics.hpp"
#include "fairdyn/model.hpp"

namespace fairdyn::sim {

/// Default horizon and convergence tolerance for reports.
inline constexpr int kDefaultHorizon = 200;
inline constexpr double kDefaultConvergenceTol = 1e-9;

struct StepMetrics {
  double utility = 0.0;
  double eop = 0.0;
  double dp = 0.0;
  double inequity = 0.0;
  std::array<double, 2> qualification{};
  std::array<double, 2> loan{};
  std::array<double, 2> payback{};
};

/// Deterministic evolution of the group-conditional distributions under one
/// fixed policy: states[t] holds (mu_t(.|0), mu_t(.|1)) for t = 0..T, with
/// per-step metrics and running sums of utility, inequity, and the EOP gap.
struct Trajectory {
  std::vector<std::array<markov::Distribution, 2>> states;
  std::vector<StepMetrics> metrics;
  std::vector<double> cum_utility;
  std::vector<double> cum_inequity;
  std::vector<double> cum_eop;

  int horizon() const { return static_cast<int>(states.size()) - 1; }
};

/// Evolves mu0 for T steps with the kernels built once from (model, policy);
/// metrics are evaluated at every step with cost c.
Trajectory simulate(const GenerativeModel& model, const Policy& policy,
                    const std::array<markov::Distribution, 2>& mu0, int T, double cost);

/// Smallest t such that max_s TV(mu_u, mu_{u+1}) <= tol for every recorded
/// u >= t; nullopt when even the final transition moves more than tol.
std::optional<int> detect_convergence(const Trajectory& trajectory, double tol);

/// Seeded random group-distribution pairs (normalized exponentials per group).
std::vector<std::array<markov::Distribution, 2>> random_initial_distributions(uint64_t seed,
                                                                              int count, int n);

struct MultiStartReport {
  std::vector<std::optional<int>> convergence_steps;   // per start
  double max_pairwise_final_tv = 0.0;                  // across starts, max over groups
  bool certificates_ok = false;                        // both groups certified
  std::optional<std::array<markov::Distribution, 2>> stationary;
  double max_tv_to_stationary = 0.0;                   // NaN when not certified
};

/// Runs simulate() from every start and compares the final states with each
/// other and with the directly computed stationary distributions.
MultiStartReport multi_start_convergence(const GenerativeModel& model, const Policy& policy,
                                         const std::vector<std::array<markov::Distribution, 2>>& starts,
                                         int T, double tol, double cost);

}  // namespace fairdyn::sim
