#include "fairdyn/simulate.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "fairdyn/rng.hpp"

namespace fairdyn::sim {

namespace {

StepMetrics step_metrics(const GenerativeModel& model, const Policy& policy,
                         const std::array<markov::Distribution, 2>& mu, double cost) {
  const metrics::MetricContext ctx = metrics::make_context(model, policy, mu, cost);
  StepMetrics out;
  out.utility = metrics::utility(ctx);
  out.eop = metrics::eop_unfairness(ctx);
  out.dp = metrics::dp_unfairness(ctx);
  out.inequity = metrics::inequity(ctx);
  out.qualification = {metrics::group_qualification(ctx, 0), metrics::group_qualification(ctx, 1)};
  const metrics::GroupRates rates = metrics::loan_and_payback_rates(ctx);
  out.loan = rates.loan;
  out.payback = rates.payback;
  return out;
}

}  // namespace

Trajectory simulate(const GenerativeModel& model, const Policy& policy,
                    const std::array<markov::Distribution, 2>& mu0, int T, double cost) {
  if (T < 1) fail(Errc::invalid_argument, "simulation horizon must be >= 1");
  const std::array<markov::TransitionKernel, 2> kernels = {build_group_kernel(model, policy, 0),
                                                           build_group_kernel(model, policy, 1)};
  Trajectory traj;
  traj.states.reserve(T + 1);
  traj.metrics.reserve(T + 1);
  traj.states.push_back(mu0);
  for (int t = 0; t < T; ++t) {
    const auto& current = traj.states.back();
    traj.states.push_back(
        {markov::evolve(current[0], kernels[0]), markov::evolve(current[1], kernels[1])});
  }
  for (const auto& mu : traj.states) {
    traj.metrics.push_back(step_metrics(model, policy, mu, cost));
  }

  double utility_sum = 0.0, inequity_sum = 0.0, eop_sum = 0.0;
  for (const StepMetrics& m : traj.metrics) {
    traj.cum_utility.push_back(utility_sum += m.utility);
    traj.cum_inequity.push_back(inequity_sum += m.inequity);
    traj.cum_eop.push_back(eop_sum += m.eop);
  }
  return traj;
}

std::optional<int> detect_convergence(const Trajectory& trajectory, double tol) {
  if (!(tol > 0.0)) fail(Errc::invalid_argument, "convergence tolerance must be positive");
  const int transitions = static_cast<int>(trajectory.states.size()) - 1;
  int first_settled = 0;
  for (int t = transitions - 1; t >= 0; --t) {
    const double moved =
        std::max(markov::total_variation(trajectory.states[t][0], trajectory.states[t + 1][0]),
                 markov::total_variation(trajectory.states[t][1], trajectory.states[t + 1][1]));
    if (moved > tol) {
      first_settled = t + 1;
      break;
    }
  }
  if (first_settled > transitions - 1 && transitions > 0) return std::nullopt;
  return first_settled;
}

std::vector<std::array<markov::Distribution, 2>> random_initial_distributions(uint64_t seed,
                                                                              int count, int n) {
  if (count < 1) fail(Errc::invalid_argument, "need at least one distribution pair");
  std::mt19937_64 gen(seed);
  std::vector<std::array<markov::Distribution, 2>> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    markov::Distribution first(rng::next_simplex(gen, n));
    markov::Distribution second(rng::next_simplex(gen, n));
    out.push_back({std::move(first), std::move(second)});
  }
  return out;
}

MultiStartReport multi_start_convergence(
    const GenerativeModel& model, const Policy& policy,
    const std::vector<std::array<markov::Distribution, 2>>& starts, int T, double tol,
    double cost) {
  if (starts.empty()) fail(Errc::invalid_argument, "need at least one start");

  MultiStartReport report;
  std::vector<std::array<markov::Distribution, 2>> finals;
  finals.reserve(starts.size());
  for (const auto& start : starts) {
    Trajectory traj = simulate(model, policy, start, T, cost);
    report.convergence_steps.push_back(detect_convergence(traj, tol));
    finals.push_back(traj.states.back());
  }

  for (size_t i = 0; i < finals.size(); ++i) {
    for (size_t j = i + 1; j < finals.size(); ++j) {
      for (int s = 0; s < kNumGroups; ++s) {
        report.max_pairwise_final_tv = std::max(
            report.max_pairwise_final_tv, markov::total_variation(finals[i][s], finals[j][s]));
      }
    }
  }

  const std::array<markov::TransitionKernel, 2> kernels = {build_group_kernel(model, policy, 0),
                                                           build_group_kernel(model, policy, 1)};
  report.certificates_ok = true;
  for (int s = 0; s < kNumGroups; ++s) {
    report.certificates_ok = report.certificates_ok && markov::check_irreducible(kernels[s]) &&
                             markov::check_aperiodic(kernels[s]);
  }
  if (report.certificates_ok) {
    report.stationary = {markov::stationary_distribution(kernels[0]),
                         markov::stationary_distribution(kernels[1])};
    for (const auto& final_state : finals) {
      for (int s = 0; s < kNumGroups; ++s) {
        report.max_tv_to_stationary =
            std::max(report.max_tv_to_stationary,
                     markov::total_variation(final_state[s], (*report.stationary)[s]));
      }
    }
  } else {
    report.max_tv_to_stationary = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace fairdyn::sim
