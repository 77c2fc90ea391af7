#pragma once

#include <array>
#include <span>
#include <vector>

#include "fairdyn/markov.hpp"
#include "fairdyn/model.hpp"

namespace fairdyn::metrics {

/// Conditional denominators below this are reported as DegenerateGroup.
inline constexpr double kDenominatorTol = 1e-12;

/// Everything a long-term metric needs: the policy, the model tables, a
/// group-conditional distribution pair (stationary or instantaneous), and the
/// positive-decision cost c. Metrics that read the label distribution require
/// the feature-state variant and throw WrongVariant otherwise.
struct MetricContext {
  const GenerativeModel* model;
  const Policy* policy;
  std::array<markov::Distribution, 2> mu;
  double cost;
};

MetricContext make_context(const GenerativeModel& model, const Policy& policy,
                           std::array<markov::Distribution, 2> mu, double cost);
// The context keeps pointers to the model and policy; temporaries would dangle.
MetricContext make_context(GenerativeModel&&, const Policy&, std::array<markov::Distribution, 2>,
                           double) = delete;
MetricContext make_context(const GenerativeModel&, Policy&&, std::array<markov::Distribution, 2>,
                           double) = delete;

/// Expected profit per applicant: sum_{x,s} pi(x,s) (ell(x,s) - c) mu(x|s) gamma(s).
double utility(const MetricContext& ctx);

/// Q(pi | s) = sum_x ell(Y=1 | x, s) mu(x | s): group-conditional positive-label rate.
double group_qualification(const MetricContext& ctx, int group);

/// |Q(pi | S=0) - Q(pi | S=1)|.
double inequity(const MetricContext& ctx);

/// Population average score with bins weighted (x+1)/n, in (0, 1].
double average_score(const MetricContext& ctx);

/// Equal-opportunity gap |P(D=1 | Y=1, S=0) - P(D=1 | Y=1, S=1)|. Throws
/// DegenerateGroup if a group has no qualified mass.
double eop_unfairness(const MetricContext& ctx);

/// Demographic-parity gap |P(D=1 | S=0) - P(D=1 | S=1)|.
double dp_unfairness(const MetricContext& ctx);

/// max_s (1 - Q(pi | s)).
double minimax_risk(const MetricContext& ctx);

struct GroupRates {
  std::array<double, 2> loan;     // P(D=1 | S=s)
  std::array<double, 2> payback;  // P(Y=1 | S=s)
};
GroupRates loan_and_payback_rates(const MetricContext& ctx);

/// Per-state gap |mu(x | S=0) - mu(x | S=1)|, one entry per state.
Eigen::VectorXd state_gap(const MetricContext& ctx);

/// Running sums ("effective" metrics).
std::vector<double> cumulative_series(std::span<const double> values);

}  // namespace fairdyn::metrics
