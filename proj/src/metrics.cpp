#include "fairdyn/metrics.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace fairdyn::metrics {

namespace {

void require_feature_state(const MetricContext& ctx) {
  ctx.model->require_variant(ModelVariant::feature_state);
}

}  // namespace

MetricContext make_context(const GenerativeModel& model, const Policy& policy,
                           std::array<markov::Distribution, 2> mu, double cost) {
  if (!(cost >= 0.0 && cost <= 1.0)) {
    fail(Errc::invariant_violation, "cost c = " + std::to_string(cost) + " outside [0,1]");
  }
  for (int s = 0; s < kNumGroups; ++s) {
    if (mu[s].size() != model.n) {
      fail(Errc::dimension_mismatch, "mu[" + std::to_string(s) + "] has " +
                                         std::to_string(mu[s].size()) + " states, model has " +
                                         std::to_string(model.n));
    }
  }
  return MetricContext{&model, &policy, std::move(mu), cost};
}

double utility(const MetricContext& ctx) {
  require_feature_state(ctx);
  double u = 0.0;
  for (int s = 0; s < kNumGroups; ++s) {
    for (int x = 0; x < ctx.model->n; ++x) {
      u += (*ctx.policy)(s, x) * (ctx.model->label_prob(s, x) - ctx.cost) * ctx.mu[s][x] *
           ctx.model->gamma[s];
    }
  }
  return u;
}

double group_qualification(const MetricContext& ctx, int group) {
  require_feature_state(ctx);
  double q = 0.0;
  for (int x = 0; x < ctx.model->n; ++x) {
    q += ctx.model->label_prob(group, x) * ctx.mu[group][x];
  }
  return q;
}

double inequity(const MetricContext& ctx) {
  return std::abs(group_qualification(ctx, 0) - group_qualification(ctx, 1));
}

double average_score(const MetricContext& ctx) {
  const int n = ctx.model->n;
  double score = 0.0;
  for (int s = 0; s < kNumGroups; ++s) {
    double group_score = 0.0;
    for (int x = 0; x < n; ++x) group_score += (x + 1.0) / n * ctx.mu[s][x];
    score += ctx.model->gamma[s] * group_score;
  }
  return score;
}

double eop_unfairness(const MetricContext& ctx) {
  require_feature_state(ctx);
  std::array<double, 2> approval{};
  for (int s = 0; s < kNumGroups; ++s) {
    double numerator = 0.0;
    double denominator = 0.0;
    for (int x = 0; x < ctx.model->n; ++x) {
      const double qualified_mass = ctx.model->label_prob(s, x) * ctx.mu[s][x];
      numerator += (*ctx.policy)(s, x) * qualified_mass;
      denominator += qualified_mass;
    }
    if (denominator <= kDenominatorTol) {
      fail(Errc::degenerate_group, "group " + std::to_string(s) + " has no qualified mass");
    }
    approval[s] = numerator / denominator;
  }
  return std::abs(approval[0] - approval[1]);
}

double dp_unfairness(const MetricContext& ctx) {
  require_feature_state(ctx);
  std::array<double, 2> rate{};
  for (int s = 0; s < kNumGroups; ++s) {
    for (int x = 0; x < ctx.model->n; ++x) rate[s] += (*ctx.policy)(s, x) * ctx.mu[s][x];
  }
  return std::abs(rate[0] - rate[1]);
}

double minimax_risk(const MetricContext& ctx) {
  return std::max(1.0 - group_qualification(ctx, 0), 1.0 - group_qualification(ctx, 1));
}

GroupRates loan_and_payback_rates(const MetricContext& ctx) {
  require_feature_state(ctx);
  GroupRates rates{};
  for (int s = 0; s < kNumGroups; ++s) {
    for (int x = 0; x < ctx.model->n; ++x) {
      rates.loan[s] += (*ctx.policy)(s, x) * ctx.mu[s][x];
      rates.payback[s] += ctx.model->label_prob(s, x) * ctx.mu[s][x];
    }
  }
  return rates;
}

Eigen::VectorXd state_gap(const MetricContext& ctx) {
  return (ctx.mu[0].vec() - ctx.mu[1].vec()).cwiseAbs();
}

std::vector<double> cumulative_series(std::span<const double> values) {
  if (values.empty()) fail(Errc::invalid_argument, "cumulative_series needs a nonempty input");
  std::vector<double> out(values.size());
  std::partial_sum(values.begin(), values.end(), out.begin());
  return out;
}

}  // namespace fairdyn::metrics
