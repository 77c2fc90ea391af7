#include "fairdyn/baseline.hpp"

#include <cmath>
#include <iostream>
#include <random>

#include "fairdyn/metrics.hpp"
#include "fairdyn/rng.hpp"

namespace fairdyn::baseline {

namespace {

constexpr uint64_t kSampleStream = 0x5a3c17u;
constexpr uint64_t kTrainStream = 0x1b42d9u;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Eigen::VectorXd encode(int x, int s, int n) {
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(n + 2);
  phi[x] = 1.0;
  phi[n] = static_cast<double>(s);
  phi[n + 1] = 1.0;
  return phi;
}

struct TrainingData {
  Eigen::MatrixXd features;  // m x (n+2)
  Eigen::VectorXd labels;
  std::array<std::vector<int>, 2> qualified;  // row indices with y=1, per group
};

TrainingData prepare(const SampleSet& data) {
  const int m = data.size();
  const int n = data.n;
  TrainingData td{Eigen::MatrixXd::Zero(m, n + 2), Eigen::VectorXd::Zero(m), {}};
  for (int i = 0; i < m; ++i) {
    const SampleRecord& r = data.records[i];
    td.features(i, r.x) = 1.0;
    td.features(i, n) = static_cast<double>(r.s);
    td.features(i, n + 1) = 1.0;
    td.labels[i] = static_cast<double>(r.y);
    if (r.y == 1) td.qualified[r.s].push_back(i);
  }
  return td;
}

double bce_loss(const Eigen::VectorXd& probs, const Eigen::VectorXd& labels) {
  // Clamp keeps log() finite for saturated predictions.
  double loss = 0.0;
  for (int i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-12, 1.0 - 1e-12);
    loss -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return loss / probs.size();
}

double soft_eop_gap(const Eigen::VectorXd& probs, const TrainingData& td) {
  std::array<double, 2> mean{};
  for (int s = 0; s < 2; ++s) {
    for (int i : td.qualified[s]) mean[s] += probs[i];
    mean[s] /= static_cast<double>(td.qualified[s].size());
  }
  return mean[1] - mean[0];
}

}  // namespace

SampleSet sample_population(const GenerativeModel& model,
                            const std::array<markov::Distribution, 2>& mu, int m, uint64_t seed) {
  model.require_variant(ModelVariant::feature_state);
  if (m < 1) fail(Errc::invalid_argument, "sample size must be >= 1");
  std::mt19937_64 gen(seed);
  SampleSet set;
  set.n = model.n;
  set.records.reserve(m);
  const Eigen::VectorXd gamma = model.gamma;
  for (int i = 0; i < m; ++i) {
    const int s = rng::next_categorical(gen, gamma);
    const int x = rng::next_categorical(gen, mu[s].vec());
    const int y = rng::next_bernoulli(gen, model.label_prob(s, x)) ? 1 : 0;
    set.records.push_back({x, s, y});
  }
  return set;
}

LogisticPolicy train_short_term(const SampleSet& data, double lambda, int epochs, double lr,
                                uint64_t seed) {
  if (data.records.empty()) fail(Errc::empty_dataset, "training set is empty");
  if (epochs < 1 || !(lr > 0.0)) fail(Errc::invalid_argument, "epochs >= 1 and lr > 0 required");
  const int n = data.n;
  const int dim = n + 2;
  const TrainingData td = prepare(data);
  const int m = data.size();

  LogisticPolicy lp;
  lp.n = n;
  lp.final_lr = lr;

  bool use_penalty = lambda > 0.0;
  if (use_penalty && (td.qualified[0].empty() || td.qualified[1].empty())) {
    std::cerr << "warning: EmptyQualifiedGroup, skipping the fairness penalty\n";
    lp.penalty_skipped = true;
    use_penalty = false;
  }

  // Uniform init in +-1/sqrt(dim), the usual scale for a linear layer.
  std::mt19937_64 gen(seed);
  lp.weights.resize(dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (int j = 0; j < dim; ++j) lp.weights[j] = (2.0 * rng::next_unit(gen) - 1.0) * bound;

  auto loss_at = [&](const Eigen::VectorXd& w, Eigen::VectorXd& probs_out) {
    probs_out = (td.features * w).unaryExpr([](double z) { return sigmoid(z); });
    double loss = bce_loss(probs_out, td.labels);
    if (use_penalty) {
      const double gap = soft_eop_gap(probs_out, td);
      loss += lambda * gap * gap;
    }
    return loss;
  };

  Eigen::VectorXd probs;
  double loss = loss_at(lp.weights, probs);
  lp.loss_history.reserve(epochs + 1);
  lp.loss_history.push_back(loss);
  double step = lr;
  int halvings = 0;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    Eigen::VectorXd grad = td.features.transpose() * (probs - td.labels) / m;
    if (use_penalty) {
      const double gap = soft_eop_gap(probs, td);
      Eigen::VectorXd dgap = Eigen::VectorXd::Zero(dim);
      for (int s = 0; s < 2; ++s) {
        const double sign = s == 1 ? 1.0 : -1.0;
        const double scale = sign / static_cast<double>(td.qualified[s].size());
        for (int i : td.qualified[s]) {
          dgap += scale * probs[i] * (1.0 - probs[i]) * td.features.row(i).transpose();
        }
      }
      grad += 2.0 * lambda * gap * dgap;
    }

    // Monotone-descent guard: retry with a halved rate instead of accepting
    // an uphill step.
    while (true) {
      Eigen::VectorXd candidate = lp.weights - step * grad;
      Eigen::VectorXd candidate_probs;
      const double candidate_loss = loss_at(candidate, candidate_probs);
      if (candidate_loss <= loss + 1e-12) {
        lp.weights = std::move(candidate);
        probs = std::move(candidate_probs);
        loss = candidate_loss;
        lp.loss_history.push_back(loss);
        break;
      }
      step *= 0.5;
      ++halvings;
      if (!lp.lr_reduced) {
        std::cerr << "warning: loss increased, reducing learning rate to " << step << "\n";
        lp.lr_reduced = true;
      }
      if (halvings > 60) return lp;  // step underflow, nothing more to gain
    }
  }
  lp.final_lr = step;
  return lp;
}

double predict_prob(const LogisticPolicy& lp, int x, int s) {
  return sigmoid(lp.weights.dot(encode(x, s, lp.n)));
}

Policy policy_from_logistic(const LogisticPolicy& lp, PolicyMode mode) {
  Eigen::MatrixXd table(kNumGroups, lp.n);
  for (int s = 0; s < kNumGroups; ++s) {
    for (int x = 0; x < lp.n; ++x) {
      const double p = predict_prob(lp, x, s);
      table(s, x) = mode == PolicyMode::threshold ? (p >= 0.5 ? 1.0 : 0.0) : p;
    }
  }
  return Policy(std::move(table));
}

std::vector<RetrainRun> run_retraining_loop(const GenerativeModel& model,
                                            const std::array<markov::Distribution, 2>& mu0, int T,
                                            double lambda, int m,
                                            const std::vector<uint64_t>& seeds, double cost,
                                            int epochs, double lr, PolicyMode mode) {
  if (T < 1) fail(Errc::invalid_argument, "horizon must be >= 1");
  std::vector<RetrainRun> runs;
  runs.reserve(seeds.size());

  for (const uint64_t seed : seeds) {
    RetrainRun run;
    run.seed = seed;
    run.lambda = lambda;
    run.trajectory.states.push_back(mu0);

    for (int t = 0; t <= T; ++t) {
      const auto mu = run.trajectory.states.back();
      const SampleSet samples =
          sample_population(model, mu, m, rng::derive_seed(seed, kSampleStream, t));
      const LogisticPolicy lp =
          train_short_term(samples, lambda, epochs, lr, rng::derive_seed(seed, kTrainStream, t));
      Policy policy = policy_from_logistic(lp, mode);

      const metrics::MetricContext ctx = metrics::make_context(model, policy, mu, cost);
      sim::StepMetrics sm;
      sm.utility = metrics::utility(ctx);
      sm.eop = metrics::eop_unfairness(ctx);
      sm.dp = metrics::dp_unfairness(ctx);
      sm.inequity = metrics::inequity(ctx);
      sm.qualification = {metrics::group_qualification(ctx, 0),
                          metrics::group_qualification(ctx, 1)};
      const metrics::GroupRates rates = metrics::loan_and_payback_rates(ctx);
      sm.loan = rates.loan;
      sm.payback = rates.payback;
      run.trajectory.metrics.push_back(sm);

      if (t < T) {
        run.trajectory.states.push_back({markov::evolve(mu[0], build_group_kernel(model, policy, 0)),
                                         markov::evolve(mu[1], build_group_kernel(model, policy, 1))});
      }
      run.policies.push_back(std::move(policy));
    }

    double utility_sum = 0.0, inequity_sum = 0.0, eop_sum = 0.0;
    for (const sim::StepMetrics& sm : run.trajectory.metrics) {
      run.trajectory.cum_utility.push_back(utility_sum += sm.utility);
      run.trajectory.cum_inequity.push_back(inequity_sum += sm.inequity);
      run.trajectory.cum_eop.push_back(eop_sum += sm.eop);
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace fairdyn::baseline
