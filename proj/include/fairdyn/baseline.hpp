#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "fairdyn/model.hpp"
#include "fairdyn/simulate.hpp"

namespace fairdyn::baseline {

/// Training defaults matching the reference setup; acceptance-scale runs pass
/// a reduced epoch budget.
inline constexpr int kDefaultEpochs = 2000;
inline constexpr double kDefaultLearningRate = 0.05;
inline constexpr int kDefaultSampleSize = 5000;

struct SampleRecord {
  int x;
  int s;
  int y;
};

struct SampleSet {
  std::vector<SampleRecord> records;
  int n = 0;  // state count, bounds the x values

  int size() const { return static_cast<int>(records.size()); }
};

/// i.i.d. draws s ~ gamma, x ~ mu[s], y ~ Bernoulli(ell(Y=1|x,s)).
SampleSet sample_population(const GenerativeModel& model,
                            const std::array<markov::Distribution, 2>& mu, int m, uint64_t seed);

/// Logistic model over [one-hot(x), s, bias]; weights has n + 2 entries.
struct LogisticPolicy {
  Eigen::VectorXd weights;
  int n = 0;
  double final_lr = 0.0;
  bool lr_reduced = false;       // the monotone-loss guard halved the rate
  bool penalty_skipped = false;  // a group had no qualified records
  std::vector<double> loss_history;  // loss before training plus one entry per epoch
};

/// Full-batch gradient descent on binary cross-entropy plus
/// lambda * (soft EOP gap)^2, where the gap is the between-group difference of
/// the mean predicted probability over y=1 records. Descent is kept monotone:
/// a step that raises the loss is retried with a halved rate (and flagged).
LogisticPolicy train_short_term(const SampleSet& data, double lambda, int epochs, double lr,
                                uint64_t seed);

double predict_prob(const LogisticPolicy& lp, int x, int s);

enum class PolicyMode { threshold, probabilistic };

/// threshold: pi = 1 iff the predicted probability >= 0.5 (ties approve);
/// probabilistic: pi = the sigmoid output itself.
Policy policy_from_logistic(const LogisticPolicy& lp, PolicyMode mode);

struct RetrainRun {
  uint64_t seed = 0;
  double lambda = 0.0;
  sim::Trajectory trajectory;
  std::vector<Policy> policies;  // policy in force at each step
};

/// Retrains at every step: sample m records from mu_t, fit, convert to a
/// policy, record metrics at (mu_t, pi_t), evolve. One run per seed.
std::vector<RetrainRun> run_retraining_loop(const GenerativeModel& model,
                                            const std::array<markov::Distribution, 2>& mu0, int T,
                                            double lambda, int m,
                                            const std::vector<uint64_t>& seeds, double cost,
                                            int epochs = kDefaultEpochs,
                                            double lr = kDefaultLearningRate,
                                            PolicyMode mode = PolicyMode::threshold);

}  // namespace fairdyn::baseline
