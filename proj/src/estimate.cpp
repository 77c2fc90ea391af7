#include "fairdyn/estimate.hpp"

#include <cmath>
#include <random>

#include "fairdyn/metrics.hpp"
#include "fairdyn/rng.hpp"

namespace fairdyn::estimation {

Policy probe_policy(ProbeKind kind, int n, int theta) {
  Eigen::MatrixXd table(kNumGroups, n);
  switch (kind) {
    case ProbeKind::random:
      table.setConstant(0.5);
      break;
    case ProbeKind::bias:
      for (int s = 0; s < kNumGroups; ++s) {
        for (int x = 0; x < n; ++x) {
          table(s, x) = x <= 2 ? 0.1 : (s == 0 ? 0.3 : 0.9);
        }
      }
      break;
    case ProbeKind::threshold:
      for (int s = 0; s < kNumGroups; ++s) {
        for (int x = 0; x < n; ++x) table(s, x) = x >= theta ? 1.0 : 0.0;
      }
      break;
  }
  return Policy(std::move(table));
}

ProbeKind parse_probe(const std::string& name) {
  if (name == "random") return ProbeKind::random;
  if (name == "bias") return ProbeKind::bias;
  if (name == "threshold") return ProbeKind::threshold;
  fail(Errc::invalid_argument, "unknown probe policy '" + name + "'");
}

std::string probe_name(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::random: return "random";
    case ProbeKind::bias: return "bias";
    case ProbeKind::threshold: return "threshold";
  }
  return "?";
}

std::vector<TemporalSample> generate_temporal_dataset(
    const GenerativeModel& model, const std::array<markov::Distribution, 2>& mu0,
    const Policy& probe, int m, uint64_t seed) {
  model.require_variant(ModelVariant::feature_state);
  if (m < 1) fail(Errc::invalid_argument, "dataset size must be >= 1");
  std::mt19937_64 gen(seed);
  std::vector<TemporalSample> samples;
  samples.reserve(m);
  const Eigen::VectorXd gamma = model.gamma;
  for (int i = 0; i < m; ++i) {
    TemporalSample rec{};
    rec.s = rng::next_categorical(gen, gamma);
    rec.x0 = rng::next_categorical(gen, mu0[rec.s].vec());
    rec.d0 = rng::next_bernoulli(gen, probe(rec.s, rec.x0)) ? 1 : 0;
    const int y = rng::next_bernoulli(gen, model.label_prob(rec.s, rec.x0)) ? 1 : 0;
    rec.x1 = rng::next_categorical(gen, model.dynamics.at(rec.s, rec.d0, y).row(rec.x0).transpose());
    if (rec.d0 == 1) rec.y0 = y;  // the label is revealed only on approval
    samples.push_back(rec);
  }
  return samples;
}

EstimatedModel estimate_distributions(const std::vector<TemporalSample>& samples, int n) {
  if (samples.empty()) fail(Errc::empty_dataset, "no temporal samples");
  if (n < 2) fail(Errc::invalid_argument, "state count must be >= 2");

  EstimatedModel est{{Eigen::MatrixXd::Zero(1, n), Eigen::MatrixXd::Zero(1, n)},
                     Dynamics({Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n),
                               Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n),
                               Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n),
                               Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n)}),
                     Eigen::MatrixXd::Zero(kNumGroups, n),
                     {},
                     {}};

  // Label estimate first: empirical mean of observed labels per (x, s).
  Eigen::MatrixXd positives = Eigen::MatrixXd::Zero(kNumGroups, n);
  for (const TemporalSample& rec : samples) {
    if (rec.d0 != 1) continue;  // the masked regime never contributes here
    est.ell_support(rec.s, rec.x0) += 1.0;
    if (*rec.y0 == 1) positives(rec.s, rec.x0) += 1.0;
  }
  for (int s = 0; s < kNumGroups; ++s) {
    for (int x = 0; x < n; ++x) {
      const double support = est.ell_support(s, x);
      if (support < kSupportFloor) {
        est.ell_hat[s](0, x) = (positives(s, x) + 1.0) / (support + 2.0);
        est.smoothed_cells.push_back("ell[s=" + std::to_string(s) + ",x=" + std::to_string(x) +
                                     "]");
      } else {
        est.ell_hat[s](0, x) = positives(s, x) / support;
      }
    }
  }

  // Transition counts. Approved records carry the label; denied records are
  // attributed to both y values weighted by the label estimate.
  std::array<Eigen::MatrixXd, 8> counts;
  counts.fill(Eigen::MatrixXd::Zero(n, n));
  for (const TemporalSample& rec : samples) {
    if (rec.d0 == 1) {
      counts[Dynamics::index(rec.s, 1, *rec.y0)](rec.x0, rec.x1) += 1.0;
    } else {
      const double p1 = est.ell_hat[rec.s](0, rec.x0);
      counts[Dynamics::index(rec.s, 0, 1)](rec.x0, rec.x1) += p1;
      counts[Dynamics::index(rec.s, 0, 0)](rec.x0, rec.x1) += 1.0 - p1;
    }
  }

  std::array<Eigen::MatrixXd, 8> g_mats;
  for (int s = 0; s < kNumGroups; ++s) {
    for (int d = 0; d < 2; ++d) {
      for (int y = 0; y < 2; ++y) {
        const int idx = Dynamics::index(s, d, y);
        Eigen::MatrixXd cell = counts[idx];
        est.g_row_support[idx] = Eigen::VectorXd::Zero(n);
        for (int x = 0; x < n; ++x) {
          est.g_row_support[idx][x] = cell.row(x).minCoeff();
          if (cell.row(x).minCoeff() < kSupportFloor) {
            cell.row(x).array() += 1.0;
            est.smoothed_cells.push_back("g[s=" + std::to_string(s) + ",d=" + std::to_string(d) +
                                         ",y=" + std::to_string(y) + ",x=" + std::to_string(x) +
                                         "]");
          }
          cell.row(x) /= cell.row(x).sum();
        }
        g_mats[idx] = std::move(cell);
      }
    }
  }
  est.g_hat = Dynamics(std::move(g_mats));
  return est;
}

GenerativeModel model_from_estimates(const GenerativeModel& reference, const EstimatedModel& est) {
  reference.require_variant(ModelVariant::feature_state);
  return make_feature_state_model(reference.n, reference.gamma, est.ell_hat, est.g_hat);
}

SensitivityReport end_to_end_sensitivity(const GenerativeModel& model_true,
                                         const std::array<markov::Distribution, 2>& mu0,
                                         const std::vector<ProbeKind>& probes,
                                         const opt::OptimizationSpec& spec, int m, uint64_t seed) {
  SensitivityReport report;

  auto score_on_true_model = [&](const Policy& policy, const std::string& label, bool feasible) {
    std::array<markov::Distribution, 2> stationary = {
        markov::stationary_distribution(build_group_kernel(model_true, policy, 0)),
        markov::stationary_distribution(build_group_kernel(model_true, policy, 1))};
    const metrics::MetricContext ctx =
        metrics::make_context(model_true, policy, stationary, spec.cost);
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
    report.rows.push_back({label, policy, feasible, sm});
  };

  const opt::SolveReport reference = opt::solve(spec, model_true);
  score_on_true_model(reference.policy, "true", reference.feasible);

  for (const ProbeKind probe : probes) {
    const Policy probe_pi = probe_policy(probe, model_true.n);
    const std::vector<TemporalSample> samples = generate_temporal_dataset(
        model_true, mu0, probe_pi, m, rng::derive_seed(seed, 0xe571u + static_cast<int>(probe)));
    const EstimatedModel est = estimate_distributions(samples, model_true.n);
    const GenerativeModel estimated = model_from_estimates(model_true, est);
    const opt::SolveReport solved = opt::solve(spec, estimated);
    score_on_true_model(solved.policy, probe_name(probe), solved.feasible);
  }
  return report;
}

}  // namespace fairdyn::estimation
