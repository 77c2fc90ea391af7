#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fairdyn/model.hpp"
#include "fairdyn/optimize.hpp"
#include "fairdyn/simulate.hpp"

namespace fairdyn::estimation {

/// Rows (cells) with any transition count below this get add-1 smoothing.
inline constexpr double kSupportFloor = 5.0;

enum class ProbeKind { random, bias, threshold };

/// Data-collection policies: random approves everyone with probability 0.5;
/// bias approves low scores (x <= 2) with probability 0.1 and higher scores
/// with 0.3 (group 0) or 0.9 (group 1); threshold approves exactly the bins
/// x >= theta.
Policy probe_policy(ProbeKind kind, int n, int theta = 2);

ProbeKind parse_probe(const std::string& name);
std::string probe_name(ProbeKind kind);

/// One two-step observation. The label is recorded only for approved
/// applicants (d0 = 1); it stays unset otherwise.
struct TemporalSample {
  int x0;
  int s;
  int d0;
  std::optional<int> y0;
  int x1;
};

/// Draws (s, x0, d0, y0, x1) from the model under the probe policy and masks
/// y0 whenever d0 = 0.
std::vector<TemporalSample> generate_temporal_dataset(
    const GenerativeModel& model, const std::array<markov::Distribution, 2>& mu0,
    const Policy& probe, int m, uint64_t seed);

struct EstimatedModel {
  std::array<Eigen::MatrixXd, 2> ell_hat;        // 1 x n per group
  Dynamics g_hat;
  Eigen::MatrixXd ell_support;                   // (group, x): observed-label counts
  std::array<Eigen::VectorXd, 8> g_row_support;  // per (s,d,y): min cell count per row
  std::vector<std::string> smoothed_cells;       // human-readable flags
};

/// ell_hat is the per-(x, s) empirical mean of observed labels; g_hat the
/// per-(x, d, y, s) empirical transition frequency. Unobserved-label (d = 0)
/// transitions are attributed to both y values weighted by ell_hat, which is
/// the identification assumption for that regime. Under-supported cells get
/// add-1 smoothing, keeping every transition row strictly positive.
EstimatedModel estimate_distributions(const std::vector<TemporalSample>& samples, int n);

/// Replaces ell and g in a model with their estimates (gamma is kept; it is
/// directly observable in the samples regardless of the probe).
GenerativeModel model_from_estimates(const GenerativeModel& reference, const EstimatedModel& est);

struct SensitivityRow {
  std::string probe;  // "true" for the reference solved on exact distributions
  Policy policy;
  bool feasible = false;
  sim::StepMetrics stationary_metrics;  // on the true model
};

struct SensitivityReport {
  std::vector<SensitivityRow> rows;
};

/// For each probe: generate a dataset, estimate, solve the program on the
/// estimated model, then score the found policy at the stationary state of the
/// TRUE model. The first row is the reference policy solved on the true model.
SensitivityReport end_to_end_sensitivity(const GenerativeModel& model_true,
                                         const std::array<markov::Distribution, 2>& mu0,
                                         const std::vector<ProbeKind>& probes,
                                         const opt::OptimizationSpec& spec, int m, uint64_t seed);

}  // namespace fairdyn::estimation
