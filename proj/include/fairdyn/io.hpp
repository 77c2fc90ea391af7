#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fairdyn/baseline.hpp"
#include "fairdyn/estimate.hpp"
#include "fairdyn/model.hpp"
#include "fairdyn/optimize.hpp"
#include "fairdyn/simulate.hpp"

namespace fairdyn::io {

/// Flat CSV schema shared by simulate and compare outputs: one row per
/// (t, s, state), metric columns repeated within each block. Non-applicable
/// seed/lambda cells stay empty.
inline constexpr const char* kTrajectoryHeader =
    "t,s,state,mu,utility,eop,dp,inequity,q0,q1,loan0,loan1,payback0,payback1,"
    "cum_utility,cum_inequity,cum_eop,policy_kind,seed,lambda";

void write_trajectory_csv(std::ostream& out, const sim::Trajectory& trajectory,
                          const std::string& policy_kind, std::optional<uint64_t> seed,
                          std::optional<double> lambda, bool with_header);

void write_policy_json(std::ostream& out, const Policy& policy);
Policy read_policy_json(const std::filesystem::path& path);

void write_solve_report_json(std::ostream& out, const opt::SolveReport& report,
                             const opt::OptimizationSpec& spec, const GenerativeModel& model);

void write_sensitivity_report_json(std::ostream& out,
                                   const estimation::SensitivityReport& report);

/// Temporal dataset rows: x0,s,d0,y0,x1 with y0 empty when masked.
void write_temporal_csv(std::ostream& out, const std::vector<estimation::TemporalSample>& samples);
std::vector<estimation::TemporalSample> read_temporal_csv(const std::filesystem::path& path);

// --- experiment configuration -------------------------------------------

struct SolveConfig {
  std::string preset;  // "utilmax-eop" | "maxqual" | "" for an explicit spec
  opt::OptimizationSpec spec;
  double epsilon = 0.0;  // preset parameter, echoed into reports
};

struct SimulateConfig {
  std::filesystem::path policy_path;
  int horizon = sim::kDefaultHorizon;
  double tol = sim::kDefaultConvergenceTol;
  double cost = 0.8;
};

struct CompareConfig {
  SolveConfig solve;
  int horizon = 100;
  std::vector<double> lambdas;  // short-EOP strengths; MAXUTIL (lambda=0) always runs
  std::vector<uint64_t> seeds;
  int samples_per_step = baseline::kDefaultSampleSize;
  int epochs = baseline::kDefaultEpochs;
  double lr = baseline::kDefaultLearningRate;
};

struct EstimateConfig {
  std::vector<estimation::ProbeKind> probes;
  opt::OptimizationSpec spec;
  int samples = 50000;
  bool export_datasets = false;
};

struct ExperimentConfig {
  std::filesystem::path model_path;
  std::optional<std::string> out_dir;
  std::optional<SolveConfig> solve;
  std::optional<SimulateConfig> simulate;
  std::optional<CompareConfig> compare;
  std::optional<EstimateConfig> estimate;
};

/// Parses the JSON experiment configuration; unknown keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config_json(const std::string& text, const std::string& origin);

}  // namespace fairdyn::io
