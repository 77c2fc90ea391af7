#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "fairdyn/markov.hpp"

namespace fairdyn {

inline constexpr int kNumGroups = 2;

enum class ModelVariant {
  /// Credit-lending chain over feature states x; labels y drawn from ell.
  feature_state,
  /// Chain over a binary qualification state y; features x drawn from f(x|y,s).
  qualification_state,
};

/// Decision table pi(D=1 | x, s), the optimization variable. Row = group,
/// column = state (feature-state models) or feature letter (qualification
/// models). Entries in [0, 1].
class Policy {
 public:
  explicit Policy(Eigen::MatrixXd table);

  static Policy constant(int n, double p);
  static Policy uniform(int n) { return constant(n, 0.5); }

  double operator()(int group, int state) const { return pi_(group, state); }
  int states() const { return static_cast<int>(pi_.cols()); }
  const Eigen::MatrixXd& table() const { return pi_; }

  /// Copy with every entry clamped into [lo, hi].
  Policy clamped(double lo, double hi) const;

 private:
  Eigen::MatrixXd pi_;
};

/// Feature-change dynamics g(k | x, d, y, s): one n x n row-stochastic matrix
/// per (s, d, y) triple, rows indexed by the current state.
class Dynamics {
 public:
  explicit Dynamics(std::array<Eigen::MatrixXd, 8> matrices);

  static int index(int s, int d, int y) { return (s << 2) | (d << 1) | y; }
  const Eigen::MatrixXd& at(int s, int d, int y) const { return t_[index(s, d, y)]; }
  int states() const { return static_cast<int>(t_[0].rows()); }

 private:
  std::array<Eigen::MatrixXd, 8> t_;
};

/// Bundle of state space, group prior gamma(s), label distribution
/// ell(y | x, s), and dynamics. In the qualification-state variant the ell
/// slot is reinterpreted: ell[s] holds f(x | y, s) as a 2 x alphabet matrix
/// (row = qualification y, column = feature letter x), and the chain runs over
/// the two qualification states.
struct GenerativeModel {
  int n = 0;
  Eigen::Vector2d gamma;
  std::array<Eigen::MatrixXd, 2> ell;
  Dynamics dynamics;
  ModelVariant variant = ModelVariant::feature_state;
  int feature_alphabet = 0;  // qualification variant only

  double label_prob(int s, int x) const;
  double feature_prob(int s, int y, int x) const;
  void require_variant(ModelVariant expected) const;
};

/// Validating constructors. ell_rows[s] is 1 x n with P(Y=1 | x, s) for the
/// feature-state model; f[s] is 2 x alphabet with f(x | y, s) for the
/// qualification-state model.
GenerativeModel make_feature_state_model(int n, const Eigen::Vector2d& gamma,
                                         std::array<Eigen::MatrixXd, 2> ell_rows,
                                         Dynamics dynamics);
GenerativeModel make_qualification_model(const Eigen::Vector2d& gamma,
                                         std::array<Eigen::MatrixXd, 2> f, Dynamics dynamics);

/// Group kernel of the feature-state model: marginalizes the decision and the
/// label, K_s(x, k) = sum_{d,y} g(k | x, d, y, s) pi(d | x, s) ell(y | x, s).
markov::TransitionKernel build_group_kernel(const GenerativeModel& model, const Policy& policy,
                                            int group);

/// Group kernel of the qualification-state model: marginalizes the feature and
/// the decision, K_s(y, k) = sum_{x,d} g(k | y, d, s) pi(d | x, s) f(x | y, s).
/// Qualification dynamics carry no y-slot dependence; both y slices of the
/// Dynamics container must hold the same matrix.
markov::TransitionKernel build_group_kernel_qualification(const GenerativeModel& model,
                                                          const Policy& policy, int group);

/// Named dynamics sets. The bundled matrices are printed column-stochastic in
/// their source and are transposed on load so rows index the current state;
/// rows are then renormalized to exact unit sums (the printed values are
/// truncated decimals, off by ~1e-5). A row off by more than 1e-3 before
/// renormalization is rejected.
Dynamics load_dynamics_preset(std::string_view name);
const std::vector<std::string>& dynamics_preset_names();

struct LoadedModel {
  GenerativeModel model;
  std::array<markov::Distribution, 2> mu0;
  std::string dynamics_preset;  // empty when the file carried explicit matrices
};

/// Reads and fully validates a model file (JSON). Schema problems throw
/// SchemaError; out-of-range probabilities throw InvariantViolation with the
/// offending field path.
LoadedModel load_model(const std::filesystem::path& path);
LoadedModel parse_model_json(const std::string& text, const std::string& origin = "<string>");

}  // namespace fairdyn
