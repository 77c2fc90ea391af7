#include "fairdyn/model.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace fairdyn {

namespace {

void check_probability_table(const Eigen::MatrixXd& table, const std::string& what) {
  for (int r = 0; r < table.rows(); ++r) {
    for (int c = 0; c < table.cols(); ++c) {
      const double v = table(r, c);
      if (!(v >= 0.0 && v <= 1.0)) {
        fail(Errc::invariant_violation, what + "(" + std::to_string(r) + "," + std::to_string(c) +
                                            ") = " + std::to_string(v) + " outside [0,1]");
      }
    }
  }
}

void check_group_prior(const Eigen::Vector2d& gamma) {
  if (!(gamma[0] >= 0.0) || !(gamma[1] >= 0.0)) {
    fail(Errc::invariant_violation, "group prior has a negative entry");
  }
  if (std::abs(gamma.sum() - 1.0) > markov::kEntryTol) {
    fail(Errc::invariant_violation, "group prior mass " + std::to_string(gamma.sum()) + " != 1");
  }
}

}  // namespace

Policy::Policy(Eigen::MatrixXd table) : pi_(std::move(table)) {
  if (pi_.rows() != kNumGroups || pi_.cols() < 1) {
    fail(Errc::dimension_mismatch, "policy table must be 2 x n, got " +
                                       std::to_string(pi_.rows()) + "x" +
                                       std::to_string(pi_.cols()));
  }
  check_probability_table(pi_, "pi");
}

Policy Policy::constant(int n, double p) {
  return Policy(Eigen::MatrixXd::Constant(kNumGroups, n, p));
}

Policy Policy::clamped(double lo, double hi) const {
  return Policy(pi_.cwiseMax(lo).cwiseMin(hi));
}

Dynamics::Dynamics(std::array<Eigen::MatrixXd, 8> matrices) : t_(std::move(matrices)) {
  const auto rows = t_[0].rows();
  for (const auto& m : t_) {
    if (m.rows() != rows || m.cols() != rows) {
      fail(Errc::dimension_mismatch, "dynamics matrices must share one square shape");
    }
    markov::validate_kernel(m);
  }
}

double GenerativeModel::label_prob(int s, int x) const {
  require_variant(ModelVariant::feature_state);
  return ell[s](0, x);
}

double GenerativeModel::feature_prob(int s, int y, int x) const {
  require_variant(ModelVariant::qualification_state);
  return ell[s](y, x);
}

void GenerativeModel::require_variant(ModelVariant expected) const {
  if (variant != expected) {
    fail(Errc::wrong_variant, variant == ModelVariant::feature_state
                                  ? "operation requires the qualification-state variant"
                                  : "operation requires the feature-state variant");
  }
}

GenerativeModel make_feature_state_model(int n, const Eigen::Vector2d& gamma,
                                         std::array<Eigen::MatrixXd, 2> ell_rows,
                                         Dynamics dynamics) {
  if (n < 2) fail(Errc::invariant_violation, "state space needs n >= 2");
  if (dynamics.states() != n) {
    fail(Errc::dimension_mismatch, "dynamics are " + std::to_string(dynamics.states()) +
                                       "-state, model has n = " + std::to_string(n));
  }
  check_group_prior(gamma);
  for (int s = 0; s < kNumGroups; ++s) {
    if (ell_rows[s].rows() != 1 || ell_rows[s].cols() != n) {
      fail(Errc::dimension_mismatch, "ell[" + std::to_string(s) + "] must be 1 x n");
    }
    check_probability_table(ell_rows[s], "ell[" + std::to_string(s) + "]");
  }
  return GenerativeModel{n, gamma, std::move(ell_rows), std::move(dynamics),
                         ModelVariant::feature_state, 0};
}

GenerativeModel make_qualification_model(const Eigen::Vector2d& gamma,
                                         std::array<Eigen::MatrixXd, 2> f, Dynamics dynamics) {
  if (dynamics.states() != 2) {
    fail(Errc::dimension_mismatch, "qualification dynamics run over the binary state {0,1}");
  }
  check_group_prior(gamma);
  const auto alphabet = f[0].cols();
  for (int s = 0; s < kNumGroups; ++s) {
    if (f[s].rows() != 2 || f[s].cols() != alphabet || alphabet < 1) {
      fail(Errc::dimension_mismatch, "f[" + std::to_string(s) + "] must be 2 x alphabet");
    }
    check_probability_table(f[s], "f[" + std::to_string(s) + "]");
    for (int y = 0; y < 2; ++y) {
      const double sum = f[s].row(y).sum();
      if (std::abs(sum - 1.0) > markov::kEntryTol) {
        fail(Errc::invariant_violation, "f[" + std::to_string(s) + "] row " + std::to_string(y) +
                                            " sums to " + std::to_string(sum));
      }
    }
  }
  // Both y slices must agree: the current state already is y.
  for (int s = 0; s < kNumGroups; ++s) {
    for (int d = 0; d < 2; ++d) {
      if ((dynamics.at(s, d, 0) - dynamics.at(s, d, 1)).cwiseAbs().maxCoeff() > 0.0) {
        fail(Errc::invariant_violation,
             "qualification dynamics must not depend on the y slot (s=" + std::to_string(s) +
                 ", d=" + std::to_string(d) + ")");
      }
    }
  }
  return GenerativeModel{2,
                         gamma,
                         std::move(f),
                         std::move(dynamics),
                         ModelVariant::qualification_state,
                         static_cast<int>(alphabet)};
}

markov::TransitionKernel build_group_kernel(const GenerativeModel& model, const Policy& policy,
                                            int group) {
  model.require_variant(ModelVariant::feature_state);
  if (policy.states() != model.n) {
    fail(Errc::dimension_mismatch, "policy has " + std::to_string(policy.states()) +
                                       " states, model has " + std::to_string(model.n));
  }
  const int n = model.n;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int d = 0; d < 2; ++d) {
    for (int y = 0; y < 2; ++y) {
      Eigen::VectorXd weight(n);
      for (int x = 0; x < n; ++x) {
        const double pd = d == 1 ? policy(group, x) : 1.0 - policy(group, x);
        const double py = y == 1 ? model.label_prob(group, x) : 1.0 - model.label_prob(group, x);
        weight[x] = pd * py;
      }
      k += weight.asDiagonal() * model.dynamics.at(group, d, y);
    }
  }
  return markov::TransitionKernel(std::move(k));
}

markov::TransitionKernel build_group_kernel_qualification(const GenerativeModel& model,
                                                          const Policy& policy, int group) {
  model.require_variant(ModelVariant::qualification_state);
  if (policy.states() != model.feature_alphabet) {
    fail(Errc::dimension_mismatch, "policy runs over " + std::to_string(policy.states()) +
                                       " feature letters, model has " +
                                       std::to_string(model.feature_alphabet));
  }
  // a_d(y) = sum_x pi(d | x, s) f(x | y, s); then K = sum_d diag(a_d) G_{s,d}.
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2, 2);
  for (int d = 0; d < 2; ++d) {
    Eigen::VectorXd weight(2);
    for (int y = 0; y < 2; ++y) {
      double a = 0.0;
      for (int x = 0; x < model.feature_alphabet; ++x) {
        const double pd = d == 1 ? policy(group, x) : 1.0 - policy(group, x);
        a += pd * model.feature_prob(group, y, x);
      }
      weight[y] = a;
    }
    k += weight.asDiagonal() * model.dynamics.at(group, d, 0);
  }
  return markov::TransitionKernel(std::move(k));
}

}  // namespace fairdyn
