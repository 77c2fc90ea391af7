#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "fairdyn/simulate.hpp"
#include "support/oracles.hpp"

using namespace fairdyn;
using namespace fairdyn::sim;
using fairdyn::test::random_toy_model;

namespace {

GenerativeModel identity_model(int n) {
  Eigen::Vector2d gamma(0.5, 0.5);
  std::array<Eigen::MatrixXd, 2> ell;
  ell[0] = Eigen::MatrixXd::Constant(1, n, 0.5);
  ell[1] = ell[0];
  std::array<Eigen::MatrixXd, 8> mats;
  for (auto& m : mats) m = Eigen::MatrixXd::Identity(n, n);
  return make_feature_state_model(n, gamma, std::move(ell), Dynamics(std::move(mats)));
}

/// Two-state symmetric chain with second eigenvalue (2a - 1).
GenerativeModel lazy_model(double a) {
  Eigen::Vector2d gamma(0.5, 0.5);
  std::array<Eigen::MatrixXd, 2> ell;
  ell[0] = Eigen::MatrixXd::Constant(1, 2, 0.5);
  ell[1] = ell[0];
  std::array<Eigen::MatrixXd, 8> mats;
  for (auto& m : mats) {
    m.resize(2, 2);
    m << a, 1.0 - a, 1.0 - a, a;
  }
  return make_feature_state_model(2, gamma, std::move(ell), Dynamics(std::move(mats)));
}

}  // namespace

TEST_CASE("identity dynamics freeze the distribution") {
  const GenerativeModel model = identity_model(3);
  const Policy policy = Policy::uniform(3);
  const std::array<markov::Distribution, 2> mu0 = {markov::Distribution::point_mass(3, 1),
                                                   markov::Distribution::point_mass(3, 2)};
  const Trajectory traj = simulate(model, policy, mu0, 10, 0.5);
  REQUIRE(traj.states.size() == 11);
  for (const auto& state : traj.states) {
    CHECK(markov::total_variation(state[0], mu0[0]) == 0.0);
    CHECK(markov::total_variation(state[1], mu0[1]) == 0.0);
  }
  CHECK(detect_convergence(traj, 1e-9) == 0);
}

TEST_CASE("a stationary start stays put") {
  const GenerativeModel model = lazy_model(0.7);
  const Policy policy = Policy::uniform(2);
  const std::array<markov::Distribution, 2> mu0 = {markov::Distribution::uniform(2),
                                                   markov::Distribution::uniform(2)};
  const Trajectory traj = simulate(model, policy, mu0, 50, 0.5);
  for (const auto& state : traj.states) {
    CHECK(markov::total_variation(state[0], mu0[0]) <= 1e-12);
    CHECK(markov::total_variation(state[1], mu0[1]) <= 1e-12);
  }
}

TEST_CASE("three steps match hand iteration") {
  std::mt19937_64 gen(23);
  const GenerativeModel model = random_toy_model(gen, 2);
  const Policy policy = fairdyn::test::random_policy(gen, 2);
  const std::array<markov::Distribution, 2> mu0 = {markov::Distribution::point_mass(2, 0),
                                                   markov::Distribution::point_mass(2, 1)};
  const Trajectory traj = simulate(model, policy, mu0, 3, 0.5);

  for (int s = 0; s < 2; ++s) {
    Eigen::MatrixXd k(2, 2);
    for (int x = 0; x < 2; ++x) {
      for (int to = 0; to < 2; ++to) {
        k(x, to) = fairdyn::test::oracle_kernel_entry(model, policy, s, x, to);
      }
    }
    Eigen::VectorXd mu = mu0[s].vec();
    for (int t = 1; t <= 3; ++t) {
      Eigen::VectorXd next = Eigen::VectorXd::Zero(2);
      for (int to = 0; to < 2; ++to) {
        for (int from = 0; from < 2; ++from) next[to] += mu[from] * k(from, to);
      }
      mu = next;
      CHECK((traj.states[t][s].vec() - mu).lpNorm<1>() <= 1e-14);
    }
  }
}

TEST_CASE("mass is conserved and cumulative series match the running sums") {
  std::mt19937_64 gen(29);
  const GenerativeModel model = random_toy_model(gen, 4);
  const Policy policy = fairdyn::test::random_policy(gen, 4);
  const auto mu0 = fairdyn::test::random_mu_pair(gen, 4);
  const Trajectory traj = simulate(model, policy, mu0, 60, 0.8);

  for (const auto& state : traj.states) {
    CHECK(std::abs(state[0].vec().sum() - 1.0) <= 1e-12);
    CHECK(std::abs(state[1].vec().sum() - 1.0) <= 1e-12);
  }

  std::vector<double> utilities, inequities, eops;
  for (const StepMetrics& m : traj.metrics) {
    utilities.push_back(m.utility);
    inequities.push_back(m.inequity);
    eops.push_back(m.eop);
  }
  CHECK(traj.cum_utility == metrics::cumulative_series(utilities));
  CHECK(traj.cum_inequity == metrics::cumulative_series(inequities));
  CHECK(traj.cum_eop == metrics::cumulative_series(eops));
}

TEST_CASE("TV to the stationary point never increases") {
  for (const uint64_t seed : {1u, 2u, 3u}) {
    std::mt19937_64 gen(seed);
    const GenerativeModel model = random_toy_model(gen, 3);
    const Policy policy = fairdyn::test::random_policy(gen, 3);
    const auto mu0 = fairdyn::test::random_mu_pair(gen, 3);
    const Trajectory traj = simulate(model, policy, mu0, 80, 0.5);

    for (int s = 0; s < 2; ++s) {
      const markov::Distribution target =
          markov::stationary_distribution(build_group_kernel(model, policy, s));
      double previous = markov::total_variation(traj.states[0][s], target);
      for (size_t t = 1; t < traj.states.size(); ++t) {
        const double current = markov::total_variation(traj.states[t][s], target);
        CHECK(current <= previous + 1e-14);
        previous = current;
      }
      // With T = 80 on these well-mixing chains the endpoint is converged.
      CHECK(previous <= 1e-8);
    }
  }
}

TEST_CASE("detect_convergence on a chain with a known contraction rate") {
  // Second eigenvalue 0.4: mu_t(0) = 0.5 + 0.5 * 0.4^t from a point mass, so
  // TV(mu_t, mu_{t+1}) = 0.3 * 0.4^t. The first step under tol is the
  // smallest t with 0.3 * 0.4^t <= tol.
  const GenerativeModel model = lazy_model(0.7);
  const Policy policy = Policy::uniform(2);
  const std::array<markov::Distribution, 2> mu0 = {markov::Distribution::point_mass(2, 0),
                                                   markov::Distribution::point_mass(2, 0)};
  const Trajectory traj = simulate(model, policy, mu0, 60, 0.5);

  const double tol = 1e-6;
  int expected = 0;
  while (0.3 * std::pow(0.4, expected) > tol) ++expected;
  CHECK(detect_convergence(traj, tol) == expected);

  // Huge tolerance: TV is always within 1.
  CHECK(detect_convergence(traj, 1.0) == 0);
  CHECK_THROWS_AS(detect_convergence(traj, 0.0), Error);
}

TEST_CASE("random initial distributions are valid, distinct, and seed-stable") {
  const auto a = random_initial_distributions(0, 10, 4);
  const auto b = random_initial_distributions(0, 10, 4);
  REQUIRE(a.size() == 10);
  for (size_t i = 0; i < a.size(); ++i) {
    for (int s = 0; s < 2; ++s) {
      CHECK(std::abs(a[i][s].vec().sum() - 1.0) <= 1e-12);
      CHECK(markov::total_variation(a[i][s], b[i][s]) == 0.0);
    }
  }
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = i + 1; j < a.size(); ++j) {
      CHECK(markov::total_variation(a[i][0], a[j][0]) > 0.0);
    }
  }
  const auto c = random_initial_distributions(1, 10, 4);
  CHECK(markov::total_variation(a[0][0], c[0][0]) > 0.0);
}

TEST_CASE("multi-start convergence agrees with the stationary solve") {
  std::mt19937_64 gen(31);
  const GenerativeModel model = random_toy_model(gen, 4);
  const Policy policy = fairdyn::test::random_policy(gen, 4);
  const auto starts = random_initial_distributions(7, 10, 4);
  const MultiStartReport report = multi_start_convergence(model, policy, starts, 200, 1e-9, 0.5);
  CHECK(report.certificates_ok);
  CHECK(report.max_pairwise_final_tv <= 1e-8);
  CHECK(report.max_tv_to_stationary <= 1e-8);
  for (const auto& step : report.convergence_steps) CHECK(step.has_value());

  const auto single = multi_start_convergence(model, policy, {starts[0]}, 200, 1e-9, 0.5);
  CHECK(single.max_pairwise_final_tv == 0.0);
}

TEST_CASE("a periodic kernel is flagged as non-convergent") {
  Eigen::Vector2d gamma(0.5, 0.5);
  std::array<Eigen::MatrixXd, 2> ell;
  ell[0] = Eigen::MatrixXd::Constant(1, 2, 0.5);
  ell[1] = ell[0];
  std::array<Eigen::MatrixXd, 8> mats;
  for (auto& m : mats) {
    m.resize(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;  // period-2 swap
  }
  const GenerativeModel model =
      make_feature_state_model(2, gamma, std::move(ell), Dynamics(std::move(mats)));
  const Policy policy = Policy::uniform(2);

  Eigen::VectorXd skew(2);
  skew << 0.9, 0.1;
  const std::vector<std::array<markov::Distribution, 2>> starts = {
      {markov::Distribution(skew), markov::Distribution(skew)},
      {markov::Distribution::point_mass(2, 0), markov::Distribution::point_mass(2, 1)}};
  const MultiStartReport report = multi_start_convergence(model, policy, starts, 7, 1e-9, 0.5);
  CHECK_FALSE(report.certificates_ok);
  CHECK(std::isnan(report.max_tv_to_stationary));
  CHECK(report.max_pairwise_final_tv > 0.1);  // oscillation, no common limit
  for (const auto& step : report.convergence_steps) CHECK_FALSE(step.has_value());
}
