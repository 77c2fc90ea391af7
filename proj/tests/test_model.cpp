#include <doctest.h>

#include <random>
#include <string>

#include "fairdyn/model.hpp"
#include "support/oracles.hpp"

using namespace fairdyn;
using fairdyn::test::oracle_kernel_entry;
using fairdyn::test::oracle_qualification_kernel_entry;
using fairdyn::test::random_policy;
using fairdyn::test::random_toy_model;

namespace {

GenerativeModel toy_feature_model() {
  // n = 2 with simple fractions everywhere.
  Eigen::Vector2d gamma(0.25, 0.75);
  std::array<Eigen::MatrixXd, 2> ell;
  ell[0].resize(1, 2);
  ell[0] << 0.2, 0.8;
  ell[1].resize(1, 2);
  ell[1] << 0.4, 0.6;
  std::array<Eigen::MatrixXd, 8> mats;
  double shift = 0.0;
  for (auto& m : mats) {
    m.resize(2, 2);
    const double a = 0.5 + 0.04 * shift;
    m << a, 1.0 - a, 1.0 - a, a;
    shift += 1.0;
  }
  return make_feature_state_model(2, gamma, std::move(ell), Dynamics(std::move(mats)));
}

Dynamics identity_dynamics(int n) {
  std::array<Eigen::MatrixXd, 8> mats;
  for (auto& m : mats) m = Eigen::MatrixXd::Identity(n, n);
  return Dynamics(std::move(mats));
}

}  // namespace

TEST_CASE("build_group_kernel collapses the decision marginal under pi = 1") {
  const GenerativeModel model = toy_feature_model();
  const Policy approve_all = Policy::constant(2, 1.0);
  for (int s = 0; s < 2; ++s) {
    const markov::TransitionKernel k = build_group_kernel(model, approve_all, s);
    for (int x = 0; x < 2; ++x) {
      for (int to = 0; to < 2; ++to) {
        const double ell = model.label_prob(s, x);
        const double expected = model.dynamics.at(s, 1, 1)(x, to) * ell +
                                model.dynamics.at(s, 1, 0)(x, to) * (1.0 - ell);
        CHECK(k(x, to) == doctest::Approx(expected).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("identity dynamics give the identity kernel for any policy") {
  Eigen::Vector2d gamma(0.5, 0.5);
  std::array<Eigen::MatrixXd, 2> ell;
  ell[0] = Eigen::MatrixXd::Constant(1, 3, 0.5);
  ell[1] = Eigen::MatrixXd::Constant(1, 3, 0.5);
  const GenerativeModel model =
      make_feature_state_model(3, gamma, std::move(ell), identity_dynamics(3));
  std::mt19937_64 gen(7);
  const markov::TransitionKernel k = build_group_kernel(model, random_policy(gen, 3), 1);
  CHECK((k.matrix() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("kernel construction matches the four-term enumeration oracle") {
  for (const uint64_t seed : {1u, 2u, 3u}) {
    std::mt19937_64 gen(seed);
    for (int rep = 0; rep < 40; ++rep) {
      const int n = 2 + static_cast<int>(rng::next_unit(gen) * 3);
      const GenerativeModel model = random_toy_model(gen, n);
      const Policy policy = random_policy(gen, n);
      for (int s = 0; s < 2; ++s) {
        const markov::TransitionKernel k = build_group_kernel(model, policy, s);
        double max_row_error = 0.0;
        for (int x = 0; x < n; ++x) {
          for (int to = 0; to < n; ++to) {
            CHECK(k(x, to) ==
                  doctest::Approx(oracle_kernel_entry(model, policy, s, x, to)).epsilon(1e-12));
          }
          max_row_error = std::max(max_row_error, std::abs(k.matrix().row(x).sum() - 1.0));
        }
        CHECK(max_row_error <= 1e-12);
      }
    }
  }
}

TEST_CASE("kernel construction is affine in the policy") {
  for (const uint64_t seed : {1u, 2u, 3u}) {
    std::mt19937_64 gen(seed);
    const GenerativeModel model = random_toy_model(gen, 4);
    for (int rep = 0; rep < 20; ++rep) {
      const Policy a = random_policy(gen, 4);
      const Policy b = random_policy(gen, 4);
      const double alpha = rng::next_unit(gen);
      const Policy mixed(alpha * a.table() + (1.0 - alpha) * b.table());
      for (int s = 0; s < 2; ++s) {
        const Eigen::MatrixXd lhs = build_group_kernel(model, mixed, s).matrix();
        const Eigen::MatrixXd rhs = alpha * build_group_kernel(model, a, s).matrix() +
                                    (1.0 - alpha) * build_group_kernel(model, b, s).matrix();
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("qualification-state kernels") {
  Eigen::Vector2d gamma(0.5, 0.5);
  std::array<Eigen::MatrixXd, 2> f;
  f[0].resize(2, 2);
  f[0] << 0.7, 0.3, 0.2, 0.8;  // f(x | y, s=0)
  f[1].resize(2, 2);
  f[1] << 0.6, 0.4, 0.1, 0.9;
  std::array<Eigen::MatrixXd, 8> mats;
  for (int s = 0; s < 2; ++s) {
    for (int d = 0; d < 2; ++d) {
      Eigen::MatrixXd g(2, 2);
      const double stay = 0.6 + 0.1 * s + 0.2 * d;
      g << stay, 1.0 - stay, 1.0 - stay, stay;
      mats[Dynamics::index(s, d, 0)] = g;
      mats[Dynamics::index(s, d, 1)] = g;
    }
  }
  const GenerativeModel model = make_qualification_model(gamma, f, Dynamics(std::move(mats)));

  SUBCASE("pi = 1 reduces to the approved dynamics") {
    const markov::TransitionKernel k =
        build_group_kernel_qualification(model, Policy::constant(2, 1.0), 0);
    CHECK((k.matrix() - model.dynamics.at(0, 1, 0)).cwiseAbs().maxCoeff() < 1e-15);
  }

  SUBCASE("decision-independent dynamics ignore the policy") {
    std::array<Eigen::MatrixXd, 8> same;
    Eigen::MatrixXd g(2, 2);
    g << 0.8, 0.2, 0.3, 0.7;
    for (auto& m : same) m = g;
    const GenerativeModel indifferent =
        make_qualification_model(gamma, f, Dynamics(std::move(same)));
    std::mt19937_64 gen(11);
    const markov::TransitionKernel k =
        build_group_kernel_qualification(indifferent, random_policy(gen, 2), 1);
    CHECK((k.matrix() - g).cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("matches the (x, d) enumeration oracle") {
    std::mt19937_64 gen(13);
    for (int rep = 0; rep < 20; ++rep) {
      const Policy policy = random_policy(gen, 2);
      for (int s = 0; s < 2; ++s) {
        const markov::TransitionKernel k = build_group_kernel_qualification(model, policy, s);
        for (int y = 0; y < 2; ++y) {
          for (int to = 0; to < 2; ++to) {
            CHECK(k(y, to) ==
                  doctest::Approx(oracle_qualification_kernel_entry(model, policy, s, y, to))
                      .epsilon(1e-12));
          }
        }
      }
    }
  }

  SUBCASE("feature-state entry points reject the qualification variant") {
    CHECK_THROWS_AS(build_group_kernel(model, Policy::uniform(2), 0), Error);
    const GenerativeModel feature = toy_feature_model();
    CHECK_THROWS_AS(build_group_kernel_qualification(feature, Policy::uniform(2), 0), Error);
  }
}

TEST_CASE("dynamics presets match their printed tables") {
  const Dynamics general = load_dynamics_preset("one-sided-general");

  // T_000 row 0 after transpose (the table is symmetric).
  const Eigen::MatrixXd& t000 = general.at(0, 0, 0);
  CHECK(t000(0, 0) == doctest::Approx(0.9).epsilon(2e-5));
  CHECK(t000(0, 1) == doctest::Approx(0.03333).epsilon(2e-4));

  // T_111: printed column 0 becomes row 0.
  const Eigen::MatrixXd& t111 = general.at(1, 1, 1);
  CHECK(t111(0, 0) == doctest::Approx(0.53333).epsilon(2e-4));
  CHECK(t111(0, 1) == doctest::Approx(0.4).epsilon(2e-4));
  CHECK(t111(0, 2) == doctest::Approx(0.03333).epsilon(2e-4));
  CHECK(t111(0, 3) == doctest::Approx(0.03333).epsilon(2e-4));

  // recourse T_010: every state falls to state 0 with probability 0.9.
  const Dynamics recourse = load_dynamics_preset("recourse");
  const Eigen::MatrixXd& t010 = recourse.at(0, 1, 0);
  for (int x = 0; x < 4; ++x) {
    CHECK(t010(x, 0) == doctest::Approx(0.9).epsilon(2e-5));
  }

  CHECK_THROWS_AS(load_dynamics_preset("two-sided"), Error);
  CHECK(dynamics_preset_names().size() == 6);
}

TEST_CASE("presets with interior policies yield certified positive kernels") {
  Eigen::Vector2d gamma(0.4, 0.6);
  std::array<Eigen::MatrixXd, 2> ell;
  ell[0].resize(1, 4);
  ell[0] << 0.1, 0.4, 0.6, 0.9;
  ell[1] = ell[0];
  std::mt19937_64 gen(3);
  for (const std::string& name : dynamics_preset_names()) {
    const GenerativeModel model =
        make_feature_state_model(4, gamma, ell, load_dynamics_preset(name));
    Eigen::MatrixXd table(2, 4);
    for (int s = 0; s < 2; ++s) {
      for (int x = 0; x < 4; ++x) table(s, x) = 0.05 + 0.9 * rng::next_unit(gen);
    }
    const Policy interior(table);
    for (int s = 0; s < 2; ++s) {
      const markov::TransitionKernel k = build_group_kernel(model, interior, s);
      CHECK(k.matrix().minCoeff() > 0.0);
      CHECK(markov::check_irreducible(k));
      CHECK(markov::check_aperiodic(k));
    }
  }
}

TEST_CASE("load_model on the bundled synthetic file") {
  const LoadedModel loaded =
      load_model(std::string(FAIRDYN_SOURCE_DIR) + "/data/synthetic_model.json");
  CHECK(loaded.model.n == 4);
  CHECK(loaded.model.variant == ModelVariant::feature_state);
  CHECK(loaded.dynamics_preset == "one-sided-general");
  CHECK(loaded.mu0[0].size() == 4);
  CHECK(loaded.model.gamma.sum() == doctest::Approx(1.0).epsilon(1e-15));

  // Preset reference loads the same matrices as the direct call.
  const Dynamics direct = load_dynamics_preset("one-sided-general");
  for (int s = 0; s < 2; ++s) {
    for (int d = 0; d < 2; ++d) {
      for (int y = 0; y < 2; ++y) {
        CHECK((loaded.model.dynamics.at(s, d, y) - direct.at(s, d, y)).cwiseAbs().maxCoeff() ==
              0.0);
      }
    }
  }
}

TEST_CASE("load_model rejects bad files") {
  const std::string valid = R"({
    "variant": "feature-state", "n": 2, "groups": 2,
    "gamma": [0.5, 0.5],
    "mu0": [[0.5, 0.5], [0.25, 0.75]],
    "ell": [[0.2, 0.8], [0.4, 0.6]],
    "dynamics": {"preset": "one-sided-general"}
  })";
  // n = 2 with a 4-state preset: dimension mismatch.
  CHECK_THROWS_AS(parse_model_json(valid), Error);

  const std::string out_of_range = R"({
    "n": 4, "groups": 2,
    "gamma": [0.5, 0.5],
    "mu0": [[0.25, 0.25, 0.25, 0.25], [0.25, 0.25, 0.25, 0.25]],
    "ell": [[0.2, 0.8, 0.5, 1.3], [0.4, 0.6, 0.5, 0.5]],
    "dynamics": {"preset": "one-sided-general"}
  })";
  try {
    parse_model_json(out_of_range);
    FAIL("expected InvariantViolation");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invariant_violation);
    CHECK(std::string(e.what()).find("ell[0][3]") != std::string::npos);
  }

  const std::string unknown_key = R"({
    "n": 4, "groups": 2, "typo": 1,
    "gamma": [0.5, 0.5],
    "mu0": [[0.25, 0.25, 0.25, 0.25], [0.25, 0.25, 0.25, 0.25]],
    "ell": [[0.2, 0.8, 0.5, 0.5], [0.4, 0.6, 0.5, 0.5]],
    "dynamics": {"preset": "one-sided-general"}
  })";
  try {
    parse_model_json(unknown_key);
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::schema_error);
  }
}

TEST_CASE("load_model parses the qualification variant") {
  const std::string text = R"({
    "variant": "qualification-state", "m": 3, "groups": 2,
    "gamma": [0.5, 0.5],
    "mu0": [[0.6, 0.4], [0.3, 0.7]],
    "f": [[[0.5, 0.3, 0.2], [0.1, 0.3, 0.6]], [[0.4, 0.4, 0.2], [0.2, 0.2, 0.6]]],
    "dynamics": {
      "T_00": [[0.9, 0.1], [0.2, 0.8]],
      "T_01": [[0.7, 0.3], [0.1, 0.9]],
      "T_10": [[0.8, 0.2], [0.3, 0.7]],
      "T_11": [[0.6, 0.4], [0.1, 0.9]]
    }
  })";
  const LoadedModel loaded = parse_model_json(text);
  CHECK(loaded.model.variant == ModelVariant::qualification_state);
  CHECK(loaded.model.n == 2);
  CHECK(loaded.model.feature_alphabet == 3);
  CHECK((loaded.model.dynamics.at(0, 1, 0) - loaded.model.dynamics.at(0, 1, 1)).cwiseAbs().maxCoeff() == 0.0);
}
