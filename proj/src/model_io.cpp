#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fairdyn/model.hpp"

namespace fairdyn {

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& origin, const std::string& what) {
  fail(Errc::schema_error, origin + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& origin, const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      schema_fail(origin, "unknown key '" + item.key() + "' in " + where);
    }
  }
}

const json& require_key(const json& obj, const std::string& key, const std::string& origin) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(origin, "missing key '" + key + "'");
  return *it;
}

double as_probability(const json& v, const std::string& origin, const std::string& path) {
  if (!v.is_number()) schema_fail(origin, path + " must be a number");
  const double p = v.get<double>();
  if (!(p >= 0.0 && p <= 1.0)) {
    fail(Errc::invariant_violation,
         origin + ": " + path + " = " + std::to_string(p) + " outside [0,1]");
  }
  return p;
}

Eigen::VectorXd probability_vector(const json& arr, int expected, const std::string& origin,
                                   const std::string& path) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != expected) {
    schema_fail(origin, path + " must be an array of length " + std::to_string(expected));
  }
  Eigen::VectorXd v(expected);
  for (int i = 0; i < expected; ++i) {
    v[i] = as_probability(arr[i], origin, path + "[" + std::to_string(i) + "]");
  }
  return v;
}

/// Distribution row: validated to unit mass within 1e-9 and renormalized to an
/// exact sum so downstream invariants hold at 1e-12.
Eigen::VectorXd distribution_row(const json& arr, int expected, const std::string& origin,
                                 const std::string& path) {
  Eigen::VectorXd v = probability_vector(arr, expected, origin, path);
  const double sum = v.sum();
  if (std::abs(sum - 1.0) > 1e-9) {
    fail(Errc::invariant_violation, origin + ": " + path + " sums to " + std::to_string(sum));
  }
  return v / sum;
}

Eigen::MatrixXd dynamics_matrix(const json& arr, int n, const std::string& origin,
                                const std::string& path) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != n) {
    schema_fail(origin, path + " must be an " + std::to_string(n) + "x" + std::to_string(n) +
                            " matrix");
  }
  Eigen::MatrixXd m(n, n);
  for (int r = 0; r < n; ++r) {
    const Eigen::VectorXd row =
        probability_vector(arr[r], n, origin, path + "[" + std::to_string(r) + "]");
    const double sum = row.sum();
    if (std::abs(sum - 1.0) > 1e-3) {
      fail(Errc::invariant_violation,
           origin + ": " + path + " row " + std::to_string(r) + " sums to " + std::to_string(sum));
    }
    m.row(r) = row.transpose() / sum;
  }
  return m;
}

LoadedModel parse_feature_state(const json& j, const std::string& origin) {
  reject_unknown_keys(j, {"variant", "n", "groups", "gamma", "mu0", "ell", "dynamics"}, origin,
                      "model");
  const json& jn = require_key(j, "n", origin);
  if (!jn.is_number_integer()) schema_fail(origin, "n must be an integer");
  const int n = jn.get<int>();
  if (n < 2) fail(Errc::invariant_violation, origin + ": n = " + std::to_string(n) + " < 2");
  if (require_key(j, "groups", origin).get<int>() != kNumGroups) {
    schema_fail(origin, "groups must be 2");
  }

  const Eigen::VectorXd gamma_vec =
      distribution_row(require_key(j, "gamma", origin), kNumGroups, origin, "gamma");
  const Eigen::Vector2d gamma(gamma_vec[0], gamma_vec[1]);

  const json& jmu0 = require_key(j, "mu0", origin);
  const json& jell = require_key(j, "ell", origin);
  if (!jmu0.is_array() || jmu0.size() != kNumGroups) schema_fail(origin, "mu0 must be 2 x n");
  if (!jell.is_array() || jell.size() != kNumGroups) schema_fail(origin, "ell must be 2 x n");

  std::array<Eigen::MatrixXd, 2> ell;
  std::array<Eigen::VectorXd, 2> mu0;
  for (int s = 0; s < kNumGroups; ++s) {
    mu0[s] = distribution_row(jmu0[s], n, origin, "mu0[" + std::to_string(s) + "]");
    ell[s] = probability_vector(jell[s], n, origin, "ell[" + std::to_string(s) + "]").transpose();
  }

  const json& jdyn = require_key(j, "dynamics", origin);
  if (!jdyn.is_object()) schema_fail(origin, "dynamics must be an object");
  std::string preset_name;
  Dynamics dynamics = [&]() -> Dynamics {
    if (jdyn.contains("preset")) {
      reject_unknown_keys(jdyn, {"preset"}, origin, "dynamics");
      preset_name = jdyn["preset"].get<std::string>();
      Dynamics d = load_dynamics_preset(preset_name);
      if (d.states() != n) {
        fail(Errc::dimension_mismatch, origin + ": preset '" + preset_name + "' is " +
                                           std::to_string(d.states()) + "-state, model has n = " +
                                           std::to_string(n));
      }
      return d;
    }
    std::set<std::string> keys;
    std::array<Eigen::MatrixXd, 8> mats;
    for (int s = 0; s < 2; ++s) {
      for (int d = 0; d < 2; ++d) {
        for (int y = 0; y < 2; ++y) {
          const std::string key =
              "T_" + std::to_string(s) + std::to_string(d) + std::to_string(y);
          keys.insert(key);
          mats[Dynamics::index(s, d, y)] =
              dynamics_matrix(require_key(jdyn, key, origin), n, origin, "dynamics." + key);
        }
      }
    }
    reject_unknown_keys(jdyn, keys, origin, "dynamics");
    return Dynamics(std::move(mats));
  }();

  GenerativeModel model = make_feature_state_model(n, gamma, std::move(ell), std::move(dynamics));
  return LoadedModel{std::move(model),
                     {markov::Distribution(mu0[0]), markov::Distribution(mu0[1])},
                     preset_name};
}

LoadedModel parse_qualification_state(const json& j, const std::string& origin) {
  reject_unknown_keys(j, {"variant", "m", "groups", "gamma", "mu0", "f", "dynamics"}, origin,
                      "model");
  const int m = require_key(j, "m", origin).get<int>();
  if (m < 1) fail(Errc::invariant_violation, origin + ": feature alphabet m must be >= 1");
  if (require_key(j, "groups", origin).get<int>() != kNumGroups) {
    schema_fail(origin, "groups must be 2");
  }

  const Eigen::VectorXd gamma_vec =
      distribution_row(require_key(j, "gamma", origin), kNumGroups, origin, "gamma");
  const Eigen::Vector2d gamma(gamma_vec[0], gamma_vec[1]);

  const json& jf = require_key(j, "f", origin);
  if (!jf.is_array() || jf.size() != kNumGroups) schema_fail(origin, "f must be [group][y][x]");
  std::array<Eigen::MatrixXd, 2> f;
  for (int s = 0; s < kNumGroups; ++s) {
    if (!jf[s].is_array() || jf[s].size() != 2) {
      schema_fail(origin, "f[" + std::to_string(s) + "] must have one row per y in {0,1}");
    }
    f[s].resize(2, m);
    for (int y = 0; y < 2; ++y) {
      f[s].row(y) = distribution_row(jf[s][y], m, origin,
                                     "f[" + std::to_string(s) + "][" + std::to_string(y) + "]")
                        .transpose();
    }
  }

  const json& jmu0 = require_key(j, "mu0", origin);
  if (!jmu0.is_array() || jmu0.size() != kNumGroups) schema_fail(origin, "mu0 must be 2 x 2");
  std::array<Eigen::VectorXd, 2> mu0;
  for (int s = 0; s < kNumGroups; ++s) {
    mu0[s] = distribution_row(jmu0[s], 2, origin, "mu0[" + std::to_string(s) + "]");
  }

  // Qualification dynamics carry no y slot: four matrices keyed T_sd over the
  // binary qualification state, duplicated into both y slices.
  const json& jdyn = require_key(j, "dynamics", origin);
  if (!jdyn.is_object()) schema_fail(origin, "dynamics must be an object");
  std::set<std::string> keys;
  std::array<Eigen::MatrixXd, 8> mats;
  for (int s = 0; s < 2; ++s) {
    for (int d = 0; d < 2; ++d) {
      const std::string key = "T_" + std::to_string(s) + std::to_string(d);
      keys.insert(key);
      Eigen::MatrixXd g =
          dynamics_matrix(require_key(jdyn, key, origin), 2, origin, "dynamics." + key);
      mats[Dynamics::index(s, d, 0)] = g;
      mats[Dynamics::index(s, d, 1)] = std::move(g);
    }
  }
  reject_unknown_keys(jdyn, keys, origin, "dynamics");

  GenerativeModel model =
      make_qualification_model(gamma, std::move(f), Dynamics(std::move(mats)));
  return LoadedModel{std::move(model),
                     {markov::Distribution(mu0[0]), markov::Distribution(mu0[1])},
                     ""};
}

}  // namespace

LoadedModel parse_model_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    schema_fail(origin, e.what());
  }
  if (!j.is_object()) schema_fail(origin, "model file must be a JSON object");

  std::string variant = "feature-state";
  if (j.contains("variant")) variant = j["variant"].get<std::string>();
  if (variant == "feature-state") return parse_feature_state(j, origin);
  if (variant == "qualification-state") return parse_qualification_state(j, origin);
  schema_fail(origin, "unknown variant '" + variant + "'");
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::schema_error, "cannot open model file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model_json(buffer.str(), path.string());
}

}  // namespace fairdyn
