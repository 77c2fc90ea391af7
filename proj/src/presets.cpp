#include <array>
#include <cmath>
#include <string>

#include "fairdyn/model.hpp"

namespace fairdyn {

namespace {

using Printed = std::array<std::array<double, 4>, 4>;

// Bundled dynamics tables as printed in their source: entry (k, x) is the
// probability of moving to state k from state x (columns sum to 1), so each
// table is transposed on load. Values are truncated decimals; rows are
// renormalized to exact unit sums afterwards.

// Mostly-stay table shared by every one-sided set (all denied cases).
constexpr Printed kOneSidedStay = {{
    {0.9, 0.03333, 0.03333, 0.03333},
    {0.03333, 0.9, 0.03333, 0.03333},
    {0.03333, 0.03333, 0.9, 0.03333},
    {0.03333, 0.03333, 0.03333, 0.9},
}};

// Score collapses to the bottom bin.
constexpr Printed kDropToBottom = {{
    {0.9, 0.9, 0.9, 0.9},
    {0.03333, 0.03333, 0.03333, 0.03333},
    {0.03333, 0.03333, 0.03333, 0.03333},
    {0.03333, 0.03333, 0.03333, 0.03333},
}};

// Upward moves at three speeds.
constexpr Printed kClimbSlow = {{
    {0.53333, 0.03333, 0.03333, 0.03333},
    {0.4, 0.53333, 0.03333, 0.03333},
    {0.03333, 0.4, 0.53333, 0.03333},
    {0.03333, 0.03333, 0.4, 0.9},
}};

constexpr Printed kClimbMedium = {{
    {0.33333, 0.03333, 0.03333, 0.03333},
    {0.6, 0.33333, 0.03333, 0.03333},
    {0.03333, 0.6, 0.33333, 0.03333},
    {0.03333, 0.03333, 0.6, 0.9},
}};

constexpr Printed kClimbFast = {{
    {0.13333, 0.03333, 0.03333, 0.03333},
    {0.8, 0.13333, 0.03333, 0.03333},
    {0.03333, 0.8, 0.13333, 0.03333},
    {0.033335, 0.03333, 0.8, 0.9},
}};

// Recourse: a denied applicant improves the score a little, at a
// group-dependent speed.
constexpr Printed kRecourseDeniedG0 = {{
    {0.7, 0.03333, 0.03333, 0.03333},
    {0.23333, 0.7, 0.03333, 0.03333},
    {0.03333, 0.23333, 0.7, 0.03333},
    {0.03333, 0.03333, 0.23333, 0.9},
}};

constexpr Printed kRecourseDeniedG1 = {{
    {0.5, 0.03333, 0.03333, 0.03333},
    {0.43333, 0.5, 0.03333, 0.03333},
    {0.03333, 0.43333, 0.5, 0.03333},
    {0.03333, 0.03333, 0.43333, 0.9},
}};

// Discouraged: a denied applicant's score tends to fall.
constexpr Printed kDiscouragedDeniedG0 = {{
    {0.9, 0.63333, 0.13333, 0.03333},
    {0.03333, 0.3, 0.53333, 0.23333},
    {0.03333, 0.03333, 0.3, 0.43333},
    {0.03333, 0.03333, 0.03333, 0.3},
}};

constexpr Printed kDiscouragedDeniedG1 = {{
    {0.9, 0.43333, 0.13333, 0.03333},
    {0.03333, 0.5, 0.33333, 0.23333},
    {0.03333, 0.03333, 0.5, 0.23333},
    {0.03333, 0.03333, 0.03333, 0.5},
}};

Eigen::MatrixXd transpose_and_renormalize(const Printed& printed, const std::string& name) {
  Eigen::MatrixXd m(4, 4);
  for (int x = 0; x < 4; ++x) {
    for (int k = 0; k < 4; ++k) m(x, k) = printed[k][x];
  }
  for (int x = 0; x < 4; ++x) {
    const double sum = m.row(x).sum();
    if (std::abs(sum - 1.0) > 1e-3) {
      fail(Errc::invariant_violation,
           "preset " + name + " row " + std::to_string(x) + " sums to " + std::to_string(sum));
    }
    m.row(x) /= sum;
  }
  return m;
}

// One printed table per T_sdy key, in Dynamics::index order. The key order is
// always (s, d, y), matching how the source tables are labelled.
using PresetLayout = std::array<const Printed*, 8>;

Dynamics assemble(const PresetLayout& layout, const std::string& name) {
  std::array<Eigen::MatrixXd, 8> mats;
  for (int i = 0; i < 8; ++i) mats[i] = transpose_and_renormalize(*layout[i], name);
  return Dynamics(std::move(mats));
}

PresetLayout one_sided_layout(const Printed& t011, const Printed& t111) {
  PresetLayout layout{};
  layout[Dynamics::index(0, 0, 0)] = &kOneSidedStay;    // T_000
  layout[Dynamics::index(0, 0, 1)] = &kOneSidedStay;    // T_001
  layout[Dynamics::index(1, 0, 0)] = &kOneSidedStay;    // T_100
  layout[Dynamics::index(1, 0, 1)] = &kOneSidedStay;    // T_101
  layout[Dynamics::index(0, 1, 0)] = &kDropToBottom;    // T_010
  layout[Dynamics::index(1, 1, 0)] = &kDropToBottom;    // T_110
  layout[Dynamics::index(0, 1, 1)] = &t011;
  layout[Dynamics::index(1, 1, 1)] = &t111;
  return layout;
}

PresetLayout two_sided_layout(const Printed& t00y, const Printed& t10y, const Printed& t01y,
                              const Printed& t11y) {
  // The two-sided tables pair the y slots: T_s d 0 = T_s d 1.
  PresetLayout layout{};
  layout[Dynamics::index(0, 0, 0)] = &t00y;
  layout[Dynamics::index(0, 0, 1)] = &t00y;
  layout[Dynamics::index(1, 0, 0)] = &t10y;
  layout[Dynamics::index(1, 0, 1)] = &t10y;
  layout[Dynamics::index(0, 1, 0)] = &t01y;
  layout[Dynamics::index(0, 1, 1)] = &t01y;
  layout[Dynamics::index(1, 1, 0)] = &t11y;
  layout[Dynamics::index(1, 1, 1)] = &t11y;
  return layout;
}

}  // namespace

Dynamics load_dynamics_preset(std::string_view name) {
  const std::string key(name);
  if (key == "one-sided-general") return assemble(one_sided_layout(kClimbMedium, kClimbSlow), key);
  if (key == "one-sided-slow") return assemble(one_sided_layout(kClimbSlow, kClimbSlow), key);
  if (key == "one-sided-medium")
    return assemble(one_sided_layout(kClimbMedium, kClimbMedium), key);
  if (key == "one-sided-fast") return assemble(one_sided_layout(kClimbFast, kClimbFast), key);
  if (key == "recourse")
    return assemble(
        two_sided_layout(kRecourseDeniedG0, kRecourseDeniedG1, kDropToBottom, kClimbMedium), key);
  if (key == "discouraged")
    return assemble(two_sided_layout(kDiscouragedDeniedG0, kDiscouragedDeniedG1, kDropToBottom,
                                     kClimbMedium),
                    key);
  fail(Errc::unknown_preset, key);
}

const std::vector<std::string>& dynamics_preset_names() {
  static const std::vector<std::string> names = {
      "one-sided-general", "one-sided-slow", "one-sided-medium",
      "one-sided-fast",    "recourse",       "discouraged",
  };
  return names;
}

}  // namespace fairdyn
