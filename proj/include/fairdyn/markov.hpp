#pragma once

#include <Eigen/Core>

#include "fairdyn/errors.hpp"

namespace fairdyn::markov {

/// Entry and row-sum tolerance for distributions and kernels.
inline constexpr double kEntryTol = 1e-12;
/// Residual bound ||muK - mu||_1 for stationary distributions.
inline constexpr double kStationaryTol = 1e-10;
/// Strict-positivity threshold used by the convergence certificates.
inline constexpr double kPositiveTol = 1e-15;

/// Probability distribution over a finite state space. Entries are
/// nonnegative and sum to 1 within kEntryTol; validated on construction.
class Distribution {
 public:
  explicit Distribution(Eigen::VectorXd probabilities);

  static Distribution uniform(int n);
  static Distribution point_mass(int n, int state);

  int size() const { return static_cast<int>(p_.size()); }
  double operator[](int i) const { return p_[i]; }
  const Eigen::VectorXd& vec() const { return p_; }

 private:
  Eigen::VectorXd p_;
};

/// Row-stochastic transition matrix: entry (z, w) = P(next = w | current = z).
class TransitionKernel {
 public:
  explicit TransitionKernel(Eigen::MatrixXd matrix);

  int size() const { return static_cast<int>(m_.rows()); }
  double operator()(int from, int to) const { return m_(from, to); }
  const Eigen::MatrixXd& matrix() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

/// Throws NegativeEntry / RowSumViolation / DimensionMismatch if the matrix is
/// not a valid row-stochastic kernel.
void validate_kernel(const Eigen::MatrixXd& matrix);

/// One-step evolution mu -> mu K.
Distribution evolve(const Distribution& mu, const TransitionKernel& kernel);

/// K^t for t >= 1 (binary exponentiation).
TransitionKernel kernel_power(const TransitionKernel& kernel, long exponent);

/// Sufficient irreducibility certificate: every entry of sum_{t=1..n} K^t is
/// strictly positive. A kernel failing this may still be irreducible in the
/// graph-theoretic sense; callers treat a failure as "no certificate".
bool check_irreducible(const TransitionKernel& kernel);

/// Sufficient aperiodicity certificate: K(z, z) > 0 for all z.
bool check_aperiodic(const TransitionKernel& kernel);

/// Unique stationary distribution of a kernel passing both certificates,
/// solved from the balance equations with one row replaced by the
/// normalization constraint. Throws NotConvergent if a certificate fails and
/// NumericalFailure if the residual exceeds kStationaryTol.
Distribution stationary_distribution(const TransitionKernel& kernel);

/// Total variation distance, (1/2) sum |p - q|.
double total_variation(const Distribution& p, const Distribution& q);

}  // namespace fairdyn::markov
