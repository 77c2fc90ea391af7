#include "fairdyn/markov.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace fairdyn::markov {

Distribution::Distribution(Eigen::VectorXd probabilities) : p_(std::move(probabilities)) {
  if (p_.size() < 1) fail(Errc::invariant_violation, "distribution must be nonempty");
  for (int i = 0; i < p_.size(); ++i) {
    if (!(p_[i] >= 0.0)) {
      fail(Errc::invariant_violation,
           "distribution entry " + std::to_string(i) + " = " + std::to_string(p_[i]));
    }
  }
  const double sum = p_.sum();
  if (std::abs(sum - 1.0) > kEntryTol) {
    fail(Errc::invariant_violation, "distribution mass " + std::to_string(sum) + " != 1");
  }
}

Distribution Distribution::uniform(int n) {
  return Distribution(Eigen::VectorXd::Constant(n, 1.0 / n));
}

Distribution Distribution::point_mass(int n, int state) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  p[state] = 1.0;
  return Distribution(std::move(p));
}

void validate_kernel(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols() || matrix.rows() < 1) {
    fail(Errc::dimension_mismatch, "kernel must be square, got " + std::to_string(matrix.rows()) +
                                       "x" + std::to_string(matrix.cols()));
  }
  for (int z = 0; z < matrix.rows(); ++z) {
    for (int w = 0; w < matrix.cols(); ++w) {
      if (!(matrix(z, w) >= 0.0)) {
        fail(Errc::negative_entry, "entry (" + std::to_string(z) + "," + std::to_string(w) +
                                       ") = " + std::to_string(matrix(z, w)));
      }
    }
    const double sum = matrix.row(z).sum();
    if (std::abs(sum - 1.0) > kEntryTol) {
      fail(Errc::row_sum_violation,
           "row " + std::to_string(z) + " sums to " + std::to_string(sum));
    }
  }
}

TransitionKernel::TransitionKernel(Eigen::MatrixXd matrix) : m_(std::move(matrix)) {
  validate_kernel(m_);
}

Distribution evolve(const Distribution& mu, const TransitionKernel& kernel) {
  if (mu.size() != kernel.size()) {
    fail(Errc::dimension_mismatch, "distribution size " + std::to_string(mu.size()) +
                                       " vs kernel size " + std::to_string(kernel.size()));
  }
  return Distribution(kernel.matrix().transpose() * mu.vec());
}

namespace {

// Strips the row-sum roundoff that accumulates across repeated products;
// exact powers of row-stochastic matrices are row-stochastic.
void renormalize_rows(Eigen::MatrixXd& m) {
  for (int r = 0; r < m.rows(); ++r) m.row(r) /= m.row(r).sum();
}

}  // namespace

TransitionKernel kernel_power(const TransitionKernel& kernel, long exponent) {
  if (exponent < 1) fail(Errc::invalid_argument, "kernel power requires t >= 1");
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(kernel.size(), kernel.size());
  Eigen::MatrixXd base = kernel.matrix();
  long t = exponent;
  while (t > 0) {
    if (t & 1) {
      result = result * base;
      renormalize_rows(result);
    }
    base = base * base;
    renormalize_rows(base);
    t >>= 1;
  }
  return TransitionKernel(std::move(result));
}

bool check_irreducible(const TransitionKernel& kernel) {
  const Eigen::MatrixXd& k = kernel.matrix();
  Eigen::MatrixXd power = k;
  Eigen::MatrixXd sum = k;
  for (int t = 2; t <= kernel.size(); ++t) {
    power = power * k;
    sum += power;
  }
  return (sum.array() > kPositiveTol).all();
}

bool check_aperiodic(const TransitionKernel& kernel) {
  return (kernel.matrix().diagonal().array() > kPositiveTol).all();
}

Distribution stationary_distribution(const TransitionKernel& kernel) {
  if (!check_irreducible(kernel) || !check_aperiodic(kernel)) {
    fail(Errc::not_convergent, "kernel fails a convergence certificate");
  }
  const int n = kernel.size();
  // Balance equations (K^T - I) mu = 0 with the last equation replaced by the
  // normalization sum(mu) = 1.
  Eigen::MatrixXd a = kernel.matrix().transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b[n - 1] = 1.0;
  Eigen::VectorXd mu = Eigen::FullPivLU<Eigen::MatrixXd>(a).solve(b);

  // Roundoff can leave tiny negative entries; anything material is a failure.
  for (int i = 0; i < n; ++i) {
    if (mu[i] < 0.0) {
      if (mu[i] < -kStationaryTol) {
        fail(Errc::numerical_failure, "stationary entry " + std::to_string(mu[i]));
      }
      mu[i] = 0.0;
    }
  }
  mu /= mu.sum();

  const double residual = (kernel.matrix().transpose() * mu - mu).lpNorm<1>();
  if (residual > kStationaryTol) {
    fail(Errc::numerical_failure, "stationary residual " + std::to_string(residual));
  }
  return Distribution(std::move(mu));
}

double total_variation(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) {
    fail(Errc::dimension_mismatch, "distribution sizes " + std::to_string(p.size()) + " vs " +
                                       std::to_string(q.size()));
  }
  return 0.5 * (p.vec() - q.vec()).lpNorm<1>();
}

}  // namespace fairdyn::markov
