#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace fairdyn::rng {

// All randomness in the library flows through these helpers so that a seed
// reproduces the same stream on every platform. std::mt19937_64 output is
// fully specified by the standard; the distribution transforms below are
// hand-rolled because the std::*_distribution algorithms are not.

uint64_t splitmix64(uint64_t x);

/// Derives an independent stream seed from (base, stream, index).
uint64_t derive_seed(uint64_t base, uint64_t stream, uint64_t index = 0);

/// Uniform double in (0, 1): top 53 bits of the engine output, offset by half
/// an ulp so 0 is never produced.
double next_unit(std::mt19937_64& gen);

/// Exponential(1) via inversion, -log(U).
double next_exponential(std::mt19937_64& gen);

bool next_bernoulli(std::mt19937_64& gen, double p);

/// Index draw by CDF inversion; probs must be nonnegative and sum to ~1.
int next_categorical(std::mt19937_64& gen, const Eigen::VectorXd& probs);

/// Point on the probability simplex: n independent exponentials, normalized.
Eigen::VectorXd next_simplex(std::mt19937_64& gen, int n);

}  // namespace fairdyn::rng
