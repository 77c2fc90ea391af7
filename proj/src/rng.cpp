#include "fairdyn/rng.hpp"

#include <cmath>

#include "fairdyn/errors.hpp"

namespace fairdyn::rng {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t base, uint64_t stream, uint64_t index) {
  return splitmix64(splitmix64(base ^ stream) + index);
}

double next_unit(std::mt19937_64& gen) {
  return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
}

double next_exponential(std::mt19937_64& gen) { return -std::log(next_unit(gen)); }

bool next_bernoulli(std::mt19937_64& gen, double p) { return next_unit(gen) < p; }

int next_categorical(std::mt19937_64& gen, const Eigen::VectorXd& probs) {
  if (probs.size() == 0) fail(Errc::invalid_argument, "empty categorical distribution");
  const double u = next_unit(gen);
  double cum = 0.0;
  for (int i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  // u landed in the roundoff gap past the accumulated mass
  return static_cast<int>(probs.size()) - 1;
}

Eigen::VectorXd next_simplex(std::mt19937_64& gen, int n) {
  if (n < 1) fail(Errc::invalid_argument, "simplex dimension must be positive");
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = next_exponential(gen);
  return v / v.sum();
}

}  // namespace fairdyn::rng
