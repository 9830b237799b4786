#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace bnrl {

/// Seeded generator plus the handful of laws the sampler needs. Draw order is
/// fixed by the callers, so a seed determines a chain bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();                        // [0, 1)
  int uniform_int(int n);                  // {0, ..., n-1}
  double normal(double mean = 0.0, double sd = 1.0);
  double gamma(double shape, double scale = 1.0);
  double beta(double a, double b);
  double inverse_gamma(double shape, double scale);
  bool bernoulli(double p);
  /// Index drawn with probability proportional to weights.
  int categorical(std::span<const double> weights);
  /// Index drawn with probability proportional to exp(log_weights).
  int categorical_log(std::span<const double> log_weights);
  std::vector<double> dirichlet(std::span<const double> alpha);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace bnrl
