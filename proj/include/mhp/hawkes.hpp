#pragma once

#include <cstdint>
#include <vector>

#include "mhp/dataset.hpp"
#include "mhp/rng.hpp"

namespace mhp {

// Multivariate Hawkes process with exponential kernels:
//   lambda_k(t) = mu_k + sum_{t_i < t} alpha[k_i][k] exp(-beta[k_i][k] (t - t_i)).
// Matrices are indexed [source type][target type], types 0-based here.
struct HawkesGenConfig {
  std::size_t num_types = 1;
  std::vector<double> mu;                  // [K], >= 0
  std::vector<std::vector<double>> alpha;  // [K][K], >= 0
  std::vector<std::vector<double>> beta;   // [K][K], > 0
  double horizon = 100.0;
  // Accepted length range; sequences outside it are discarded and redrawn.
  std::size_t min_len = 0;
  std::size_t max_len = 0;  // 0: unbounded
  std::size_t max_retries = 1000;
  std::uint64_t seed = 0;

  // Constant-parameter convenience constructor.
  static HawkesGenConfig uniform(std::size_t num_types, double mu, double alpha, double beta,
                                 double horizon);

  // Throws std::invalid_argument on bad sizes or values and
  // UnstableConfigError when the spectral radius of alpha/beta is >= 1.
  void validate() const;
};

// Largest eigenvalue modulus of the branching matrix alpha / beta.
double spectral_radius(const HawkesGenConfig& cfg);

// One draw on [0, horizon] by Ogata thinning, ignoring the length bounds.
EventSequence simulate_hawkes_once(const HawkesGenConfig& cfg, Rng& rng);
// Draws until the length lands in [min_len, max_len]; throws
// RetryExhaustedError after max_retries rejected draws.
EventSequence simulate_hawkes(const HawkesGenConfig& cfg, Rng& rng);
// Same, seeded from cfg.seed.
EventSequence simulate_hawkes(const HawkesGenConfig& cfg);

struct SyntheticBenchmark {
  Dataset train;
  Dataset dev;
  Dataset test;
};

struct BenchmarkSizes {
  std::size_t train = 1600;
  std::size_t dev = 200;
  std::size_t test = 200;
};

// Five types, lengths in [20, 100] with mean near 60. Each type excites
// itself and the next type cyclically.
HawkesGenConfig synthetic_benchmark_config();
// Sequence i of split s is drawn from its own stream of `seed`, so each split
// is deterministic and does not depend on the other splits' sizes.
SyntheticBenchmark make_synthetic_benchmark(std::uint64_t seed, BenchmarkSizes sizes = {});

}  // namespace mhp
