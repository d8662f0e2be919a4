#include "mhp/hawkes.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mhp/error.hpp"

namespace mhp {

HawkesGenConfig HawkesGenConfig::uniform(std::size_t num_types, double mu, double alpha,
                                         double beta, double horizon) {
  HawkesGenConfig cfg;
  cfg.num_types = num_types;
  cfg.mu.assign(num_types, mu);
  cfg.alpha.assign(num_types, std::vector<double>(num_types, alpha));
  cfg.beta.assign(num_types, std::vector<double>(num_types, beta));
  cfg.horizon = horizon;
  return cfg;
}

void HawkesGenConfig::validate() const {
  const std::size_t k = num_types;
  if (k == 0) throw std::invalid_argument("hawkes: num_types must be at least 1");
  if (mu.size() != k) throw std::invalid_argument("hawkes: mu must have num_types entries");
  if (alpha.size() != k || beta.size() != k) {
    throw std::invalid_argument("hawkes: alpha and beta must be num_types x num_types");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (!(mu[i] >= 0.0) || !std::isfinite(mu[i])) {
      throw std::invalid_argument("hawkes: mu must be finite and non-negative");
    }
    if (alpha[i].size() != k || beta[i].size() != k) {
      throw std::invalid_argument("hawkes: alpha and beta must be num_types x num_types");
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (!(alpha[i][j] >= 0.0) || !std::isfinite(alpha[i][j])) {
        throw std::invalid_argument("hawkes: alpha must be finite and non-negative");
      }
      if (!(beta[i][j] > 0.0) || !std::isfinite(beta[i][j])) {
        throw std::invalid_argument("hawkes: beta must be finite and positive");
      }
    }
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("hawkes: horizon must be finite and positive");
  }
  if (max_len != 0 && max_len < min_len) {
    throw std::invalid_argument("hawkes: max_len is below min_len");
  }
  const double rho = spectral_radius(*this);
  if (!(rho < 1.0)) {
    throw UnstableConfigError("hawkes: spectral radius of alpha/beta is " + std::to_string(rho) +
                              " (must be < 1 for a stationary process)");
  }
}

double spectral_radius(const HawkesGenConfig& cfg) {
  const auto k = static_cast<Eigen::Index>(cfg.num_types);
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = cfg.alpha[i][j] / cfg.beta[i][j];
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

EventSequence simulate_hawkes_once(const HawkesGenConfig& cfg, Rng& rng) {
  const std::size_t k = cfg.num_types;
  EventSequence seq;
  seq.num_types = static_cast<int>(k);
  // excite[s][d]: current excitation of type d contributed by past type-s events.
  std::vector<std::vector<double>> excite(k, std::vector<double>(k, 0.0));
  std::vector<double> lambda(k);
  auto current_intensity = [&] {
    double total = 0.0;
    for (std::size_t d = 0; d < k; ++d) {
      double v = cfg.mu[d];
      for (std::size_t s = 0; s < k; ++s) v += excite[s][d];
      lambda[d] = v;
      total += v;
    }
    return total;
  };

  const std::size_t stop_after = cfg.max_len == 0 ? 0 : cfg.max_len + 1;
  double t = 0.0;
  while (true) {
    // Excitations only decay between events, so the intensity now bounds it
    // until the next accepted event.
    const double bound = current_intensity();
    if (!(bound > 0.0)) break;
    const double wait = rng.exponential(bound);
    t += wait;
    if (t > cfg.horizon) break;
    for (std::size_t s = 0; s < k; ++s) {
      for (std::size_t d = 0; d < k; ++d) excite[s][d] *= std::exp(-cfg.beta[s][d] * wait);
    }
    const double total = current_intensity();
    if (rng.uniform() * bound > total) continue;
    const std::size_t type = rng.categorical(lambda);
    if (!seq.times.empty() && !(t > seq.times.back())) continue;
    seq.times.push_back(t);
    seq.types.push_back(static_cast<int>(type) + 1);
    for (std::size_t d = 0; d < k; ++d) excite[type][d] += cfg.alpha[type][d];
    if (stop_after != 0 && seq.size() >= stop_after) break;
  }
  return seq;
}

EventSequence simulate_hawkes(const HawkesGenConfig& cfg, Rng& rng) {
  cfg.validate();
  for (std::size_t attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    auto seq = simulate_hawkes_once(cfg, rng);
    const bool long_enough = seq.size() >= cfg.min_len;
    const bool short_enough = cfg.max_len == 0 || seq.size() <= cfg.max_len;
    if (long_enough && short_enough) return seq;
  }
  throw RetryExhaustedError("hawkes: no sequence with length in [" +
                            std::to_string(cfg.min_len) + ", " +
                            (cfg.max_len ? std::to_string(cfg.max_len) : std::string("inf")) +
                            "] after " + std::to_string(cfg.max_retries + 1) + " draws");
}

EventSequence simulate_hawkes(const HawkesGenConfig& cfg) {
  Rng rng(cfg.seed);
  return simulate_hawkes(cfg, rng);
}

HawkesGenConfig synthetic_benchmark_config() {
  constexpr std::size_t k = 5;
  HawkesGenConfig cfg = HawkesGenConfig::uniform(k, 0.07, 0.0, 2.0, 72.0);
  for (std::size_t s = 0; s < k; ++s) {
    cfg.alpha[s][s] = 0.9;
    cfg.alpha[s][(s + 1) % k] = 0.3;
  }
  cfg.min_len = 20;
  cfg.max_len = 100;
  cfg.max_retries = 1000;
  return cfg;
}

namespace {

Dataset draw_split(const HawkesGenConfig& cfg, std::uint64_t seed, std::uint64_t split_id,
                   std::size_t count, const char* name) {
  Dataset ds;
  ds.num_types = static_cast<int>(cfg.num_types);
  ds.split = name;
  ds.sequences.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(Rng::derive(seed, (split_id << 32) | i));
    ds.sequences.push_back(simulate_hawkes(cfg, rng));
  }
  return ds;
}

}  // namespace

SyntheticBenchmark make_synthetic_benchmark(std::uint64_t seed, BenchmarkSizes sizes) {
  const auto cfg = synthetic_benchmark_config();
  return {draw_split(cfg, seed, 0, sizes.train, "train"), draw_split(cfg, seed, 1, sizes.dev, "dev"),
          draw_split(cfg, seed, 2, sizes.test, "test")};
}

}  // namespace mhp
