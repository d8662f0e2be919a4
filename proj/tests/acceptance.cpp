// Acceptance runner: evaluates the nine acceptance criteria and prints one
// PASS/FAIL line for each. Pass criterion numbers as arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mhp/cli.hpp"
#include "mhp/hawkes.hpp"
#include "mhp/ops.hpp"
#include "mhp/ssm.hpp"
#include "mhp/train.hpp"

namespace fs = std::filesystem;
using namespace mhp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

// 1. Gated recurrence on irregular times.
Outcome gated_recurrence_exactness() {
  Rng rng(101);
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    const std::size_t L = 1 + rng.below(50);
    std::vector<double> times(L), x(L);
    double t = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      t += rng.exponential(1.0) + 1e-6;
      times[i] = t;
      x[i] = rng.uniform(-2.0, 2.0);
    }
    DeltaTransform raw;
    raw.raw = true;
    const auto delta = step_sizes(times, raw);
    const Tensor y = selective_scan(Tensor::from({L, 1}, x), Tensor::from({L}, delta),
                                    Tensor::from({1, 1}, {-1.0}), Tensor::ones({L, 1}),
                                    Tensor::ones({L, 1}), Tensor::zeros({1}));
    // Closed form evaluated directly.
    double z = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      const double g = std::exp(prev - times[i]);
      z = g * z + (1.0 - g) * x[i];
      prev = times[i];
      worst = std::max(worst, std::abs(y.at({i, 0}) - z));
    }
  }
  return {worst < 1e-12, fmt("max abs err %.2e over 20 sequences (bound 1e-12)", worst)};
}

// 2. Zero-order hold against Gauss-Legendre quadrature.
double gauss_legendre_zoh(double delta, double a) {
  // 20-point rule on 64 panels.
  static const double nodes[10] = {0.0765265211334973, 0.2277858511416451, 0.3737060887154195,
                                   0.5108670019508271, 0.6360536807265150, 0.7463319064601508,
                                   0.8391169718222188, 0.9122344282513259, 0.9639719272779138,
                                   0.9931285991850949};
  static const double weights[10] = {0.1527533871307258, 0.1491729864726037, 0.1420961093183820,
                                     0.1316886384491766, 0.1181945319615184, 0.1019301198172404,
                                     0.0832767415767048, 0.0626720483341091, 0.0406014298003869,
                                     0.0176140071391521};
  const int panels = 64;
  const double h = delta / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    for (int i = 0; i < 10; ++i) {
      const double off = 0.5 * h * nodes[i];
      total += weights[i] * (std::exp(a * (mid - off)) + std::exp(a * (mid + off)));
    }
  }
  return total * 0.5 * h;
}

Outcome zoh_oracle() {
  double worst = 0.0;
  std::vector<double> mags;
  for (int e = 0; e <= 90; ++e) mags.push_back(1e-8 * std::pow(10.0, e / 10.0));
  for (double m : {9.999e-5, 1e-4, 1.0001e-4}) mags.push_back(m);
  const double b = 1.3;
  for (double m : mags) {
    for (double delta : {0.25, 1.0, 4.0}) {
      const double a = -m / delta;
      const auto step = discretize(delta, a, b);
      const double oracle = gauss_legendre_zoh(delta, a) * b;
      worst = std::max(worst, std::abs(step.b_bar - oracle) / std::abs(oracle));
    }
  }
  return {worst < 1e-8, fmt("max rel err %.2e for |delta a| in [1e-8, 10] (bound 1e-8)", worst)};
}

// 3. Gradients of the total loss against central differences.
double gradient_error(Arch arch) {
  ModelConfig cfg = ModelConfig::defaults(arch);
  cfg.num_types = 2;
  cfg.d_model = 8;
  cfg.d_state = 4;
  cfg.n_layers = 1;
  cfg.attn_blocks = 1;
  cfg.n_heads = 1;
  cfg.mc_samples = 16;
  Model model(cfg, 303);
  auto alpha = model.parameters().get("intensity.alpha").mutable_data();
  alpha[0] = -0.3;
  alpha[1] = 0.4;
  const EventSequence seq{{0.4, 1.1, 1.3, 2.6, 3.0}, {1, 2, 2, 1, 2}, 2};
  const Batch batch = make_batch(seq);
  Rng mc(304);
  const auto comp = Compensator::monte_carlo(batch, cfg.mc_samples, mc);
  auto loss = [&] { return model.losses(batch, model.forward(batch), comp).total; };

  auto& store = model.parameters();
  store.zero_grad();
  loss().backward();
  const double h = 1e-5;
  double worst = 0.0;
  NoGradGuard no_grad;
  for (const auto& p : store.all()) {
    Tensor t = p.tensor;
    const auto g = t.grad();
    auto v = t.mutable_data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double orig = v[i];
      v[i] = orig + h;
      const double up = loss().item();
      v[i] = orig - h;
      const double down = loss().item();
      v[i] = orig;
      const double fd = (up - down) / (2 * h);
      // Entries below 1e-4 are judged on an absolute scale: the central
      // difference itself carries about eps * |loss| / h of rounding noise.
      const double denom = std::max({std::abs(g[i]), std::abs(fd), 1e-4});
      worst = std::max(worst, std::abs(g[i] - fd) / denom);
    }
  }
  return worst;
}

Outcome gradient_suite() {
  const double a = gradient_error(Arch::mhp);
  const double b = gradient_error(Arch::mhp_e);
  return {a < 1e-4 && b < 1e-4,
          fmt("max rel err MHP %.2e, MHP-E %.2e (bound 1e-4)", a, b)};
}

// 4. Constant-intensity likelihood against the Poisson closed form.
Outcome likelihood_oracle() {
  ModelConfig cfg = ModelConfig::defaults(Arch::mhp);
  cfg.num_types = 1;
  cfg.d_model = 8;
  cfg.d_state = 4;
  cfg.n_layers = 1;
  Model model(cfg, 404);
  for (double& w : model.parameters().get("intensity.w").mutable_data()) w = 0.0;
  const double c = 2.3;
  model.parameters().get("intensity.b").mutable_data()[0] = std::log(std::expm1(c));
  Rng rng(405);
  EventSequence seq;
  seq.num_types = 1;
  double t = 0.0;
  for (int i = 0; i < 40; ++i) {
    t += rng.exponential(c);
    seq.times.push_back(t);
    seq.types.push_back(1);
  }
  const double closed = 39.0 * std::log(c) - c * (seq.times.back() - seq.times.front());
  const Batch batch = make_batch(seq);
  const auto pass = model.forward(batch);
  Rng mc(406);
  const double ll_mc = model.log_likelihood(batch, pass, Compensator::monte_carlo(batch, 1000, mc)).item();
  const double ll_q = model.log_likelihood(batch, pass, Compensator::trapezoid(1024)).item();
  const double rel_mc = std::abs(ll_mc - closed) / std::abs(closed);
  const double abs_q = std::abs(ll_q - closed);
  return {rel_mc < 0.01 && abs_q < 1e-6,
          fmt("MC rel err %.2e (bound 1e-2), quadrature abs err %.2e (bound 1e-6)", rel_mc, abs_q)};
}

// 5. Generator statistics.
double ks_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

Outcome generator_statistics() {
  auto cfg = HawkesGenConfig::uniform(1, 0.2, 0.8, 1.0, 2000.0);
  double events = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    cfg.seed = 5000 + seed;
    events += static_cast<double>(simulate_hawkes(cfg).size());
  }
  const double rate = events / (200.0 * cfg.horizon);
  const double rate_err = std::abs(rate - 1.0);

  const double mu = 0.2;
  auto pois = HawkesGenConfig::uniform(1, mu, 0.0, 1.0, 200.0);
  std::vector<double> gaps;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    pois.seed = 6000 + seed;
    double prev = 0.0;
    for (double t : simulate_hawkes(pois).times) {
      gaps.push_back(t - prev);
      prev = t;
    }
  }
  std::sort(gaps.begin(), gaps.end());
  const double n = static_cast<double>(gaps.size());
  double d = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const double cdf = -std::expm1(-mu * gaps[i]);
    d = std::max({d, (i + 1.0) / n - cdf, cdf - i / n});
  }
  const double p = ks_p_value(d, gaps.size());
  return {rate_err < 0.05 && p > 0.01,
          fmt("stationary rate %.4f (target 1.0 +/- 5%%), KS p = %.3f over %.0f gaps (bound > 0.01)",
              rate, p, n)};
}

// 6 and 7. Desk-scale training on the synthetic benchmark.
struct BenchmarkRun {
  bool done = false;
  EvalMetrics mhp, mhp_e;
  double poisson_ll = 0.0;
  double majority = 0.0;
  double seconds_mhp = 0.0, seconds_mhp_e = 0.0;
  std::string error;
};

TrainConfig desk_config(Arch arch) {
  TrainConfig c;
  c.model = ModelConfig::defaults(arch);
  c.model.num_types = 5;
  c.model.d_model = 16;
  c.model.n_layers = 2;
  c.model.attn_blocks = 2;
  c.model.n_heads = 2;
  c.lr = 3e-3;
  c.batch_size = 4;
  c.epochs = 25;
  c.patience = 5;
  c.seed = 17;
  return c;
}

BenchmarkRun& benchmark_run() {
  static BenchmarkRun run;
  if (run.done) return run;
  run.done = true;
  try {
    const auto bench = make_synthetic_benchmark(2024, {200, 200, 200});
    const auto baseline = PoissonBaseline::fit(bench.train);
    run.poisson_ll = baseline.ll_per_event(bench.test);
    run.majority = baseline.accuracy(bench.test);
    for (Arch arch : {Arch::mhp, Arch::mhp_e}) {
      const auto start = std::chrono::steady_clock::now();
      const auto result = train(desk_config(arch), bench.train, bench.dev);
      const auto m = evaluate(result.model, bench.test);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (arch == Arch::mhp) {
        run.mhp = m;
        run.seconds_mhp = secs;
      } else {
        run.mhp_e = m;
        run.seconds_mhp_e = secs;
      }
    }
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  return run;
}

Outcome end_to_end() {
  const auto& run = benchmark_run();
  if (!run.error.empty()) return {false, "training failed: " + run.error};
  const double gain = run.mhp.ll_per_event - run.poisson_ll;
  const double acc_gain = run.mhp.accuracy - run.majority;
  const bool pass = gain >= 0.2 && acc_gain >= 3.0 && run.seconds_mhp <= 600.0;
  return {pass, fmt("test LL %.4f vs Poisson %.4f (gain %.3f, need 0.2); ", run.mhp.ll_per_event,
                    run.poisson_ll, gain) +
                    fmt("accuracy %.2f%% vs majority %.2f%% (need +3); %.0f s", run.mhp.accuracy,
                        run.majority, run.seconds_mhp)};
}

Outcome hybrid_parity() {
  const auto& run = benchmark_run();
  if (!run.error.empty()) return {false, "training failed: " + run.error};
  const double diff = std::abs(run.mhp_e.ll_per_event - run.mhp.ll_per_event);
  const bool finite = std::isfinite(run.mhp_e.ll_per_event);
  const bool pass = finite && diff <= 0.1 && run.seconds_mhp_e <= 900.0;
  return {pass, fmt("MHP-E test LL %.4f vs MHP %.4f (diff %.3f, need <= 0.1); ", run.mhp_e.ll_per_event,
                    run.mhp.ll_per_event, diff) +
                    fmt("%.0f s", run.seconds_mhp_e)};
}

// 8. Padded batches versus per-sequence losses.
Outcome batching_transparency() {
  double worst = 0.0;
  Rng rng(808);
  for (int trial = 0; trial < 20; ++trial) {
    ModelConfig cfg = ModelConfig::defaults(trial % 2 ? Arch::mhp_e : Arch::mhp);
    cfg.num_types = 3;
    cfg.d_model = 8;
    cfg.d_state = 4;
    cfg.n_layers = 2;
    cfg.attn_blocks = 1;
    cfg.n_heads = 2;
    cfg.mc_samples = 10;
    const Model model(cfg, 900 + trial);
    std::vector<EventSequence> seqs;
    const std::size_t B = 2 + rng.below(5);
    for (std::size_t b = 0; b < B; ++b) {
      EventSequence s;
      s.num_types = 3;
      double t = 0.0;
      const std::size_t L = 2 + rng.below(15);
      for (std::size_t i = 0; i < L; ++i) {
        t += rng.exponential(1.0) + 1e-3;
        s.times.push_back(t);
        s.types.push_back(static_cast<int>(rng.below(3)) + 1);
      }
      seqs.push_back(std::move(s));
    }
    const std::uint64_t seed = rng.next();
    const Batch batch = make_batch(seqs);
    Rng mc_a(seed);
    const double total =
        model.losses(batch, model.forward(batch), Compensator::monte_carlo(batch, 10, mc_a)).total.item();
    Rng mc_b(seed);
    double separate = 0.0;
    for (const auto& s : seqs) {
      const Batch one = make_batch(s);
      separate += model.losses(one, model.forward(one), Compensator::monte_carlo(one, 10, mc_b)).total.item();
    }
    worst = std::max(worst, std::abs(total - separate) / std::abs(separate));
  }
  return {worst < 1e-10, fmt("max rel diff %.2e over 20 batches (bound 1e-10)", worst)};
}

// 9. Byte-identical metrics across two CLI pipelines.
std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "mhp_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto cfg_path = root / "config.json";
  {
    nlohmann::json cfg = desk_config(Arch::mhp);
    cfg["epochs"] = 3;
    std::ofstream(cfg_path) << cfg.dump(2);
  }
  std::string train_csv[2], eval_csv[2];
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < 2; ++r) {
    const auto data = (root / ("data" + std::to_string(r))).string();
    const auto out = (root / ("run" + std::to_string(r))).string();
    std::ostringstream sink, err;
    const std::vector<std::vector<std::string>> steps{
        {"mhp", "generate", "--seed", "7", "--out", data, "--train-size", "200"},
        {"mhp", "train", "--config", cfg_path.string(), "--data", data, "--out", out, "--seed", "7"},
        {"mhp", "eval", "--data", data, "--out", out}};
    for (const auto& args : steps) {
      if (run_cli(args, sink, err) != kExitOk) {
        return {false, "pipeline step '" + args[1] + "' failed: " + err.str()};
      }
    }
    train_csv[r] = read_file(fs::path(out) / "metrics.csv");
    eval_csv[r] = read_file(fs::path(out) / "eval_metrics.csv");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  fs::remove_all(root);
  const bool same = !train_csv[0].empty() && train_csv[0] == train_csv[1] && eval_csv[0] == eval_csv[1];
  return {same, std::string(same ? "metrics.csv and eval_metrics.csv identical" : "metrics differ") +
                    fmt(" across two generate/train/eval runs; %.0f s", secs)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gated recurrence exactness", gated_recurrence_exactness},
      {"ZOH oracle", zoh_oracle},
      {"gradient suite", gradient_suite},
      {"likelihood oracle", likelihood_oracle},
      {"generator statistics", generator_statistics},
      {"end-to-end synthetic benchmark", end_to_end},
      {"MHP-E parity", hybrid_parity},
      {"batching transparency", batching_transparency},
      {"determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %d. %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", id,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
