#include "mhp/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "mhp/error.hpp"

namespace mhp {

std::string TrainConfig::checkpoint_path() const {
  if (!checkpoint.empty()) return checkpoint;
  return (std::filesystem::path(out.empty() ? "." : out) / "checkpoint.json").string();
}

void TrainConfig::validate() const {
  model.validate();
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("lr must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw std::invalid_argument("adam_eps must be positive");
  if (!(clip_norm >= 0.0)) throw std::invalid_argument("clip_norm must be non-negative");
  if (eval_points < 2) throw std::invalid_argument("eval_points must be at least 2");
}

namespace {

const std::set<std::string>& train_keys() {
  static const std::set<std::string> keys{
      "lr",         "batch_size",     "epochs",        "patience",    "adam_beta1",
      "adam_beta2", "adam_eps",       "clip_norm",     "seed",        "normalize_time",
      "record_timing", "eval_points", "data",          "out",         "checkpoint"};
  return keys;
}

}  // namespace

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = c.model;
  j["lr"] = c.lr;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["patience"] = c.patience;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  j["clip_norm"] = c.clip_norm;
  j["seed"] = c.seed;
  j["normalize_time"] = c.normalize_time;
  j["record_timing"] = c.record_timing;
  j["eval_points"] = c.eval_points;
  j["data"] = c.data;
  j["out"] = c.out;
  j["checkpoint"] = c.checkpoint;
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  nlohmann::json model_keys;
  to_json(model_keys, c.model);
  for (const auto& [key, value] : j.items()) {
    if (!train_keys().count(key) && !model_keys.contains(key)) {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
  try {
    from_json(j, c.model);
    auto read = [&j](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    read("lr", c.lr);
    read("batch_size", c.batch_size);
    read("epochs", c.epochs);
    read("patience", c.patience);
    read("adam_beta1", c.adam_beta1);
    read("adam_beta2", c.adam_beta2);
    read("adam_eps", c.adam_eps);
    read("clip_norm", c.clip_norm);
    read("seed", c.seed);
    read("normalize_time", c.normalize_time);
    read("record_timing", c.record_timing);
    read("eval_points", c.eval_points);
    read("data", c.data);
    read("out", c.out);
    read("checkpoint", c.checkpoint);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
}

Adam::Adam(ParameterStore& store, double lr, double beta1, double beta2, double eps)
    : store_(store), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : store_.all()) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto& params = store_.all();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    const auto g = t.grad();
    auto w = t.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t e = 0; e < w.size(); ++e) {
      m[e] = beta1_ * m[e] + (1.0 - beta1_) * g[e];
      v[e] = beta2_ * v[e] + (1.0 - beta2_) * g[e] * g[e];
      w[e] -= lr_ * (m[e] / c1) / (std::sqrt(v[e] / c2) + eps_);
    }
  }
}

double gradient_norm(const ParameterStore& store) {
  double sq = 0.0;
  for (const auto& p : store.all()) {
    for (double g : p.tensor.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_gradients(ParameterStore& store, double max_norm) {
  const double norm = gradient_norm(store);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    if (!(factor > 0.0)) throw NumericError("gradient clipping factor underflowed");
    for (const auto& p : store.all()) {
      Tensor t = p.tensor;
      for (double& g : t.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

namespace {

// Accuracy and squared gap error over the real positions of a forward pass.
struct PositionStats {
  std::size_t correct = 0;
  std::size_t count = 0;
  double squared_error = 0.0;

  void add(const Batch& batch, const ForwardPass& pass, double time_scale) {
    const std::size_t L = batch.max_len;
    const std::size_t K = static_cast<std::size_t>(batch.num_types);
    const auto logits = pass.type_logits.data();
    const auto tp = pass.time_pred.data();
    for (std::size_t b = 0; b < batch.batch_size; ++b) {
      for (std::size_t j = 0; j + 1 < batch.lengths[b]; ++j) {
        const double* row = logits.data() + (b * L + j) * K;
        const auto best = static_cast<long>(std::max_element(row, row + K) - row);
        correct += best == batch.type(b, j + 1) ? 1 : 0;
        const double prev = j == 0 ? batch.time(b, 0) : tp[b * L + j - 1];
        const double predicted_gap = tp[b * L + j] - prev;
        const double true_gap = batch.time(b, j + 1) - batch.time(b, j);
        const double err = (predicted_gap - true_gap) * time_scale;
        squared_error += err * err;
        ++count;
      }
    }
  }
  double accuracy() const { return count ? 100.0 * correct / static_cast<double>(count) : 0.0; }
  double rmse() const { return count ? std::sqrt(squared_error / static_cast<double>(count)) : 0.0; }
};

Dataset predictable(const Dataset& data) {
  Dataset out;
  out.num_types = data.num_types;
  out.split = data.split;
  for (const auto& s : data.sequences) {
    if (s.size() >= 2) out.sequences.push_back(s);
  }
  return out;
}

void check_types(const Model& model, const Dataset& data) {
  if (static_cast<std::size_t>(data.num_types) != model.config().num_types) {
    throw DataError("dataset has K=" + std::to_string(data.num_types) + " but the model has K=" +
                    std::to_string(model.config().num_types));
  }
}

}  // namespace

EvalMetrics evaluate(const Model& model, const Dataset& data, const EvalOptions& options) {
  check_types(model, data);
  NoGradGuard no_grad;
  const Dataset usable = predictable(data);
  const auto quadrature = Compensator::trapezoid(options.points);
  EvalMetrics m;
  PositionStats stats;
  if (usable.size() == 0) return m;
  for (const auto& batch : make_batches(usable, std::max<std::size_t>(options.batch_size, 1))) {
    const auto pass = model.forward(batch);
    m.log_likelihood += model.log_likelihood(batch, pass, quadrature).item();
    m.num_predictions += batch.num_predictions();
    stats.add(batch, pass, options.time_scale);
  }
  m.log_likelihood -= static_cast<double>(m.num_predictions) * std::log(options.time_scale);
  m.ll_per_event = m.log_likelihood / static_cast<double>(m.num_predictions);
  m.accuracy = stats.accuracy();
  m.rmse = stats.rmse();
  if (!std::isfinite(m.ll_per_event)) throw NumericError("evaluation produced a non-finite LL");
  return m;
}

PoissonBaseline PoissonBaseline::fit(const Dataset& data) {
  const std::size_t K = static_cast<std::size_t>(data.num_types);
  std::vector<double> counts(K, 0.0);
  double events = 0.0;
  double span = 0.0;
  for (const auto& s : data.sequences) {
    if (s.size() < 2) continue;
    span += s.times.back() - s.times.front();
    for (std::size_t i = 1; i < s.size(); ++i) counts[static_cast<std::size_t>(s.types[i] - 1)] += 1;
    events += static_cast<double>(s.size() - 1);
  }
  if (!(span > 0.0)) throw DataError("poisson baseline needs sequences spanning positive time");
  PoissonBaseline p;
  p.rate = events / span;
  // Add-one smoothing keeps types unseen in training at a finite log-probability.
  p.type_probs.resize(K);
  for (std::size_t k = 0; k < K; ++k) p.type_probs[k] = (counts[k] + 1.0) / (events + K);
  return p;
}

double PoissonBaseline::log_likelihood(const EventSequence& seq) const {
  if (seq.size() < 2) return 0.0;
  double ll = -rate * (seq.times.back() - seq.times.front());
  for (std::size_t i = 1; i < seq.size(); ++i) {
    ll += std::log(rate * type_probs.at(static_cast<std::size_t>(seq.types[i] - 1)));
  }
  return ll;
}

double PoissonBaseline::ll_per_event(const Dataset& data) const {
  double ll = 0.0;
  std::size_t n = 0;
  for (const auto& s : data.sequences) {
    if (s.size() < 2) continue;
    ll += log_likelihood(s);
    n += s.size() - 1;
  }
  if (n == 0) throw DataError("no predictable events");
  return ll / static_cast<double>(n);
}

double PoissonBaseline::accuracy(const Dataset& data) const {
  const auto best = static_cast<int>(std::max_element(type_probs.begin(), type_probs.end()) -
                                     type_probs.begin()) + 1;
  std::size_t hit = 0;
  std::size_t n = 0;
  for (const auto& s : data.sequences) {
    for (std::size_t i = 1; i < s.size(); ++i) {
      hit += s.types[i] == best ? 1 : 0;
      ++n;
    }
  }
  return n ? 100.0 * hit / static_cast<double>(n) : 0.0;
}

std::string metrics_csv_header() { return "epoch,split,ll_per_event,accuracy,rmse,seconds"; }

std::string metrics_csv_row(const EpochMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu,%s,%.10f,%.6f,%.10f,%.3f", m.epoch, m.split.c_str(),
                m.ll_per_event, m.accuracy, m.rmse, m.seconds);
  return buf;
}

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& dev_set) {
  config.validate();
  ModelConfig model_config = config.model;
  model_config.num_types = static_cast<std::size_t>(train_set.num_types);
  Model model(model_config, config.seed);
  check_types(model, dev_set);

  CheckpointInfo info;
  info.seed = config.seed;
  if (config.normalize_time) info.time_scale = mean_gap(train_set);
  const Dataset train_data = predictable(scale_time(train_set, info.time_scale));
  const Dataset dev_data = predictable(scale_time(dev_set, info.time_scale));
  if (train_data.size() == 0) throw DataError("training split has no sequence with two events");
  if (dev_data.size() == 0) throw DataError("dev split has no sequence with two events");

  EvalOptions eval_options;
  eval_options.points = config.eval_points;
  eval_options.time_scale = info.time_scale;

  TrainResult result{std::move(model), info, {}, 0};
  Model& m = result.model;
  Adam adam(m.parameters(), config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps);
  auto best = m.parameters().snapshot();
  double best_dev = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  Rng mc_rng(Rng::derive(config.seed, 1));
  std::vector<std::size_t> order(train_data.size());

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(Rng::derive(config.seed, 1000 + epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double epoch_ll = 0.0;
    std::size_t epoch_events = 0;
    PositionStats stats;
    const auto batches = make_batches(train_data, order, config.batch_size);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Batch& batch = batches[b];
      m.parameters().zero_grad();
      const auto pass = m.forward(batch);
      const auto comp = Compensator::monte_carlo(batch, m.config().mc_samples, mc_rng);
      const auto terms = m.losses(batch, pass, comp);
      const double n = static_cast<double>(terms.num_predictions);
      const Tensor loss = terms.total / n;
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b));
      }
      epoch_ll += terms.log_likelihood.item();
      epoch_events += terms.num_predictions;
      stats.add(batch, pass, info.time_scale);
      loss.backward();
      try {
        clip_gradients(m.parameters(), config.clip_norm);
      } catch (const NumericError&) {
        throw NumericError("non-finite gradient at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b));
      }
      adam.step();
    }
    const double train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const auto dev_start = std::chrono::steady_clock::now();
    const auto dev = evaluate(m, dev_data, eval_options);
    const double dev_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - dev_start).count();

    EpochMetrics train_row{epoch, "train",
                           epoch_ll / static_cast<double>(epoch_events) - std::log(info.time_scale),
                           stats.accuracy(), stats.rmse(),
                           config.record_timing ? train_seconds : 0.0};
    EpochMetrics dev_row{epoch, "dev", dev.ll_per_event, dev.accuracy, dev.rmse,
                         config.record_timing ? dev_seconds : 0.0};
    result.history.push_back(train_row);
    result.history.push_back(dev_row);
    result.epochs_run = epoch;

    if (dev.ll_per_event > best_dev) {
      best_dev = dev.ll_per_event;
      best = m.parameters().snapshot();
      result.info.epoch = epoch;
      result.info.dev_ll_per_event = dev.ll_per_event;
      since_best = 0;
    } else if (++since_best >= config.patience && config.patience > 0) {
      break;
    }
  }
  m.parameters().assign(best);
  return result;
}

namespace {

Dataset load_split(const std::filesystem::path& dir, const char* name, bool required) {
  const auto path = dir / (std::string(name) + ".jsonl");
  if (!required && !std::filesystem::exists(path)) return {};
  auto ds = load_jsonl(path.string());
  ds.split = name;
  return ds;
}

}  // namespace

RunSummary run_training(const TrainConfig& config) {
  if (config.data.empty()) throw std::invalid_argument("no data directory given");
  const std::filesystem::path data_dir(config.data);
  if (!std::filesystem::is_directory(data_dir)) {
    throw DataError("data directory " + config.data + " does not exist");
  }
  const Dataset train_set = load_split(data_dir, "train", true);
  const Dataset dev_set = load_split(data_dir, "dev", true);
  const Dataset test_set = load_split(data_dir, "test", false);

  const std::filesystem::path out_dir(config.out.empty() ? "." : config.out);
  std::filesystem::create_directories(out_dir);

  RunSummary run{train(config, train_set, dev_set), std::nullopt, std::nullopt, {}};
  const auto& result = run.result;
  save_checkpoint(config.checkpoint_path(), result.model, result.info);

  const auto baseline = PoissonBaseline::fit(train_set);
  std::vector<EpochMetrics> rows = result.history;
  if (!test_set.sequences.empty()) {
    EvalOptions options;
    options.points = config.eval_points;
    options.time_scale = result.info.time_scale;
    run.test = evaluate(result.model, scale_time(test_set, result.info.time_scale), options);
    run.poisson_ll_per_event = baseline.ll_per_event(test_set);
    rows.push_back({result.info.epoch, "test", run.test->ll_per_event, run.test->accuracy,
                    run.test->rmse, 0.0});
  }

  {
    std::ofstream csv(out_dir / "metrics.csv", std::ios::binary);
    if (!csv) throw DataError("cannot write " + (out_dir / "metrics.csv").string());
    csv << metrics_csv_header() << '\n';
    for (const auto& r : rows) csv << metrics_csv_row(r) << '\n';
  }

  nlohmann::json summary{
      {"arch", to_string(result.model.config().arch)},
      {"seed", config.seed},
      {"epochs_run", result.epochs_run},
      {"best_epoch", result.info.epoch},
      {"best_dev_ll_per_event", result.info.dev_ll_per_event},
      {"time_scale", result.info.time_scale},
      {"num_parameters", result.model.parameters().scalar_count()},
      {"checkpoint", config.checkpoint_path()},
  };
  if (run.test) {
    summary["test"] = {{"ll_per_event", run.test->ll_per_event},
                       {"accuracy", run.test->accuracy},
                       {"rmse", run.test->rmse},
                       {"num_predictions", run.test->num_predictions}};
    summary["poisson_baseline"] = {{"rate", baseline.rate},
                                   {"ll_per_event", *run.poisson_ll_per_event},
                                   {"accuracy", baseline.accuracy(test_set)}};
  }
  {
    std::ofstream js(out_dir / "summary.json", std::ios::binary);
    if (!js) throw DataError("cannot write " + (out_dir / "summary.json").string());
    js << summary.dump(2) << '\n';
  }
  run.summary = std::move(summary);
  return run;
}

}  // namespace mhp
