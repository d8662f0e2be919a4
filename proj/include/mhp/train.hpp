#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mhp/checkpoint.hpp"
#include "mhp/dataset.hpp"
#include "mhp/model.hpp"

namespace mhp {

struct TrainConfig {
  ModelConfig model;  // model.arch selects MHP or MHP-E
  double lr = 1e-4;
  std::size_t batch_size = 4;
  std::size_t epochs = 50;
  std::size_t patience = 10;  // epochs without dev improvement before stopping
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 10.0;  // 0 disables clipping
  std::uint64_t seed = 0;
  bool normalize_time = false;  // divide timestamps by the mean training gap
  bool record_timing = false;   // fill the metrics "seconds" column
  std::size_t eval_points = 1024;  // trapezoid nodes per interval for reported LL
  std::string data;        // directory with train.jsonl, dev.jsonl, test.jsonl
  std::string out;         // directory for checkpoint.json, metrics.csv, summary.json
  std::string checkpoint;  // explicit checkpoint path (defaults to <out>/checkpoint.json)

  std::string checkpoint_path() const;
  // Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

// Flat JSON object: training keys plus every ModelConfig key. Unknown keys
// are rejected with std::invalid_argument.
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

class Adam {
 public:
  Adam(ParameterStore& store, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step();
  std::size_t steps() const { return t_; }

 private:
  ParameterStore& store_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Global L2 norm of all gradients.
double gradient_norm(const ParameterStore& store);
// Rescales every gradient by min(1, max_norm / norm) and returns the norm
// before clipping. Throws NumericError on a non-finite norm.
double clip_gradients(ParameterStore& store, double max_norm);

struct EvalMetrics {
  double log_likelihood = 0.0;  // summed over sequences
  std::size_t num_predictions = 0;
  double ll_per_event = 0.0;
  double accuracy = 0.0;  // percent
  double rmse = 0.0;
};

struct EvalOptions {
  std::size_t points = 1024;
  std::size_t batch_size = 16;
  // Timestamps seen by the model were divided by this; metrics are reported
  // in the original units.
  double time_scale = 1.0;
};

// LL per event = sum LL / sum (n - 1) with trapezoid quadrature; accuracy
// compares argmax of the type head at event j with k_{j+1}; RMSE compares
// predicted and true gaps. Throws DataError when K differs from the model's.
EvalMetrics evaluate(const Model& model, const Dataset& data, const EvalOptions& options = {});

// Marked homogeneous Poisson process: lambda_k = rate * type_probs[k], with
// the pooled rate MLE (n - 1) / (t_n - t_1) and empirical type frequencies
// over the predicted events 2..n.
struct PoissonBaseline {
  double rate = 0.0;
  std::vector<double> type_probs;

  static PoissonBaseline fit(const Dataset& data);
  // Same per-event convention as the model (events 2..n over [t_1, t_n]).
  double log_likelihood(const EventSequence& seq) const;
  double ll_per_event(const Dataset& data) const;
  // Percent of predicted events equal to the most probable type.
  double accuracy(const Dataset& data) const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::string split;
  double ll_per_event = 0.0;
  double accuracy = 0.0;
  double rmse = 0.0;
  double seconds = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const EpochMetrics& m);

struct TrainResult {
  Model model;  // parameters of the best dev epoch
  CheckpointInfo info;
  std::vector<EpochMetrics> history;
  std::size_t epochs_run = 0;
};

// Trains on `train`, selecting the epoch with the best dev LL per event.
// Throws NumericError naming the epoch and batch on a non-finite loss.
TrainResult train(const TrainConfig& config, const Dataset& train, const Dataset& dev);

struct RunSummary {
  TrainResult result;
  std::optional<EvalMetrics> test;
  std::optional<double> poisson_ll_per_event;
  nlohmann::json summary;
};

// Reads <data>/{train,dev,test}.jsonl, trains, evaluates on test when present,
// and writes checkpoint, metrics.csv (one train and one dev row per epoch,
// then a test row) and summary.json into `out`.
RunSummary run_training(const TrainConfig& config);

}  // namespace mhp
