#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhp/attention.hpp"
#include "mhp/events.hpp"
#include "mhp/ssm.hpp"

namespace mhp {

enum class Arch { mhp, mhp_e };

std::string to_string(Arch arch);
// Accepts "mhp" and "mhp-e"; throws std::invalid_argument otherwise.
Arch parse_arch(const std::string& name);

struct ModelConfig {
  Arch arch = Arch::mhp;
  std::size_t num_types = 5;
  std::size_t d_model = 64;
  std::size_t d_state = 16;
  std::size_t d_conv = 4;
  std::size_t expand = 2;
  std::size_t n_layers = 4;
  std::size_t mlp_hidden = 0;  // 0: same as d_model
  std::size_t mc_samples = 100;
  double event_loss_weight = 1.0;
  double time_loss_weight = 1e-4;
  DeltaTransform delta;
  // Event term uses the total intensity instead of the type-specific one.
  bool total_intensity_loglik = false;

  // Hybrid encoder only.
  std::size_t attn_blocks = 4;
  std::size_t n_heads = 4;
  std::size_t ff_width = 0;  // 0: 4 * d_model

  // Defaults for an architecture; the hybrid uses two Mamba layers.
  static ModelConfig defaults(Arch arch);

  std::size_t d_inner() const { return expand * d_model; }
  std::size_t mlp_width() const { return mlp_hidden ? mlp_hidden : d_model; }
  std::size_t ff_hidden() const { return ff_width ? ff_width : 4 * d_model; }
  // Throws std::invalid_argument on non-positive sizes or weights.
  void validate() const;
};

// Per-type conditional intensity
// lambda_k(t) = f_k(alpha_k (t - t_j) + w_k . h_j + b_k), f_k the softplus
// with scale beta_k = exp(log_beta_k).
struct IntensityHead {
  Tensor alpha;     // [K]
  Tensor weight;    // [K, d_model]
  Tensor bias;      // [K]
  Tensor log_beta;  // [K]
};

struct PredictionHeads {
  Tensor event;  // [K, d_model]
  Tensor time;   // [1, d_model]
};

// Numerical rule for the integral of the total intensity over each
// inter-event interval: the interval is mapped to [0, 1] and integrated with
// nodes `fractions` and weights `weights` (summing to 1).
struct Compensator {
  // [B, L-1, M] (per-interval random nodes) or [M] (shared nodes).
  Tensor fractions;
  Tensor weights;  // [M]

  static Compensator trapezoid(std::size_t points);
  // M uniform nodes per interval, drawn sequence by sequence in batch order,
  // so a batch and its sequences evaluated one at a time see the same draws.
  static Compensator monte_carlo(const Batch& batch, std::size_t samples, Rng& rng);
};

struct ForwardPass {
  Tensor hidden;         // H: [B, L, d_model]
  Tensor scores;         // w_k . h_j + b_k: [B, L, K]
  Tensor type_logits;    // P_e h_j: [B, L, K]
  Tensor time_pred;      // P_t h_j: [B, L]
};

// Losses summed over the batch.
struct LossTerms {
  Tensor log_likelihood;
  Tensor event_loss;
  Tensor time_loss;
  Tensor total;  // -LL + beta * event + gamma * time
  std::size_t num_predictions = 0;
};

struct Prediction {
  std::vector<double> type_probs;  // softmax over K
  int type = 0;                    // 1-based argmax
  double gap = 0.0;                // predicted gap after the last observed event
  double time = 0.0;               // last observed timestamp plus `gap`
};

class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return config_; }
  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }
  std::size_t mamba_layer_count() const { return layers_.size(); }
  std::size_t attention_block_count() const { return attention_.size(); }
  const IntensityHead& intensity_head() const { return head_; }
  const PredictionHeads& prediction_heads() const { return predict_; }

  // Row i is column k_i of W_e; padded positions embed to zero. [B, L, d_model]
  Tensor embed(const Batch& batch) const;
  // Step sizes from timestamps, [B, L].
  Tensor step_sizes(const Batch& batch) const;
  // Hidden states H, [B, L, d_model]. Row j depends on events 1..j only.
  Tensor encode(const Batch& batch) const;
  // Single sequence, [L, d_model].
  Tensor encode(const EventSequence& seq) const;

  ForwardPass forward(const Batch& batch) const;

  Tensor log_likelihood(const Batch& batch, const ForwardPass& pass,
                        const Compensator& compensator) const;
  LossTerms losses(const Batch& batch, const ForwardPass& pass,
                   const Compensator& compensator) const;

  // lambda_k(t) for k = 1..K given hidden row h_j of H ([L, d_model]) and the
  // elapsed time t - t_j. Throws DomainError if elapsed < 0.
  Tensor intensity(const Tensor& hidden, std::size_t j, double elapsed) const;
  // Same, locating t_j from the sequence.
  std::vector<double> intensity(const EventSequence& seq, const Tensor& hidden, std::size_t j,
                                double t) const;

  // Next-event prediction after the given (non-empty) prefix.
  Prediction predict_next(const EventSequence& prefix) const;

 private:
  ModelConfig config_;
  ParameterStore store_;
  Tensor embedding_;  // W_e: [d_model, K]
  std::vector<MambaBlockParams> layers_;
  std::vector<AttentionBlockParams> attention_;
  Linear mlp1_, mlp2_;
  IntensityHead head_;
  PredictionHeads predict_;
};

}  // namespace mhp
