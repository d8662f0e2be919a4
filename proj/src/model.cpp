#include "mhp/model.hpp"

#include <algorithm>
#include <cmath>

#include "mhp/error.hpp"
#include "ops_internal.hpp"

namespace mhp {

std::string to_string(Arch arch) { return arch == Arch::mhp ? "mhp" : "mhp-e"; }

Arch parse_arch(const std::string& name) {
  if (name == "mhp") return Arch::mhp;
  if (name == "mhp-e" || name == "mhp_e") return Arch::mhp_e;
  throw std::invalid_argument("unknown architecture '" + name + "' (expected mhp or mhp-e)");
}

ModelConfig ModelConfig::defaults(Arch arch) {
  ModelConfig c;
  c.arch = arch;
  if (arch == Arch::mhp_e) c.n_layers = 2;
  return c;
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(num_types, "num_types");
  positive(d_model, "d_model");
  positive(d_state, "d_state");
  positive(d_conv, "d_conv");
  positive(expand, "expand");
  positive(n_layers, "n_layers");
  positive(mc_samples, "mc_samples");
  if (event_loss_weight < 0 || time_loss_weight < 0) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
  if (!(delta.min > 0) || delta.max < delta.min) {
    throw std::invalid_argument("delta clamp bounds must satisfy 0 < min <= max");
  }
  if (arch == Arch::mhp_e && attn_blocks > 0) {
    positive(n_heads, "n_heads");
    if (d_model % n_heads != 0) throw std::invalid_argument("d_model must be divisible by n_heads");
  }
}

Compensator Compensator::trapezoid(std::size_t points) {
  if (points < 2) throw std::invalid_argument("trapezoid rule needs at least two points");
  std::vector<double> nodes(points);
  std::vector<double> weights(points, 1.0 / static_cast<double>(points - 1));
  for (std::size_t s = 0; s < points; ++s) {
    nodes[s] = static_cast<double>(s) / static_cast<double>(points - 1);
  }
  weights.front() *= 0.5;
  weights.back() *= 0.5;
  return {Tensor::from({points}, std::move(nodes)), Tensor::from({points}, std::move(weights))};
}

Compensator Compensator::monte_carlo(const Batch& batch, std::size_t samples, Rng& rng) {
  if (samples == 0) throw std::invalid_argument("monte carlo compensator needs samples > 0");
  const std::size_t intervals = batch.max_len > 0 ? batch.max_len - 1 : 0;
  std::vector<double> nodes(batch.batch_size * intervals * samples, 0.5);
  for (std::size_t b = 0; b < batch.batch_size; ++b) {
    const std::size_t real = batch.lengths[b] > 0 ? batch.lengths[b] - 1 : 0;
    for (std::size_t j = 0; j < real; ++j) {
      for (std::size_t s = 0; s < samples; ++s) {
        nodes[(b * intervals + j) * samples + s] = rng.uniform();
      }
    }
  }
  return {Tensor::from({batch.batch_size, intervals, samples}, std::move(nodes)),
          Tensor::full({samples}, 1.0 / static_cast<double>(samples))};
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const std::size_t D = config_.d_model;
  const std::size_t K = config_.num_types;

  embedding_ = store_.add("embedding.W_e", uniform_init({D, K}, 1.0, rng));
  for (std::size_t i = 0; i < config_.n_layers; ++i) {
    layers_.push_back(make_mamba_block(store_, "layers." + std::to_string(i), D, config_.d_state,
                                       config_.d_conv, config_.expand, rng));
  }
  if (config_.arch == Arch::mhp_e) {
    for (std::size_t i = 0; i < config_.attn_blocks; ++i) {
      attention_.push_back(make_attention_block(store_, "attention." + std::to_string(i), D,
                                                config_.n_heads, config_.ff_hidden(), rng));
    }
  }
  mlp1_ = make_linear(store_, "mlp.l1", D, config_.mlp_width(), true, rng);
  mlp2_ = make_linear(store_, "mlp.l2", config_.mlp_width(), D, true, rng);

  head_.alpha = store_.add("intensity.alpha", Tensor::zeros({K}));
  head_.weight = store_.add("intensity.w", fan_in_init({K, D}, D, rng));
  head_.bias = store_.add("intensity.b", Tensor::zeros({K}));
  head_.log_beta = store_.add("intensity.log_beta", Tensor::zeros({K}));

  predict_.event = store_.add("predict.P_e", fan_in_init({K, D}, D, rng));
  predict_.time = store_.add("predict.P_t", fan_in_init({1, D}, D, rng));
}

Tensor Model::embed(const Batch& batch) const {
  if (static_cast<std::size_t>(batch.num_types) != config_.num_types) {
    throw DataError("batch has K=" + std::to_string(batch.num_types) + " but the model has K=" +
                    std::to_string(config_.num_types));
  }
  for (long t : batch.types) {
    if (t != Batch::kPadType && (t < 0 || t >= static_cast<long>(config_.num_types))) {
      throw IndexError("event type " + std::to_string(t + 1) + " out of range 1.." +
                       std::to_string(config_.num_types));
    }
  }
  const Tensor rows = index_select(transpose(embedding_), 0, batch.types);
  return reshape(rows, {batch.batch_size, batch.max_len, config_.d_model});
}

Tensor Model::step_sizes(const Batch& batch) const {
  std::vector<double> deltas;
  deltas.reserve(batch.times.size());
  for (std::size_t b = 0; b < batch.batch_size; ++b) {
    const std::span<const double> row(batch.times.data() + b * batch.max_len, batch.max_len);
    auto d = mhp::step_sizes(row, config_.delta);
    deltas.insert(deltas.end(), d.begin(), d.end());
  }
  return Tensor::from({batch.batch_size, batch.max_len}, std::move(deltas));
}

Tensor Model::encode(const Batch& batch) const {
  if (batch.max_len == 0) throw DataError("cannot encode an empty batch");
  const Tensor delta = step_sizes(batch);
  Tensor x = embed(batch);
  for (const auto& layer : layers_) x = mamba_block(x, delta, layer);
  for (const auto& block : attention_) x = attention_block(x, block);
  return mlp2_(silu(mlp1_(x)));
}

Tensor Model::encode(const EventSequence& seq) const {
  const Tensor h = encode(make_batch(seq));
  return reshape(h, {seq.size(), config_.d_model});
}

ForwardPass Model::forward(const Batch& batch) const {
  ForwardPass pass;
  pass.hidden = encode(batch);
  pass.scores = matmul(pass.hidden, transpose(head_.weight)) + head_.bias;
  pass.type_logits = matmul(pass.hidden, transpose(predict_.event));
  pass.time_pred = reshape(matmul(pass.hidden, transpose(predict_.time)),
                           {batch.batch_size, batch.max_len});
  return pass;
}

namespace {

struct IntervalData {
  Tensor gaps;  // [B, L-1]
  Tensor mask;  // [B, L-1]
  std::vector<long> next_types;  // [B * (L-1)], 0-based; pads mapped to 0
};

IntervalData intervals(const Batch& batch) {
  for (auto len : batch.lengths) {
    if (len < 2) throw DataError("sequence too short: need at least two events, got " + std::to_string(len));
  }
  const std::size_t B = batch.batch_size;
  const std::size_t n = batch.max_len - 1;
  std::vector<double> gaps(B * n), mask(B * n);
  std::vector<long> next(B * n);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t j = 0; j < n; ++j) {
      gaps[b * n + j] = batch.time(b, j + 1) - batch.time(b, j);
      mask[b * n + j] = j + 1 < batch.lengths[b] ? 1.0 : 0.0;
      next[b * n + j] = std::max(0L, batch.type(b, j + 1));
    }
  }
  return {Tensor::from({B, n}, std::move(gaps)), Tensor::from({B, n}, std::move(mask)),
          std::move(next)};
}

// Same quantity as the differentiable path, computed in place; used when no
// gradient is needed, where the [B, n, M, K] intermediates dominate the cost.
double plain_compensator(const Batch& batch, const Tensor& scores, const IntensityHead& head,
                         const Compensator& compensator) {
  const std::size_t L = batch.max_len;
  const std::size_t n = L - 1;
  const std::size_t K = head.alpha.numel();
  const std::size_t M = compensator.weights.numel();
  const auto s = scores.data();
  const auto alpha = head.alpha.data();
  const auto log_beta = head.log_beta.data();
  const auto frac = compensator.fractions.data();
  const auto w = compensator.weights.data();
  const bool shared = compensator.fractions.rank() == 1;
  std::vector<double> beta(K);
  for (std::size_t k = 0; k < K; ++k) beta[k] = std::exp(log_beta[k]);
  double total = 0.0;
  for (std::size_t b = 0; b < batch.batch_size; ++b) {
    for (std::size_t j = 0; j + 1 < batch.lengths[b]; ++j) {
      const double gap = batch.time(b, j + 1) - batch.time(b, j);
      const double* row = s.data() + (b * L + j) * K;
      const double* f = shared ? frac.data() : frac.data() + (b * n + j) * M;
      double integral = 0.0;
      for (std::size_t m = 0; m < M; ++m) {
        double lam = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          lam += beta[k] * stable_softplus((row[k] + f[m] * gap * alpha[k]) / beta[k]);
        }
        integral += lam * w[m];
      }
      total += integral * gap;
    }
  }
  return total;
}

}  // namespace

Tensor Model::log_likelihood(const Batch& batch, const ForwardPass& pass,
                             const Compensator& compensator) const {
  const auto iv = intervals(batch);
  const std::size_t B = batch.batch_size;
  const std::size_t n = batch.max_len - 1;
  const std::size_t K = config_.num_types;
  const Tensor beta = exp(head_.log_beta);

  // Intensity at each event t_{j+1} from the state after event j.
  const Tensor prev_scores = slice(pass.scores, 1, 0, n);  // [B, n, K]
  const Tensor gaps3 = reshape(iv.gaps, {B, n, 1});
  const Tensor at_events = softplus(prev_scores + gaps3 * head_.alpha, beta);
  const Tensor event_lambda = config_.total_intensity_loglik
                                  ? sum(at_events, -1)
                                  : take_along_last(at_events, iv.next_types);
  const Tensor event_term = sum(log(event_lambda) * iv.mask);

  // Integral of the total intensity over each interval.
  const std::size_t M = compensator.weights.numel();
  if (!grad_enabled()) {
    return event_term - Tensor::scalar(plain_compensator(batch, pass.scores, head_, compensator));
  }
  const Tensor offsets = reshape(compensator.fractions * gaps3, {B, n, M, 1});  // [B, n, M, 1]
  const Tensor args = reshape(prev_scores, {B, n, 1, K}) + offsets * head_.alpha;
  const Tensor total = sum(softplus(args, beta), -1);                 // [B, n, M]
  const Tensor integral = matmul(total, compensator.weights) * iv.gaps;  // [B, n]
  const Tensor compensator_term = sum(integral * iv.mask);

  return event_term - compensator_term;
}

LossTerms Model::losses(const Batch& batch, const ForwardPass& pass,
                        const Compensator& compensator) const {
  LossTerms out;
  out.log_likelihood = log_likelihood(batch, pass, compensator);
  const auto iv = intervals(batch);
  const std::size_t B = batch.batch_size;
  const std::size_t n = batch.max_len - 1;

  const Tensor log_probs = log_softmax(slice(pass.type_logits, 1, 0, n), -1);
  out.event_loss = -sum(take_along_last(log_probs, iv.next_types) * iv.mask);

  // Predicted gaps t^_{j+1} - t^_j with t^_1 := t_1.
  std::vector<double> first(B);
  for (std::size_t b = 0; b < B; ++b) first[b] = batch.time(b, 0);
  const Tensor predicted_next = slice(pass.time_pred, 1, 0, n);
  const Tensor predicted_prev =
      concat({Tensor::from({B, 1}, std::move(first)), slice(pass.time_pred, 1, 0, n - 1)}, 1);
  const Tensor err = iv.gaps - (predicted_next - predicted_prev);
  out.time_loss = sum(square(err) * iv.mask);

  out.total = -out.log_likelihood + config_.event_loss_weight * out.event_loss +
              config_.time_loss_weight * out.time_loss;
  out.num_predictions = batch.num_predictions();
  return out;
}

Tensor Model::intensity(const Tensor& hidden, std::size_t j, double elapsed) const {
  if (elapsed < 0) throw DomainError("intensity queried before the conditioning event");
  const std::size_t D = config_.d_model;
  const Tensor h = reshape(slice(reshape(hidden, {hidden.numel() / D, D}), 0, j, 1), {D});
  const Tensor score = matmul(head_.weight, h) + head_.bias;
  return softplus(score + head_.alpha * elapsed, exp(head_.log_beta));
}

std::vector<double> Model::intensity(const EventSequence& seq, const Tensor& hidden,
                                     std::size_t j, double t) const {
  if (j >= seq.size()) throw IndexError("event index out of range");
  if (t < seq.times[j]) throw DomainError("intensity queried at t < t_j");
  return intensity(hidden, j, t - seq.times[j]).to_vector();
}

Prediction Model::predict_next(const EventSequence& prefix) const {
  if (prefix.empty()) throw DataError("prediction needs at least one observed event");
  NoGradGuard no_grad;
  const std::size_t L = prefix.size();
  const auto pass = forward(make_batch(prefix));
  const std::size_t K = config_.num_types;
  const Tensor logits = reshape(slice(pass.type_logits, 1, L - 1, 1), {K});
  Prediction p;
  p.type_probs = softmax(logits, 0).to_vector();
  p.type = static_cast<int>(std::max_element(p.type_probs.begin(), p.type_probs.end()) -
                            p.type_probs.begin()) + 1;
  const auto tp = pass.time_pred.data();
  p.gap = tp[L - 1] - (L >= 2 ? tp[L - 2] : prefix.times.front());
  p.time = prefix.times.back() + p.gap;
  return p;
}

}  // namespace mhp
