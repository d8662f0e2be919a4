#include "mhp/attention.hpp"

#include <cmath>
#include <limits>

#include "mhp/error.hpp"

namespace mhp {

AttentionBlockParams make_attention_block(ParameterStore& store, const std::string& prefix,
                                          std::size_t d_model, std::size_t n_heads,
                                          std::size_t ff_width, Rng& rng) {
  if (n_heads == 0 || d_model % n_heads != 0) {
    throw std::invalid_argument("d_model " + std::to_string(d_model) +
                                " is not divisible by n_heads " + std::to_string(n_heads));
  }
  AttentionBlockParams p;
  p.d_model = d_model;
  p.n_heads = n_heads;
  p.norm1_scale = store.add(prefix + ".norm1.scale", Tensor::ones({d_model}));
  p.query = make_linear(store, prefix + ".query", d_model, d_model, false, rng);
  p.key = make_linear(store, prefix + ".key", d_model, d_model, false, rng);
  p.value = make_linear(store, prefix + ".value", d_model, d_model, false, rng);
  p.output = make_linear(store, prefix + ".output", d_model, d_model, true, rng);
  p.norm2_scale = store.add(prefix + ".norm2.scale", Tensor::ones({d_model}));
  p.ff_in = make_linear(store, prefix + ".ff_in", d_model, ff_width, true, rng);
  p.ff_out = make_linear(store, prefix + ".ff_out", ff_width, d_model, true, rng);
  return p;
}

Tensor causal_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t n_heads) {
  if (q.shape() != k.shape() || q.shape() != v.shape() || q.rank() < 2) {
    throw ShapeError("attention q/k/v shapes differ: " + shape_str(q.shape()) + ", " +
                     shape_str(k.shape()) + ", " + shape_str(v.shape()));
  }
  const std::size_t L = q.dim(-2);
  const std::size_t d_model = q.dim(-1);
  if (n_heads == 0 || d_model % n_heads != 0) {
    throw ShapeError("d_model " + std::to_string(d_model) + " not divisible into " +
                     std::to_string(n_heads) + " heads");
  }
  const std::size_t head_dim = d_model / n_heads;

  std::vector<double> mask_values(L * L, 0.0);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = i + 1; j < L; ++j) {
      mask_values[i * L + j] = -std::numeric_limits<double>::infinity();
    }
  }
  const Tensor mask = Tensor::from({L, L}, std::move(mask_values));
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  std::vector<Tensor> heads;
  heads.reserve(n_heads);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const Tensor qh = slice(q, -1, h * head_dim, head_dim);
    const Tensor kh = slice(k, -1, h * head_dim, head_dim);
    const Tensor vh = slice(v, -1, h * head_dim, head_dim);
    const Tensor scores = matmul(qh, transpose(kh)) * scale + mask;
    heads.push_back(matmul(softmax(scores, -1), vh));
  }
  return n_heads == 1 ? heads.front() : concat(heads, -1);
}

Tensor attention_block(const Tensor& y, const AttentionBlockParams& params) {
  const Tensor h = rms_norm(y, params.norm1_scale);
  const Tensor attn =
      causal_attention(params.query(h), params.key(h), params.value(h), params.n_heads);
  const Tensor r = y + params.output(attn);
  const Tensor f = params.ff_out(silu(params.ff_in(rms_norm(r, params.norm2_scale))));
  return r + f;
}

}  // namespace mhp
