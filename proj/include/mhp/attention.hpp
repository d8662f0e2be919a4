#pragma once

#include <string>

#include "mhp/nn.hpp"

namespace mhp {

// Pre-norm transformer block without any positional parameters. Order
// information reaches it only through its (already encoded) inputs.
struct AttentionBlockParams {
  std::size_t d_model = 0;
  std::size_t n_heads = 0;
  Tensor norm1_scale;
  Linear query, key, value, output;
  Tensor norm2_scale;
  Linear ff_in, ff_out;
};

AttentionBlockParams make_attention_block(ParameterStore& store, const std::string& prefix,
                                          std::size_t d_model, std::size_t n_heads,
                                          std::size_t ff_width, Rng& rng);

// Multi-head scaled dot-product attention where position j only attends to
// positions <= j. q, k, v: [..., L, d_model]; heads split the last axis.
Tensor causal_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t n_heads);

// y + Attn(norm1(y)), then + FF(norm2(.)).
Tensor attention_block(const Tensor& y, const AttentionBlockParams& params);

}  // namespace mhp
