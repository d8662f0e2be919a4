#include <gtest/gtest.h>

#include <cmath>

#include "mhp/attention.hpp"
#include "mhp/model.hpp"
#include "mhp/ops.hpp"
#include "test_util.hpp"

namespace mhp {
namespace {

using testing::check_gradients;
using testing::leaf;

std::vector<double> random_values(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

TEST(CausalAttention, SinglePositionReturnsValues) {
  Rng rng(1);
  const Tensor q = Tensor::from({1, 4}, random_values(4, rng));
  const Tensor k = Tensor::from({1, 4}, random_values(4, rng));
  const Tensor v = Tensor::from({1, 4}, random_values(4, rng));
  const Tensor y = causal_attention(q, k, v, 2);
  for (std::size_t d = 0; d < 4; ++d) EXPECT_NEAR(y.at({0, d}), v.at({0, d}), 1e-15);
}

TEST(CausalAttention, MatchesMaskedSoftmaxLoop) {
  Rng rng(2);
  const std::size_t L = 5, D = 6, H = 3, dh = D / H;
  const Tensor q = Tensor::from({L, D}, random_values(L * D, rng));
  const Tensor k = Tensor::from({L, D}, random_values(L * D, rng));
  const Tensor v = Tensor::from({L, D}, random_values(L * D, rng));
  const Tensor y = causal_attention(q, k, v, H);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t i = 0; i < L; ++i) {
      std::vector<double> w(i + 1);
      double z = 0.0;
      for (std::size_t j = 0; j <= i; ++j) {
        double s = 0.0;
        for (std::size_t e = 0; e < dh; ++e) s += q.at({i, h * dh + e}) * k.at({j, h * dh + e});
        w[j] = std::exp(s / std::sqrt(static_cast<double>(dh)));
        z += w[j];
      }
      for (std::size_t e = 0; e < dh; ++e) {
        double out = 0.0;
        for (std::size_t j = 0; j <= i; ++j) out += w[j] / z * v.at({j, h * dh + e});
        EXPECT_NEAR(y.at({i, h * dh + e}), out, 1e-14);
      }
    }
  }
}

TEST(AttentionBlock, IsCausalAndCarriesNoPositionInformation) {
  ParameterStore store;
  Rng rng(3);
  const auto block = make_attention_block(store, "attn", 8, 2, 32, rng);
  for (const auto& p : store.all()) EXPECT_EQ(p.name.find("pos"), std::string::npos) << p.name;

  auto x = random_values(6 * 8, rng);
  const Tensor y1 = attention_block(Tensor::from({6, 8}, x), block);
  for (std::size_t d = 0; d < 8; ++d) x[4 * 8 + d] += 1.0;
  const Tensor y2 = attention_block(Tensor::from({6, 8}, x), block);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t d = 0; d < 8; ++d) EXPECT_EQ(y1.at({i, d}), y2.at({i, d}));
  }

  // Identical rows stay identical: nothing distinguishes positions.
  std::vector<double> row = random_values(8, rng);
  std::vector<double> same;
  for (int i = 0; i < 5; ++i) same.insert(same.end(), row.begin(), row.end());
  const Tensor y = attention_block(Tensor::from({5, 8}, same), block);
  for (std::size_t i = 1; i < 5; ++i) {
    for (std::size_t d = 0; d < 8; ++d) EXPECT_NEAR(y.at({i, d}), y.at({0, d}), 1e-14);
  }
}

TEST(AttentionBlock, GradientsMatchFiniteDifferences) {
  ParameterStore store;
  Rng rng(4);
  const auto block = make_attention_block(store, "attn", 8, 1, 16, rng);
  Tensor x = leaf({4, 8}, random_values(32, rng));
  auto loss = [&] { return sum(square(attention_block(x, block))); };
  auto inputs = testing::tensors_of(store);
  inputs.push_back(x);
  EXPECT_LT(check_gradients(loss, inputs).max_rel_error, 1e-6);
}

TEST(HybridEncoder, ZeroAttentionBlocksEqualsTwoLayerMhp) {
  ModelConfig hybrid = ModelConfig::defaults(Arch::mhp_e);
  hybrid.num_types = 3;
  hybrid.d_model = 8;
  hybrid.d_state = 4;
  hybrid.attn_blocks = 0;
  ModelConfig plain = hybrid;
  plain.arch = Arch::mhp;
  plain.n_layers = 2;
  const Model a(hybrid, 5), b(plain, 5);
  const EventSequence seq{{0.2, 0.9, 1.1, 2.5, 4.0}, {1, 3, 2, 2, 1}, 3};
  const auto ha = a.encode(seq).to_vector();
  const auto hb = b.encode(seq).to_vector();
  EXPECT_EQ(ha, hb);
}

}  // namespace
}  // namespace mhp
