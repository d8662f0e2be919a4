#include "mhp/nn.hpp"

namespace mhp {

Tensor Linear::operator()(const Tensor& x) const {
  Tensor y = matmul(x, weight);
  return bias.defined() ? y + bias : y;
}

Linear make_linear(ParameterStore& store, const std::string& prefix, std::size_t in,
                   std::size_t out, bool with_bias, Rng& rng) {
  Linear layer;
  layer.weight = store.add(prefix + ".weight", fan_in_init({in, out}, in, rng));
  if (with_bias) layer.bias = store.add(prefix + ".bias", fan_in_init({out}, in, rng));
  return layer;
}

Tensor rms_norm(const Tensor& x, const Tensor& scale, double eps) {
  Tensor ms = mean(square(x), -1, /*keepdim=*/true);
  return x / sqrt(ms + eps) * scale;
}

}  // namespace mhp
