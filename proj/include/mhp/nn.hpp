#pragma once

#include <string>

#include "mhp/ops.hpp"
#include "mhp/parameter.hpp"

namespace mhp {

// y = x W + b with W stored as [in, out].
struct Linear {
  Tensor weight;
  Tensor bias;  // undefined when the layer has no bias

  Tensor operator()(const Tensor& x) const;
};

Linear make_linear(ParameterStore& store, const std::string& prefix, std::size_t in,
                   std::size_t out, bool with_bias, Rng& rng);

// x * scale / sqrt(mean(x^2, last axis) + eps)
Tensor rms_norm(const Tensor& x, const Tensor& scale, double eps = 1e-5);

}  // namespace mhp
