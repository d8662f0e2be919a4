#include <algorithm>

#include "mhp/error.hpp"
#include "mhp/ops.hpp"
#include "ops_internal.hpp"

namespace mhp {

using detail::Node;

Tensor index_select(const Tensor& x, int axis, const std::vector<long>& indices) {
  const std::size_t ax = detail::normalize_axis(axis, x.rank());
  const auto s = detail::split_at(x.shape(), ax);
  for (long idx : indices) {
    if (idx < -1 || idx >= static_cast<long>(s.size)) {
      throw IndexError("index " + std::to_string(idx) + " out of range for axis of size " +
                       std::to_string(s.size));
    }
  }
  const std::size_t m = indices.size();
  Shape out_shape = x.shape();
  out_shape[ax] = m;
  std::vector<double> out(s.outer * m * s.inner, 0.0);
  const auto xv = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t j = 0; j < m; ++j) {
      if (indices[j] < 0) continue;
      const std::size_t src = (o * s.size + static_cast<std::size_t>(indices[j])) * s.inner;
      std::copy_n(xv.data() + src, s.inner, out.data() + (o * m + j) * s.inner);
    }
  }
  auto backward = [s, indices, m](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t j = 0; j < m; ++j) {
        if (indices[j] < 0) continue;
        const std::size_t dst = (o * s.size + static_cast<std::size_t>(indices[j])) * s.inner;
        const std::size_t src = (o * m + j) * s.inner;
        for (std::size_t i = 0; i < s.inner; ++i) gx[dst + i] += self.grad[src + i];
      }
    }
  };
  return detail::make_result(std::move(out_shape), std::move(out), {x}, std::move(backward));
}

Tensor take_along_last(const Tensor& x, const std::vector<long>& indices) {
  if (x.rank() < 1) throw ShapeError("take_along_last on a scalar");
  const std::size_t k = x.dim(-1);
  const std::size_t rows = k == 0 ? 0 : x.numel() / k;
  if (indices.size() != rows) {
    throw ShapeError("take_along_last: " + std::to_string(indices.size()) +
                     " indices for " + std::to_string(rows) + " rows of " +
                     shape_str(x.shape()));
  }
  std::vector<std::size_t> flat(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    if (indices[r] < 0 || indices[r] >= static_cast<long>(k)) {
      throw IndexError("index " + std::to_string(indices[r]) + " out of range for size " +
                       std::to_string(k));
    }
    flat[r] = r * k + static_cast<std::size_t>(indices[r]);
  }
  std::vector<double> out(rows);
  const auto xv = x.data();
  for (std::size_t r = 0; r < rows; ++r) out[r] = xv[flat[r]];
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  auto backward = [flat = std::move(flat)](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < flat.size(); ++r) gx[flat[r]] += self.grad[r];
  };
  return detail::make_result(std::move(out_shape), std::move(out), {x}, std::move(backward));
}

Tensor slice(const Tensor& x, int axis, std::size_t start, std::size_t length) {
  const std::size_t ax = detail::normalize_axis(axis, x.rank());
  const auto s = detail::split_at(x.shape(), ax);
  if (start + length > s.size) {
    throw IndexError("slice [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") exceeds axis of size " +
                     std::to_string(s.size));
  }
  Shape out_shape = x.shape();
  out_shape[ax] = length;
  std::vector<double> out(s.outer * length * s.inner);
  const auto xv = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(xv.data() + (o * s.size + start) * s.inner, length * s.inner,
                out.data() + o * length * s.inner);
  }
  auto backward = [s, start, length](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o) {
      const std::size_t dst = (o * s.size + start) * s.inner;
      const std::size_t src = o * length * s.inner;
      for (std::size_t i = 0; i < length * s.inner; ++i) gx[dst + i] += self.grad[src + i];
    }
  };
  return detail::make_result(std::move(out_shape), std::move(out), {x}, std::move(backward));
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const std::size_t ax = detail::normalize_axis(axis, parts[0].rank());
  Shape out_shape = parts[0].shape();
  out_shape[ax] = 0;
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    Shape a = p.shape();
    Shape b = parts[0].shape();
    if (a.size() != b.size()) throw ShapeError("concat of tensors with different ranks");
    a[ax] = b[ax] = 0;
    if (a != b) {
      throw ShapeError("concat shapes differ off-axis: " + shape_str(parts[0].shape()) +
                       " vs " + shape_str(p.shape()));
    }
    sizes.push_back(p.shape()[ax]);
    out_shape[ax] += p.shape()[ax];
  }
  const auto s = detail::split_at(out_shape, ax);
  std::vector<double> out(shape_numel(out_shape));
  std::size_t offset = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const auto pv = parts[pi].data();
    const std::size_t len = sizes[pi];
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(pv.data() + o * len * s.inner, len * s.inner,
                  out.data() + (o * s.size + offset) * s.inner);
    }
    offset += len;
  }
  auto backward = [s, sizes](Node& self) {
    std::size_t offset = 0;
    for (std::size_t pi = 0; pi < sizes.size(); ++pi) {
      Node& P = *self.parents[pi];
      const std::size_t len = sizes[pi];
      if (P.requires_grad) {
        auto gp = P.grad_buffer();
        for (std::size_t o = 0; o < s.outer; ++o) {
          const std::size_t src = (o * s.size + offset) * s.inner;
          const std::size_t dst = o * len * s.inner;
          for (std::size_t i = 0; i < len * s.inner; ++i) gp[dst + i] += self.grad[src + i];
        }
      }
      offset += len;
    }
  };
  return detail::make_result(std::move(out_shape), std::move(out), parts, std::move(backward));
}

Tensor pad(const Tensor& x, int axis, std::size_t before, std::size_t after, double value) {
  const std::size_t ax = detail::normalize_axis(axis, x.rank());
  const auto s = detail::split_at(x.shape(), ax);
  Shape out_shape = x.shape();
  out_shape[ax] = s.size + before + after;
  const std::size_t ns = out_shape[ax];
  std::vector<double> out(s.outer * ns * s.inner, value);
  const auto xv = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(xv.data() + o * s.size * s.inner, s.size * s.inner,
                out.data() + (o * ns + before) * s.inner);
  }
  auto backward = [s, ns, before](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o) {
      const std::size_t src = (o * ns + before) * s.inner;
      const std::size_t dst = o * s.size * s.inner;
      for (std::size_t i = 0; i < s.size * s.inner; ++i) gx[dst + i] += self.grad[src + i];
    }
  };
  return detail::make_result(std::move(out_shape), std::move(out), {x}, std::move(backward));
}

Tensor causal_conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  if (x.rank() < 2 || x.numel() == 0) {
    throw ShapeError("causal_conv1d needs a non-empty [..., L, D] input, got " +
                     shape_str(x.shape()));
  }
  const std::size_t L = x.dim(-2);
  const std::size_t D = x.dim(-1);
  if (kernel.rank() != 2 || kernel.dim(1) != D || kernel.dim(0) == 0) {
    throw ShapeError("causal_conv1d kernel must be [W>=1, " + std::to_string(D) + "], got " +
                     shape_str(kernel.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{D}) {
    throw ShapeError("causal_conv1d bias must be [" + std::to_string(D) + "], got " +
                     shape_str(bias.shape()));
  }
  const std::size_t W = kernel.dim(0);
  const std::size_t nb = x.numel() / (L * D);
  const auto xv = x.data();
  const auto kv = kernel.data();
  std::vector<double> out(x.numel());
  for (std::size_t b = 0; b < nb; ++b) {
    const double* X = xv.data() + b * L * D;
    double* Y = out.data() + b * L * D;
    for (std::size_t t = 0; t < L; ++t) {
      for (std::size_t d = 0; d < D; ++d) {
        double acc = has_bias ? bias.data()[d] : 0.0;
        for (std::size_t w = 0; w < W; ++w) {
          // source index t - (W - 1) + w
          if (t + w + 1 < W) continue;
          const std::size_t src = t + w + 1 - W;
          acc += kv[w * D + d] * X[src * D + d];
        }
        Y[t * D + d] = acc;
      }
    }
  }
  std::vector<Tensor> parents{x, kernel};
  if (has_bias) parents.push_back(bias);
  auto backward = [nb, L, D, W, has_bias](Node& self) {
    Node& Xn = *self.parents[0];
    Node& Kn = *self.parents[1];
    const double* G = self.grad.data();
    for (std::size_t b = 0; b < nb; ++b) {
      const double* Gb = G + b * L * D;
      for (std::size_t t = 0; t < L; ++t) {
        for (std::size_t w = 0; w < W; ++w) {
          if (t + w + 1 < W) continue;
          const std::size_t src = t + w + 1 - W;
          for (std::size_t d = 0; d < D; ++d) {
            const double g = Gb[t * D + d];
            if (Xn.requires_grad) Xn.grad_buffer()[b * L * D + src * D + d] += Kn.value[w * D + d] * g;
            if (Kn.requires_grad) Kn.grad_buffer()[w * D + d] += Xn.value[b * L * D + src * D + d] * g;
          }
        }
      }
    }
    if (has_bias) {
      Node& Bn = *self.parents[2];
      if (Bn.requires_grad) {
        auto gb = Bn.grad_buffer();
        for (std::size_t i = 0; i < nb * L; ++i) {
          for (std::size_t d = 0; d < D; ++d) gb[d] += G[i * D + d];
        }
      }
    }
  };
  return detail::make_result(x.shape(), std::move(out), std::move(parents), std::move(backward));
}

}  // namespace mhp
