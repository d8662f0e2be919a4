#include <algorithm>
#include <cmath>
#include <limits>

#include "mhp/error.hpp"
#include "mhp/ops.hpp"
#include "ops_internal.hpp"

namespace mhp {

using detail::Node;

namespace {

Shape reduced_shape(const Shape& shape, std::size_t axis, bool keepdim) {
  Shape out = shape;
  if (keepdim) {
    out[axis] = 1;
  } else {
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
  }
  return out;
}

}  // namespace

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  auto backward = [](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    const double g = self.grad[0];
    for (auto& v : gx) v += g;
  };
  return detail::make_result({}, {acc}, {x}, std::move(backward));
}

Tensor sum(const Tensor& x, int axis, bool keepdim) {
  const std::size_t ax = detail::normalize_axis(axis, x.rank());
  const auto s = detail::split_at(x.shape(), ax);
  std::vector<double> out(s.outer * s.inner, 0.0);
  const auto xv = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t a = 0; a < s.size; ++a) {
      const double* row = xv.data() + (o * s.size + a) * s.inner;
      double* dst = out.data() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += row[i];
    }
  }
  auto backward = [s](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t a = 0; a < s.size; ++a) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          gx[(o * s.size + a) * s.inner + i] += self.grad[o * s.inner + i];
        }
      }
    }
  };
  return detail::make_result(reduced_shape(x.shape(), ax, keepdim), std::move(out), {x},
                             std::move(backward));
}

Tensor mean(const Tensor& x, int axis, bool keepdim) {
  const std::size_t n = x.dim(axis);
  if (n == 0) throw ShapeError("mean over an empty axis");
  return sum(x, axis, keepdim) * (1.0 / static_cast<double>(n));
}

Tensor max(const Tensor& x, int axis, bool keepdim) {
  const std::size_t ax = detail::normalize_axis(axis, x.rank());
  const auto s = detail::split_at(x.shape(), ax);
  if (s.size == 0) throw ShapeError("max over an empty axis");
  std::vector<double> out(s.outer * s.inner);
  std::vector<std::size_t> argmax(s.outer * s.inner);
  const auto xv = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      std::size_t best = 0;
      double bv = xv[o * s.size * s.inner + i];
      for (std::size_t a = 1; a < s.size; ++a) {
        const double v = xv[(o * s.size + a) * s.inner + i];
        if (v > bv) {
          bv = v;
          best = a;
        }
      }
      out[o * s.inner + i] = bv;
      argmax[o * s.inner + i] = (o * s.size + best) * s.inner + i;
    }
  }
  auto backward = [argmax = std::move(argmax)](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    for (std::size_t j = 0; j < argmax.size(); ++j) gx[argmax[j]] += self.grad[j];
  };
  return detail::make_result(reduced_shape(x.shape(), ax, keepdim), std::move(out), {x},
                             std::move(backward));
}

Tensor softmax(const Tensor& x, int axis) {
  const std::size_t ax = detail::normalize_axis(axis, x.rank());
  const auto s = detail::split_at(x.shape(), ax);
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.size * s.inner + i;
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < s.size; ++a) m = std::max(m, xv[base + a * s.inner]);
      double z = 0.0;
      for (std::size_t a = 0; a < s.size; ++a) {
        const double e = std::exp(xv[base + a * s.inner] - m);
        out[base + a * s.inner] = e;
        z += e;
      }
      for (std::size_t a = 0; a < s.size; ++a) out[base + a * s.inner] /= z;
    }
  }
  auto backward = [s](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    const auto& y = self.value;
    const auto& g = self.grad;
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.size * s.inner + i;
        double dot = 0.0;
        for (std::size_t a = 0; a < s.size; ++a) {
          dot += y[base + a * s.inner] * g[base + a * s.inner];
        }
        for (std::size_t a = 0; a < s.size; ++a) {
          const std::size_t j = base + a * s.inner;
          gx[j] += y[j] * (g[j] - dot);
        }
      }
    }
  };
  return detail::make_result(x.shape(), std::move(out), {x}, std::move(backward));
}

Tensor log_softmax(const Tensor& x, int axis) {
  const std::size_t ax = detail::normalize_axis(axis, x.rank());
  const auto s = detail::split_at(x.shape(), ax);
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.size * s.inner + i;
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < s.size; ++a) m = std::max(m, xv[base + a * s.inner]);
      double z = 0.0;
      for (std::size_t a = 0; a < s.size; ++a) z += std::exp(xv[base + a * s.inner] - m);
      const double log_z = std::log(z);
      for (std::size_t a = 0; a < s.size; ++a) {
        out[base + a * s.inner] = (xv[base + a * s.inner] - m) - log_z;
      }
    }
  }
  auto backward = [s](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    const auto& y = self.value;
    const auto& g = self.grad;
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.size * s.inner + i;
        double gsum = 0.0;
        for (std::size_t a = 0; a < s.size; ++a) gsum += g[base + a * s.inner];
        for (std::size_t a = 0; a < s.size; ++a) {
          const std::size_t j = base + a * s.inner;
          gx[j] += g[j] - std::exp(y[j]) * gsum;
        }
      }
    }
  };
  return detail::make_result(x.shape(), std::move(out), {x}, std::move(backward));
}

}  // namespace mhp
