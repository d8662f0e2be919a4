#include <algorithm>
#include <cmath>
#include <sstream>

#include "mhp/error.hpp"
#include "mhp/ops.hpp"
#include "ops_internal.hpp"

namespace mhp {

using detail::Node;

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r, 1);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("shapes " + shape_str(a) + " and " + shape_str(b) +
                       " are not broadcastable");
    }
    out[i] = da == 1 ? db : da;
  }
  return out;
}

namespace detail {

std::vector<std::size_t> broadcast_offsets(const Shape& out, const Shape& in) {
  const std::size_t r = out.size();
  std::vector<std::size_t> stride(r, 0);
  std::size_t s = 1;
  for (std::size_t i = in.size(); i-- > 0;) {
    const std::size_t axis = i + (r - in.size());
    stride[axis] = in[i] == 1 ? 0 : s;
    s *= in[i];
  }
  const std::size_t n = shape_numel(out);
  std::vector<std::size_t> offsets(n);
  std::vector<std::size_t> idx(r, 0);
  std::size_t off = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    offsets[flat] = off;
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      off += stride[d];
      if (idx[d] < out[d]) break;
      off -= stride[d] * out[d];
      idx[d] = 0;
    }
  }
  return offsets;
}

}  // namespace detail

namespace {

// f(x, y) -> value; da(x, y, out) and db(x, y, out) are partial derivatives.
template <class F, class DA, class DB>
Tensor binary_op(const Tensor& a, const Tensor& b, F f, DA da, DB db) {
  Shape out_shape = broadcast_shapes(a.shape(), b.shape());
  const std::size_t n = shape_numel(out_shape);
  const bool same_a = a.shape() == out_shape;
  const bool same_b = b.shape() == out_shape;
  std::vector<std::size_t> oa, ob;
  if (!same_a) oa = detail::broadcast_offsets(out_shape, a.shape());
  if (!same_b) ob = detail::broadcast_offsets(out_shape, b.shape());

  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = f(av[same_a ? i : oa[i]], bv[same_b ? i : ob[i]]);
  }

  auto backward = [oa = std::move(oa), ob = std::move(ob), same_a, same_b, da,
                   db](Node& self) {
    Node& A = *self.parents[0];
    Node& B = *self.parents[1];
    const auto& g = self.grad;
    const auto& y = self.value;
    const std::size_t m = y.size();
    if (A.requires_grad) {
      auto ga = A.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t ia = same_a ? i : oa[i];
        const std::size_t ib = same_b ? i : ob[i];
        ga[ia] += g[i] * da(A.value[ia], B.value[ib], y[i]);
      }
    }
    if (B.requires_grad) {
      auto gb = B.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t ia = same_a ? i : oa[i];
        const std::size_t ib = same_b ? i : ob[i];
        gb[ib] += g[i] * db(A.value[ia], B.value[ib], y[i]);
      }
    }
  };
  return detail::make_result(std::move(out_shape), std::move(out), {a, b},
                             std::move(backward));
}

// f(x) -> value; df(x, out) is the derivative.
template <class F, class DF>
Tensor unary_op(const Tensor& x, F f, DF df) {
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  auto backward = [df](Node& self) {
    Node& X = *self.parents[0];
    auto gx = X.grad_buffer();
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      gx[i] += self.grad[i] * df(X.value[i], self.value[i]);
    }
  };
  return detail::make_result(x.shape(), std::move(out), {x}, std::move(backward));
}

}  // namespace

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double out) { return -out / y; });
}

Tensor neg(const Tensor& x) {
  return unary_op(
      x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Tensor exp(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) {
      std::ostringstream os;
      os << "log of non-positive value " << v;
      throw DomainError(os.str());
    }
  }
  return unary_op(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor sqrt(const Tensor& x) {
  for (double v : x.data()) {
    if (v < 0.0) throw DomainError("sqrt of negative value");
  }
  return unary_op(
      x, [](double v) { return std::sqrt(v); },
      [](double, double y) { return 0.5 / y; });
}

Tensor square(const Tensor& x) {
  return unary_op(
      x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      x, [](double v) { return stable_sigmoid(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor silu(const Tensor& x) {
  return unary_op(
      x, [](double v) { return v * stable_sigmoid(v); },
      [](double v, double) {
        const double s = stable_sigmoid(v);
        return s * (1.0 + v * (1.0 - s));
      });
}

Tensor softplus(const Tensor& x, const Tensor& beta) {
  for (double b : beta.data()) {
    if (!(b > 0.0)) throw DomainError("softplus scale must be positive");
  }
  return binary_op(
      x, beta, [](double v, double b) { return b * stable_softplus(v / b); },
      [](double v, double b, double) { return stable_sigmoid(v / b); },
      [](double v, double b, double) {
        const double z = v / b;
        return stable_softplus(z) - z * stable_sigmoid(z);
      });
}

Tensor softplus(const Tensor& x, double beta) {
  if (!(beta > 0.0)) throw DomainError("softplus scale must be positive");
  return unary_op(
      x, [beta](double v) { return beta * stable_softplus(v / beta); },
      [beta](double v, double) { return stable_sigmoid(v / beta); });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (lo > hi) throw DomainError("clamp bounds are inverted");
  return unary_op(
      x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
Tensor operator-(const Tensor& x) { return neg(x); }
Tensor operator+(const Tensor& a, double b) { return add(a, Tensor::scalar(b)); }
Tensor operator-(const Tensor& a, double b) { return sub(a, Tensor::scalar(b)); }
Tensor operator*(const Tensor& a, double b) { return mul(a, Tensor::scalar(b)); }
Tensor operator*(double a, const Tensor& b) { return mul(Tensor::scalar(a), b); }
Tensor operator/(const Tensor& a, double b) { return div(a, Tensor::scalar(b)); }

}  // namespace mhp
