#include "mhp/error.hpp"
#include "mhp/ops.hpp"
#include "ops_internal.hpp"

namespace mhp {

using detail::Node;

Tensor matmul(const Tensor& a, const Tensor& b_in) {
  if (a.rank() < 2) {
    throw ShapeError("matmul needs a left operand of rank >= 2, got " + shape_str(a.shape()));
  }
  if (b_in.rank() < 1) throw ShapeError("matmul right operand is a scalar");
  const bool vector_rhs = b_in.rank() == 1;
  const Tensor b = vector_rhs ? reshape(b_in, {b_in.dim(0), 1}) : b_in;

  const std::size_t m = a.dim(-2);
  const std::size_t k = a.dim(-1);
  const std::size_t n = b.dim(-1);
  if (b.dim(-2) != k) {
    throw ShapeError("matmul inner dimensions differ: " + shape_str(a.shape()) + " x " +
                     shape_str(b_in.shape()));
  }
  const Shape a_batch(a.shape().begin(), a.shape().end() - 2);
  const Shape b_batch(b.shape().begin(), b.shape().end() - 2);
  Shape batch;
  try {
    batch = broadcast_shapes(a_batch, b_batch);
  } catch (const ShapeError&) {
    throw ShapeError("matmul batch dimensions differ: " + shape_str(a.shape()) + " x " +
                     shape_str(b_in.shape()));
  }
  const auto oa = detail::broadcast_offsets(batch, a_batch);
  const auto ob = detail::broadcast_offsets(batch, b_batch);
  const std::size_t nb = shape_numel(batch);

  std::vector<double> out(nb * m * n, 0.0);
  const auto av = a.data();
  const auto bv = b.data();
  for (std::size_t bi = 0; bi < nb; ++bi) {
    const double* A = av.data() + oa[bi] * m * k;
    const double* B = bv.data() + ob[bi] * k * n;
    double* C = out.data() + bi * m * n;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = A[i * k + p];
        const double* brow = B + p * n;
        double* crow = C + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  }

  Shape out_shape = batch;
  out_shape.push_back(m);
  if (!vector_rhs) out_shape.push_back(n);

  auto backward = [oa, ob, nb, m, k, n](Node& self) {
    Node& A = *self.parents[0];
    Node& B = *self.parents[1];
    const double* G = self.grad.data();
    if (A.requires_grad) {
      auto ga = A.grad_buffer();
      for (std::size_t bi = 0; bi < nb; ++bi) {
        const double* Bm = B.value.data() + ob[bi] * k * n;
        const double* Gm = G + bi * m * n;
        double* GA = ga.data() + oa[bi] * m * k;
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += Gm[i * n + j] * Bm[p * n + j];
            GA[i * k + p] += acc;
          }
        }
      }
    }
    if (B.requires_grad) {
      auto gb = B.grad_buffer();
      for (std::size_t bi = 0; bi < nb; ++bi) {
        const double* Am = A.value.data() + oa[bi] * m * k;
        const double* Gm = G + bi * m * n;
        double* GB = gb.data() + ob[bi] * k * n;
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = Am[i * k + p];
            for (std::size_t j = 0; j < n; ++j) GB[p * n + j] += aip * Gm[i * n + j];
          }
        }
      }
    }
  };
  return detail::make_result(std::move(out_shape), std::move(out), {a, b},
                             std::move(backward));
}

Tensor transpose(const Tensor& x) {
  if (x.rank() < 2) throw ShapeError("transpose needs rank >= 2, got " + shape_str(x.shape()));
  const std::size_t r = x.dim(-2);
  const std::size_t c = x.dim(-1);
  const std::size_t nb = x.numel() / (r * c == 0 ? 1 : r * c);
  Shape out_shape = x.shape();
  std::swap(out_shape[out_shape.size() - 2], out_shape[out_shape.size() - 1]);
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) out[b * r * c + j * r + i] = xv[b * r * c + i * c + j];
    }
  }
  auto backward = [nb, r, c](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          gx[b * r * c + i * c + j] += self.grad[b * r * c + j * r + i];
        }
      }
    }
  };
  return detail::make_result(std::move(out_shape), std::move(out), {x}, std::move(backward));
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("cannot reshape " + shape_str(x.shape()) + " to " + shape_str(shape));
  }
  auto backward = [](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  };
  return detail::make_result(std::move(shape), x.to_vector(), {x}, std::move(backward));
}

}  // namespace mhp
