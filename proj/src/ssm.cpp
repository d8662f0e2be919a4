#include "mhp/ssm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mhp/error.hpp"
#include "ops_internal.hpp"

namespace mhp {

using detail::Node;

namespace {

constexpr double kSeriesThreshold = 1e-4;

// d/d(delta) and d/da of zoh_input_coefficient, consistent with whichever
// branch the forward pass used.
struct CoefficientGrad {
  double d_delta;
  double d_a;
};

CoefficientGrad coefficient_grad(double delta, double a) {
  const double x = delta * a;
  if (std::abs(x) < kSeriesThreshold) {
    return {1.0 + x * (1.0 + x * (0.5 + x / 6.0)), delta * delta * (0.5 + x * (1.0 / 3.0 + x / 8.0))};
  }
  const double ex = std::exp(x);
  return {ex, delta * delta * (x * ex - std::expm1(x)) / (x * x)};
}

void require_positive_step(double delta) {
  if (!(delta > 0.0)) {
    std::ostringstream os;
    os << "discretization step must be positive, got " << delta;
    throw DomainError(os.str());
  }
}

}  // namespace

std::vector<double> step_sizes(std::span<const double> times, const DeltaTransform& transform) {
  std::vector<double> out(times.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double gap = times[i] - prev;
    prev = times[i];
    out[i] = transform.raw ? gap
                           : std::clamp(stable_softplus(gap), transform.min, transform.max);
  }
  return out;
}

double zoh_input_coefficient(double delta, double a) {
  const double x = delta * a;
  if (std::abs(x) < kSeriesThreshold) return delta * (1.0 + x * (0.5 + x * (1.0 / 6.0 + x / 24.0)));
  return std::expm1(x) / a;
}

ZohStep discretize(double delta, double a, double b) {
  require_positive_step(delta);
  return {std::exp(delta * a), zoh_input_coefficient(delta, a) * b};
}

std::pair<Tensor, Tensor> discretize(double delta, const Tensor& a, const Tensor& b) {
  require_positive_step(delta);
  if (a.rank() != 2 || b.rank() != 1 || b.dim(0) != a.dim(1)) {
    throw ShapeError("discretize expects A [D, N] and B [N], got " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()));
  }
  const std::size_t n = a.dim(1);
  std::vector<double> abar(a.numel());
  std::vector<double> bbar(a.numel());
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const auto step = discretize(delta, a.data()[i], b.data()[i % n]);
    abar[i] = step.a_bar;
    bbar[i] = step.b_bar;
  }
  return {Tensor::from(a.shape(), std::move(abar)), Tensor::from(a.shape(), std::move(bbar))};
}

SsmCoreParams make_ssm_core(ParameterStore& store, const std::string& prefix,
                            std::size_t d_inner, std::size_t d_state, Rng& rng) {
  SsmCoreParams p;
  std::vector<double> a_log(d_inner * d_state);
  for (std::size_t d = 0; d < d_inner; ++d) {
    for (std::size_t n = 0; n < d_state; ++n) {
      a_log[d * d_state + n] = std::log(static_cast<double>(n + 1));
    }
  }
  p.a_log = store.add(prefix + ".A_log", Tensor::from({d_inner, d_state}, std::move(a_log)));
  p.w_b = store.add(prefix + ".W_B", fan_in_init({d_inner, d_state}, d_inner, rng));
  p.w_c = store.add(prefix + ".W_C", fan_in_init({d_inner, d_state}, d_inner, rng));
  p.skip = store.add(prefix + ".D", Tensor::ones({d_inner}));
  return p;
}

Tensor ssm_scan(const Tensor& x, const Tensor& delta, const Tensor& a, const Tensor& b,
                const Tensor& c) {
  if (x.rank() < 2) throw ShapeError("ssm_scan input must be [..., L, D], got " + shape_str(x.shape()));
  const std::size_t L = x.dim(-2);
  const std::size_t D = x.dim(-1);
  if (L == 0) throw ShapeError("ssm_scan on an empty sequence");
  if (a.rank() != 2 || a.dim(0) != D) {
    throw ShapeError("ssm_scan A must be [" + std::to_string(D) + ", N], got " + shape_str(a.shape()));
  }
  const std::size_t N = a.dim(1);
  const std::size_t nb = x.numel() / (L * D);
  if (delta.numel() != nb * L || delta.dim(-1) != L) {
    throw ShapeError("ssm_scan length mismatch: x " + shape_str(x.shape()) + " vs delta " +
                     shape_str(delta.shape()));
  }
  Shape bc_shape(x.shape().begin(), x.shape().end() - 1);
  bc_shape.push_back(N);
  if (b.shape() != bc_shape || c.shape() != bc_shape) {
    throw ShapeError("ssm_scan B and C must be " + shape_str(bc_shape) + ", got " +
                     shape_str(b.shape()) + " and " + shape_str(c.shape()));
  }
  for (double v : delta.data()) require_positive_step(v);

  const auto xv = x.data();
  const auto dv = delta.data();
  const auto av = a.data();
  const auto bv = b.data();
  const auto cv = c.data();

  // States z_i for every step; needed by the backward pass.
  std::vector<double> states(nb * L * D * N);
  std::vector<double> out(nb * L * D, 0.0);
  std::vector<double> abar(D * N);
  std::vector<double> coef(D * N);
  for (std::size_t s = 0; s < nb; ++s) {
    for (std::size_t i = 0; i < L; ++i) {
      const double dt = dv[s * L + i];
      for (std::size_t j = 0; j < D * N; ++j) {
        abar[j] = std::exp(dt * av[j]);
        coef[j] = zoh_input_coefficient(dt, av[j]);
      }
      const double* xi = xv.data() + (s * L + i) * D;
      const double* bi = bv.data() + (s * L + i) * N;
      const double* ci = cv.data() + (s * L + i) * N;
      double* zi = states.data() + (s * L + i) * D * N;
      const double* zp = i > 0 ? zi - D * N : nullptr;
      double* yi = out.data() + (s * L + i) * D;
      for (std::size_t d = 0; d < D; ++d) {
        double acc = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
          const std::size_t j = d * N + n;
          const double prev = zp ? zp[j] : 0.0;
          zi[j] = abar[j] * prev + coef[j] * bi[n] * xi[d];
          acc += ci[n] * zi[j];
        }
        yi[d] = acc;
      }
    }
  }

  auto backward = [states = std::move(states), nb, L, D, N](Node& self) {
    Node& X = *self.parents[0];
    Node& Dl = *self.parents[1];
    Node& A = *self.parents[2];
    Node& B = *self.parents[3];
    Node& C = *self.parents[4];
    const auto& gy = self.grad;
    std::vector<double> gx(nb * L * D, 0.0), gdl(nb * L, 0.0), ga(D * N, 0.0),
        gb(nb * L * N, 0.0), gc(nb * L * N, 0.0);
    std::vector<double> carry(D * N);
    for (std::size_t s = 0; s < nb; ++s) {
      std::fill(carry.begin(), carry.end(), 0.0);
      for (std::size_t i = L; i-- > 0;) {
        const std::size_t row = s * L + i;
        const double dt = Dl.value[row];
        const double* xi = X.value.data() + row * D;
        const double* bi = B.value.data() + row * N;
        const double* ci = C.value.data() + row * N;
        const double* gyi = gy.data() + row * D;
        const double* zi = states.data() + row * D * N;
        const double* zp = i > 0 ? zi - D * N : nullptr;
        double g_delta = 0.0;
        for (std::size_t d = 0; d < D; ++d) {
          for (std::size_t n = 0; n < N; ++n) {
            const std::size_t j = d * N + n;
            const double a = A.value[j];
            const double ab = std::exp(dt * a);
            const double cf = zoh_input_coefficient(dt, a);
            const auto cg = coefficient_grad(dt, a);
            const double gz = gyi[d] * ci[n] + carry[j];
            gc[row * N + n] += gyi[d] * zi[j];
            const double g_abar = zp ? gz * zp[j] : 0.0;
            const double g_coef = gz * bi[n] * xi[d];
            gb[row * N + n] += gz * cf * xi[d];
            gx[row * D + d] += gz * cf * bi[n];
            g_delta += g_abar * a * ab + g_coef * cg.d_delta;
            ga[j] += g_abar * dt * ab + g_coef * cg.d_a;
            carry[j] = ab * gz;
          }
        }
        gdl[row] += g_delta;
      }
    }
    auto accumulate = [](Node& node, const std::vector<double>& g) {
      if (!node.requires_grad) return;
      auto buf = node.grad_buffer();
      for (std::size_t k = 0; k < g.size(); ++k) buf[k] += g[k];
    };
    accumulate(X, gx);
    accumulate(Dl, gdl);
    accumulate(A, ga);
    accumulate(B, gb);
    accumulate(C, gc);
  };
  return detail::make_result(x.shape(), std::move(out), {x, delta, a, b, c}, std::move(backward));
}

Tensor selective_scan(const Tensor& x, const Tensor& delta, const SsmCoreParams& params) {
  const Tensor a = neg(exp(params.a_log));
  const Tensor b = matmul(x, params.w_b);
  const Tensor c = matmul(x, params.w_c);
  return selective_scan(x, delta, a, b, c, params.skip);
}

Tensor selective_scan(const Tensor& x, const Tensor& delta, const Tensor& a, const Tensor& b,
                      const Tensor& c, const Tensor& skip) {
  return ssm_scan(x, delta, a, b, c) + x * skip;
}

std::vector<double> gated_recurrence(std::span<const double> times,
                                      std::span<const double> x, double origin) {
  if (times.size() != x.size()) {
    throw ShapeError("gated_recurrence: " + std::to_string(times.size()) +
                     " timestamps for " + std::to_string(x.size()) + " inputs");
  }
  std::vector<double> z(x.size());
  double prev_t = origin;
  double prev_z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw DomainError("timestamps must be strictly increasing (index " + std::to_string(i) + ")");
    }
    const double g = std::exp(prev_t - times[i]);
    prev_z = g * prev_z + (1.0 - g) * x[i];
    z[i] = prev_z;
    prev_t = times[i];
  }
  return z;
}

MambaBlockParams make_mamba_block(ParameterStore& store, const std::string& prefix,
                                  std::size_t d_model, std::size_t d_state, std::size_t d_conv,
                                  std::size_t expand, Rng& rng) {
  MambaBlockParams p;
  p.d_model = d_model;
  p.d_inner = expand * d_model;
  p.norm_scale = store.add(prefix + ".norm.scale", Tensor::ones({d_model}));
  p.in_proj = make_linear(store, prefix + ".in_proj", d_model, 2 * p.d_inner, false, rng);
  p.conv_kernel = store.add(prefix + ".conv.kernel", fan_in_init({d_conv, p.d_inner}, d_conv, rng));
  p.conv_bias = store.add(prefix + ".conv.bias", fan_in_init({p.d_inner}, d_conv, rng));
  p.ssm = make_ssm_core(store, prefix + ".ssm", p.d_inner, d_state, rng);
  p.out_proj = make_linear(store, prefix + ".out_proj", p.d_inner, d_model, false, rng);
  return p;
}

Tensor mamba_block(const Tensor& u, const Tensor& delta, const MambaBlockParams& params) {
  const Tensor h = rms_norm(u, params.norm_scale);
  const Tensor xz = params.in_proj(h);
  Tensor x = slice(xz, -1, 0, params.d_inner);
  const Tensor z = slice(xz, -1, params.d_inner, params.d_inner);
  x = silu(causal_conv1d(x, params.conv_kernel, params.conv_bias));
  Tensor y = selective_scan(x, delta, params.ssm);
  y = y * silu(z);
  return params.out_proj(y) + u;
}

}  // namespace mhp
