#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mhp/nn.hpp"

namespace mhp {

// How raw inter-event gaps become SSM step sizes.
struct DeltaTransform {
  // Use gaps unchanged (must already be positive).
  bool raw = false;
  double min = 1e-6;
  double max = 1e4;
};

// Step sizes for one sequence: gap_1 = t_1 (origin at 0), gap_i = t_i - t_{i-1},
// then clamp(softplus(gap), min, max) unless `raw`.
std::vector<double> step_sizes(std::span<const double> times, const DeltaTransform& transform);

// Zero-order-hold discretization of one diagonal entry.
struct ZohStep {
  double a_bar;  // exp(delta * a)
  double b_bar;  // (exp(delta * a) - 1) / a * b
};

// Input coefficient (exp(delta * a) - 1) / a; switches to a second-order
// series when |delta * a| < 1e-4.
double zoh_input_coefficient(double delta, double a);
// Throws DomainError unless delta > 0.
ZohStep discretize(double delta, double a, double b);

// Discretized transition for one step. a: [D_inner, N] (negative), b: [N].
// Returns (A_bar, B_bar), both [D_inner, N]. Values only, no graph.
std::pair<Tensor, Tensor> discretize(double delta, const Tensor& a, const Tensor& b);

struct SsmCoreParams {
  Tensor a_log;  // [D_inner, N]; A = -exp(a_log)
  Tensor w_b;    // [D_inner, N]; B_i = x_i W_B
  Tensor w_c;    // [D_inner, N]; C_i = x_i W_C
  Tensor skip;   // [D_inner]
};

// A initialized to a[d, n] = -(n + 1).
SsmCoreParams make_ssm_core(ParameterStore& store, const std::string& prefix,
                            std::size_t d_inner, std::size_t d_state, Rng& rng);

// Fused recurrence z_i = exp(delta_i A) z_{i-1} + coef(delta_i, A) B_i x_i,
// y_i = C_i z_i with z_0 = 0, per channel d and state n.
// x: [..., L, D], delta: [..., L], a: [D, N], b, c: [..., L, N].
Tensor ssm_scan(const Tensor& x, const Tensor& delta, const Tensor& a, const Tensor& b,
                const Tensor& c);

// Selective scan with input-dependent B and C: y = ssm_scan(...) + skip * x.
Tensor selective_scan(const Tensor& x, const Tensor& delta, const SsmCoreParams& params);
// Same, with B and C supplied per step instead of projected from x.
Tensor selective_scan(const Tensor& x, const Tensor& delta, const Tensor& a, const Tensor& b,
                      const Tensor& c, const Tensor& skip);

// Reference gated recurrence for N = 1, A = -1, B = 1:
// g_i = exp(t_{i-1} - t_i), z_i = g_i z_{i-1} + (1 - g_i) x_i, with t_0 = origin
// and z_0 = 0. Throws DomainError if timestamps are not strictly increasing.
std::vector<double> gated_recurrence(std::span<const double> times,
                                   std::span<const double> x, double origin = 0.0);

struct MambaBlockParams {
  std::size_t d_model = 0;
  std::size_t d_inner = 0;
  Tensor norm_scale;  // [d_model]
  Linear in_proj;     // d_model -> 2 d_inner
  Tensor conv_kernel; // [d_conv, d_inner]
  Tensor conv_bias;   // [d_inner]
  SsmCoreParams ssm;
  Linear out_proj;    // d_inner -> d_model
};

MambaBlockParams make_mamba_block(ParameterStore& store, const std::string& prefix,
                                  std::size_t d_model, std::size_t d_state, std::size_t d_conv,
                                  std::size_t expand, Rng& rng);

// norm -> in_proj (x, z) -> causal conv -> SiLU -> selective scan driven by
// delta -> gate by SiLU(z) -> out_proj -> residual.
// u: [..., L, d_model], delta: [..., L].
Tensor mamba_block(const Tensor& u, const Tensor& delta, const MambaBlockParams& params);

}  // namespace mhp
