#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mhp/error.hpp"
#include "mhp/ops.hpp"
#include "mhp/ssm.hpp"
#include "test_util.hpp"

namespace mhp {
namespace {

using testing::check_gradients;
using testing::leaf;

// Composite Simpson rule for int_0^delta exp(a s) ds.
double simpson_zoh(double delta, double a, std::size_t intervals = 4000) {
  const double h = delta / static_cast<double>(intervals);
  double s = 1.0 + std::exp(a * delta);
  for (std::size_t i = 1; i < intervals; ++i) {
    s += (i % 2 ? 4.0 : 2.0) * std::exp(a * h * static_cast<double>(i));
  }
  return s * h / 3.0;
}

std::vector<double> random_values(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

TEST(Zoh, MatchesQuadratureAcrossScales) {
  const double b = 0.7;
  for (double mag : {1e-8, 1e-6, 9.9e-5, 1e-4, 1.01e-4, 1e-3, 0.1, 1.0, 3.0, 10.0}) {
    for (double delta : {0.5, 2.0}) {
      const double a = -mag / delta;
      const auto step = discretize(delta, a, b);
      const double oracle = simpson_zoh(delta, a) * b;
      EXPECT_LT(std::abs(step.b_bar - oracle) / std::abs(oracle), 1e-8) << "|delta a| = " << mag;
      EXPECT_DOUBLE_EQ(step.a_bar, std::exp(delta * a));
    }
  }
}

TEST(Zoh, SeriesBranchIsContinuousAtThreshold) {
  const double delta = 1.0;
  const double below = zoh_input_coefficient(delta, -1e-4 * (1.0 - 1e-12));
  const double above = zoh_input_coefficient(delta, -1e-4 * (1.0 + 1e-12));
  EXPECT_LT(std::abs(below - above) / above, 1e-12);
  // Exact small-argument value: expm1(x) / a.
  const double x = -5e-5;
  EXPECT_NEAR(zoh_input_coefficient(1.0, x) / (std::expm1(x) / x), 1.0, 1e-15);
}

TEST(Zoh, RejectsNonPositiveStep) {
  EXPECT_THROW(discretize(0.0, -1.0, 1.0), DomainError);
  EXPECT_THROW(discretize(-1.0, -1.0, 1.0), DomainError);
}

TEST(Zoh, TensorOverloadBroadcastsOverChannels) {
  const Tensor a = Tensor::from({2, 3}, {-1, -2, -3, -0.5, -1e-6, -4});
  const Tensor b = Tensor::from({3}, {1.0, 2.0, -1.0});
  const auto [a_bar, b_bar] = discretize(0.3, a, b);
  for (std::size_t d = 0; d < 2; ++d) {
    for (std::size_t n = 0; n < 3; ++n) {
      const auto s = discretize(0.3, a.at({d, n}), b.at({n}));
      EXPECT_DOUBLE_EQ(a_bar.at({d, n}), s.a_bar);
      EXPECT_DOUBLE_EQ(b_bar.at({d, n}), s.b_bar);
    }
  }
}

TEST(StepSizes, SoftplusClampAndRaw) {
  const std::vector<double> t{0.5, 0.5 + 1e-9, 30000.0};
  const auto d = step_sizes(t, {});
  EXPECT_NEAR(d[0], std::log1p(std::exp(0.5)), 1e-15);
  EXPECT_NEAR(d[1], std::log(2.0), 1e-9);
  EXPECT_DOUBLE_EQ(d[2], 1e4);
  DeltaTransform raw;
  raw.raw = true;
  const auto r = step_sizes(t, raw);
  EXPECT_DOUBLE_EQ(r[0], 0.5);
  EXPECT_DOUBLE_EQ(r[2], 30000.0 - 0.5 - 1e-9);
}

TEST(SsmScan, MatchesNaiveRecurrence) {
  Rng rng(21);
  const std::size_t L = 9, D = 3, N = 4;
  const auto xv = random_values(L * D, rng);
  const auto dv = random_values(L, rng, 0.01, 2.0);
  auto av = random_values(D * N, rng, -3.0, -1e-6);
  av[0] = -1e-7;  // exercises the series branch
  const auto bv = random_values(L * N, rng);
  const auto cv = random_values(L * N, rng);
  const auto sv = random_values(D, rng);
  const Tensor y = selective_scan(Tensor::from({L, D}, xv), Tensor::from({L}, dv),
                                  Tensor::from({D, N}, av), Tensor::from({L, N}, bv),
                                  Tensor::from({L, N}, cv), Tensor::from({D}, sv));
  std::vector<double> z(D * N, 0.0);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t d = 0; d < D; ++d) {
      double out = sv[d] * xv[i * D + d];
      for (std::size_t n = 0; n < N; ++n) {
        const double a = av[d * N + n];
        const double coef = std::expm1(dv[i] * a) / a;
        z[d * N + n] = std::exp(dv[i] * a) * z[d * N + n] + coef * bv[i * N + n] * xv[i * D + d];
        out += cv[i * N + n] * z[d * N + n];
      }
      EXPECT_NEAR(y.at({i, d}), out, 1e-13);
    }
  }
}

TEST(SsmScan, GatedRecurrenceOnIrregularTimes) {
  // t = [ln 2, 2 ln 2] with origin 0: both gates are 1/2.
  const double ln2 = std::numbers::ln2;
  const std::vector<double> times{ln2, 2 * ln2};
  const auto z = gated_recurrence(times, std::vector<double>{1.0, 1.0});
  EXPECT_NEAR(z[0], 0.5, 1e-15);
  EXPECT_NEAR(z[1], 0.75, 1e-15);

  DeltaTransform raw;
  raw.raw = true;
  const auto delta = step_sizes(times, raw);
  const Tensor y = selective_scan(Tensor::from({2, 1}, {1.0, 1.0}), Tensor::from({2}, delta),
                                  Tensor::from({1, 1}, {-1.0}), Tensor::ones({2, 1}),
                                  Tensor::ones({2, 1}), Tensor::zeros({1}));
  EXPECT_NEAR(y.at({0, 0}), 0.5, 1e-15);
  EXPECT_NEAR(y.at({1, 0}), 0.75, 1e-15);
  EXPECT_THROW(gated_recurrence(std::vector<double>{1.0, 1.0}, std::vector<double>{0, 0}),
               DomainError);
}

TEST(SsmScan, GradientsMatchFiniteDifferences) {
  Rng rng(22);
  const std::size_t B = 2, L = 5, D = 2, N = 3;
  Tensor x = leaf({B, L, D}, random_values(B * L * D, rng));
  Tensor delta = leaf({B, L}, random_values(B * L, rng, 0.05, 1.5));
  Tensor a = leaf({D, N}, random_values(D * N, rng, -2.0, -0.1));
  Tensor b = leaf({B, L, N}, random_values(B * L * N, rng));
  Tensor c = leaf({B, L, N}, random_values(B * L * N, rng));
  Tensor skip = leaf({D}, random_values(D, rng));
  auto loss = [&] { return sum(square(selective_scan(x, delta, a, b, c, skip))); };
  EXPECT_LT(check_gradients(loss, {x, delta, a, b, c, skip}).max_rel_error, 1e-6);
}

TEST(SsmScan, GradientsNearSeriesBranch) {
  Rng rng(23);
  Tensor x = leaf({4, 1}, random_values(4, rng));
  Tensor delta = leaf({4}, {0.5, 1.0, 0.25, 2.0});
  Tensor a = leaf({1, 2}, {-2e-5, -4e-5});
  Tensor b = leaf({4, 2}, random_values(8, rng));
  Tensor c = leaf({4, 2}, random_values(8, rng));
  auto loss = [&] { return sum(square(ssm_scan(x, delta, a, b, c))); };
  // Perturbations of 1e-5 stay inside the series region for these products.
  EXPECT_LT(check_gradients(loss, {x, delta, a, b, c}, 1e-7).max_rel_error, 1e-5);
}

class MambaBlockTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(31);
    block = make_mamba_block(store, "blk", 4, 3, 3, 2, rng);
  }
  ParameterStore store;
  MambaBlockParams block;
};

TEST_F(MambaBlockTest, ParameterNamesAndShapes) {
  EXPECT_EQ(store.get("blk.in_proj.weight").shape(), (Shape{4, 16}));
  EXPECT_EQ(store.get("blk.conv.kernel").shape(), (Shape{3, 8}));
  EXPECT_EQ(store.get("blk.ssm.A_log").shape(), (Shape{8, 3}));
  EXPECT_EQ(store.get("blk.ssm.D").shape(), (Shape{8}));
  EXPECT_EQ(store.get("blk.out_proj.weight").shape(), (Shape{8, 4}));
  const auto a_log = store.get("blk.ssm.A_log");
  EXPECT_DOUBLE_EQ(a_log.at({5, 2}), std::log(3.0));
}

TEST_F(MambaBlockTest, OutputShapeAndZeroInput) {
  Rng rng(32);
  const Tensor u = Tensor::from({2, 6, 4}, random_values(48, rng));
  const Tensor delta = Tensor::from({2, 6}, random_values(12, rng, 0.1, 1.0));
  EXPECT_EQ(mamba_block(u, delta, block).shape(), (Shape{2, 6, 4}));

  for (double& v : store.get("blk.conv.bias").mutable_data()) v = 0.0;
  const Tensor y = mamba_block(Tensor::zeros({6, 4}), Tensor::ones({6}), block);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST_F(MambaBlockTest, IsCausal) {
  Rng rng(33);
  auto uv = random_values(7 * 4, rng);
  const auto dv = random_values(7, rng, 0.1, 1.0);
  const Tensor y1 = mamba_block(Tensor::from({7, 4}, uv), Tensor::from({7}, dv), block);
  for (std::size_t d = 0; d < 4; ++d) uv[4 * 4 + d] += 3.0;
  auto dv2 = dv;
  dv2[5] += 0.7;
  const Tensor y2 = mamba_block(Tensor::from({7, 4}, uv), Tensor::from({7}, dv2), block);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t d = 0; d < 4; ++d) EXPECT_EQ(y1.at({i, d}), y2.at({i, d}));
  }
  double changed = 0.0;
  for (std::size_t d = 0; d < 4; ++d) changed += std::abs(y1.at({4, d}) - y2.at({4, d}));
  EXPECT_GT(changed, 0.0);
}

TEST_F(MambaBlockTest, GradientsMatchFiniteDifferences) {
  Rng rng(34);
  Tensor u = leaf({5, 4}, random_values(20, rng));
  const Tensor delta = Tensor::from({5}, random_values(5, rng, 0.1, 1.0));
  auto loss = [&] { return sum(square(mamba_block(u, delta, block))); };
  auto inputs = testing::tensors_of(store);
  inputs.push_back(u);
  const auto r = check_gradients(loss, inputs, 1e-5, 1e-4);
  EXPECT_LT(r.max_rel_error, 1e-5) << "input " << r.worst_input << "[" << r.worst_index
                                   << "] analytic " << r.worst_analytic << " numeric "
                                   << r.worst_numeric;
}

}  // namespace
}  // namespace mhp
