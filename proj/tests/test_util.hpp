#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mhp/parameter.hpp"
#include "mhp/tensor.hpp"

namespace mhp::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares analytic gradients of `loss` with central differences for every
// element of `inputs`. The relative error uses max(|a|, |n|, floor) as the
// denominator so entries that are zero up to rounding are judged absolutely.
inline GradCheck check_gradients(const std::function<Tensor()>& loss, std::vector<Tensor> inputs,
                                 double step = 1e-5, double floor = 1e-6) {
  for (auto& t : inputs) t.zero_grad();
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) analytic.push_back(t.grad());

  GradCheck out;
  NoGradGuard no_grad;
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    auto values = inputs[p].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + step;
      const double up = loss().item();
      values[i] = orig - step;
      const double down = loss().item();
      values[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double err = std::abs(a - numeric) / denom;
      if (err > out.max_rel_error) {
        out.max_rel_error = err;
        out.worst_input = p;
        out.worst_index = i;
        out.worst_analytic = a;
        out.worst_numeric = numeric;
      }
      ++out.checked;
    }
  }
  return out;
}

inline std::vector<Tensor> tensors_of(const ParameterStore& store) {
  std::vector<Tensor> out;
  for (const auto& p : store.all()) out.push_back(p.tensor);
  return out;
}

inline Tensor leaf(Shape shape, std::vector<double> values) {
  Tensor t = Tensor::from(std::move(shape), std::move(values));
  t.set_requires_grad(true);
  return t;
}

}  // namespace mhp::testing
