#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mhp/error.hpp"
#include "mhp/tensor.hpp"

namespace mhp {

double stable_sigmoid(double x);
double stable_softplus(double x);

namespace detail {

// Flat offset into an `in`-shaped buffer for every element of `out`, where
// `in` broadcasts to `out`.
std::vector<std::size_t> broadcast_offsets(const Shape& out, const Shape& in);

inline std::size_t normalize_axis(int axis, std::size_t rank) {
  const int r = static_cast<int>(rank);
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw IndexError("invalid axis " + std::to_string(axis) + " for rank " +
                     std::to_string(rank));
  }
  return static_cast<std::size_t>(a);
}

// Splits a shape around `axis` into (outer, axis size, inner) extents.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t size = 1;
  std::size_t inner = 1;
};

inline AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.size = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace detail
}  // namespace mhp
