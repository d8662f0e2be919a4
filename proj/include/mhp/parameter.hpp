#pragma once

#include <map>
#include <string>
#include <vector>

#include "mhp/rng.hpp"
#include "mhp/tensor.hpp"

namespace mhp {

// A trainable leaf tensor with a unique dotted name ("layers.0.A_log").
struct Parameter {
  std::string name;
  Tensor tensor;
};

// Ordered registry of a model's parameters. Registration order is stable and
// defines the order used by optimizers and checkpoints.
class ParameterStore {
 public:
  // Registers `init` as a trainable leaf. Throws on a duplicate name.
  Tensor add(const std::string& name, Tensor init);

  const std::vector<Parameter>& all() const { return params_; }
  bool contains(const std::string& name) const;
  Tensor get(const std::string& name) const;
  std::size_t scalar_count() const;

  void zero_grad();

  // Overwrites values of every named parameter; shapes must match and every
  // parameter must be present.
  void assign(const std::map<std::string, std::vector<double>>& values);
  std::map<std::string, std::vector<double>> snapshot() const;

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

// Initializers.
Tensor uniform_init(Shape shape, double bound, Rng& rng);
// U(-1/sqrt(fan_in), 1/sqrt(fan_in)), the usual dense-layer default.
Tensor fan_in_init(Shape shape, std::size_t fan_in, Rng& rng);

}  // namespace mhp
