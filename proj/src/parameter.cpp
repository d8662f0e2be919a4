#include "mhp/parameter.hpp"

#include <cmath>

#include "mhp/error.hpp"

namespace mhp {

Tensor ParameterStore::add(const std::string& name, Tensor init) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  if (!init.node()->is_leaf()) throw std::invalid_argument("parameter must be a leaf: " + name);
  init.set_requires_grad(true);
  index_[name] = params_.size();
  params_.push_back({name, init});
  return init;
}

bool ParameterStore::contains(const std::string& name) const { return index_.count(name) > 0; }

Tensor ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
  return params_[it->second].tensor;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

void ParameterStore::assign(const std::map<std::string, std::vector<double>>& values) {
  for (auto& p : params_) {
    auto it = values.find(p.name);
    if (it == values.end()) throw DataError("missing parameter " + p.name);
    if (it->second.size() != p.tensor.numel()) {
      throw ShapeError("parameter " + p.name + " expects " + std::to_string(p.tensor.numel()) +
                       " values, got " + std::to_string(it->second.size()));
    }
  }
  for (auto& p : params_) {
    const auto& v = values.at(p.name);
    auto dst = p.tensor.mutable_data();
    std::copy(v.begin(), v.end(), dst.begin());
  }
}

std::map<std::string, std::vector<double>> ParameterStore::snapshot() const {
  std::map<std::string, std::vector<double>> out;
  for (const auto& p : params_) out[p.name] = p.tensor.to_vector();
  return out;
}

Tensor uniform_init(Shape shape, double bound, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v));
}

Tensor fan_in_init(Shape shape, std::size_t fan_in, Rng& rng) {
  return uniform_init(std::move(shape), 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

}  // namespace mhp
