#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mhp {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

// One vertex of the differentiation graph. Leaves have no parents and no
// backward rule; every other node was produced by an op.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;
  std::uint64_t id = 0;

  std::span<double> grad_buffer();
  bool is_leaf() const { return parents.empty(); }
};

}  // namespace detail

// Dense row-major float64 tensor with reverse-mode differentiation.
//
// A Tensor is a cheap handle; copies share the same underlying node. Values
// of a node are never mutated once the node is consumed by an op.
class Tensor {
 public:
  Tensor();

  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor ones(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  // Size of `axis`; negative axes count from the back.
  std::size_t dim(int axis) const;

  std::span<const double> data() const;
  // Write access for leaves (parameter updates, test perturbations). Throws
  // if the tensor was produced by an op.
  std::span<double> mutable_data();
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;
  std::vector<double> to_vector() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  // Gradient buffer; all zeros when nothing has been accumulated yet.
  std::vector<double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Accumulates d(this)/d(leaf) into every reachable leaf that requires a
  // gradient, then releases the graph. `this` must be a scalar.
  void backward() const;

  // New leaf sharing no graph with this tensor.
  Tensor detach() const;

  bool defined() const { return static_cast<bool>(node_); }
  std::uint64_t id() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node);

 private:
  std::shared_ptr<detail::Node> node_;
};

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

namespace detail {

// Builds an op result. The graph edge is recorded only when recording is
// enabled and some parent requires a gradient.
Tensor make_result(Shape shape, std::vector<double> values,
                   std::vector<Tensor> parents,
                   std::function<void(Node&)> backward);

// Nodes reachable from `root` that require a gradient, ordered so that every
// node appears after all nodes it depends on.
std::vector<Node*> topological_order(Node& root);

}  // namespace detail

}  // namespace mhp
