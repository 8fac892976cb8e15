#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace motionlab {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {

// One vertex of the define-by-run gradient tape. Values are immutable once an
// operation has produced them; `grad` is (re)allocated by every backward pass.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and adds contributions into the parents' grads.
  std::function<void(Node&)> backward;
};

}  // namespace detail

/// Dense row-major array of doubles with optional participation in the
/// gradient tape.
///
/// A Tensor is a cheap handle: copies share the underlying node. Operations
/// always allocate fresh nodes, so only leaves (parameters, inputs) are ever
/// mutated in place, and only through `mutable_data()`.
class Tensor {
 public:
  Tensor();

  /// Validated constructor: shape entries must be positive, the element
  /// count must match, and every value must be finite.
  static Tensor create(Shape shape, std::vector<double> data);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  std::span<double> mutable_data() { return node_->value; }
  std::vector<double> to_vector() const { return node_->value; }

  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool flag);

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  void clear_grad() { node_->grad.clear(); }

  /// Same values, cut from the tape.
  Tensor detach() const;
  /// Deep copy of the values (grad disabled).
  Tensor clone() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

}  // namespace motionlab
