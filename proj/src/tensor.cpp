#include "motionlab/tensor.hpp"

#include <cmath>
#include <sstream>

#include "motionlab/error.hpp"

namespace motionlab {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor() : node_(std::make_shared<detail::Node>()) {
  node_->value.assign(1, 0.0);
}

Tensor Tensor::create(Shape shape, std::vector<double> data) {
  for (auto d : shape) {
    if (d == 0) throw Error(ErrorKind::shape, "tensor shape " + shape_to_string(shape) + " has a zero dimension");
  }
  if (shape_numel(shape) != data.size()) {
    throw Error(ErrorKind::shape, "tensor shape " + shape_to_string(shape) + " needs " +
                                      std::to_string(shape_numel(shape)) + " values, got " +
                                      std::to_string(data.size()));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw Error(ErrorKind::domain, "tensor value at flat index " + std::to_string(i) + " is not finite");
    }
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const auto n = shape_numel(shape);
  return create(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return create({}, {value}); }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw Error(ErrorKind::shape, "axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(shape()));
  }
  return node_->shape[axis];
}

double Tensor::item() const {
  if (numel() != 1) throw Error(ErrorKind::shape, "item() on tensor of shape " + shape_to_string(shape()));
  return node_->value[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  if (index.size() != rank()) throw Error(ErrorKind::shape, "index rank does not match tensor rank");
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= node_->shape[axis]) throw Error(ErrorKind::shape, "index out of range");
    flat = flat * node_->shape[axis] + i;
    ++axis;
  }
  return node_->value[flat];
}

Tensor& Tensor::set_requires_grad(bool flag) {
  node_->requires_grad = flag;
  return *this;
}

Tensor Tensor::detach() const {
  auto node = std::make_shared<detail::Node>();
  node->shape = node_->shape;
  node->value = node_->value;
  return Tensor(std::move(node));
}

Tensor Tensor::clone() const { return detach(); }

}  // namespace motionlab
