#include "esefn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "esefn/error.hpp"

namespace esefn {

Shape::Shape(std::initializer_list<std::size_t> dims)
    : Shape(std::span<const std::size_t>(dims.begin(), dims.size())) {}

Shape::Shape(std::span<const std::size_t> dims) {
  if (dims.size() > kMaxRank) {
    throw DimensionError("tensor rank " + std::to_string(dims.size()) +
                         " exceeds the supported maximum of 3");
  }
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] == 0) {
      throw DimensionError("tensor extents must be positive, got axis " +
                           std::to_string(i) + " = 0");
    }
    dims_[i] = dims[i];
  }
  rank_ = static_cast<std::uint8_t>(dims.size());
}

std::size_t Shape::operator[](std::size_t axis) const {
  if (axis >= rank_) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + str());
  }
  return dims_[axis];
}

std::size_t Shape::numel() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
  return n;
}

std::string Shape::str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < rank_; ++i) {
    if (i) s += " x ";
    s += std::to_string(dims_[i]);
  }
  return s + "]";
}

void require_finite(std::span<const double> values, std::string_view where) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError("non-finite value " + std::to_string(values[i]) + " at element " +
                         std::to_string(i) + " of " + std::string(where));
    }
  }
}

namespace {

std::shared_ptr<detail::Node> make_leaf(Shape shape, std::vector<double> values,
                                        bool requires_grad) {
  if (shape.numel() != values.size()) {
    throw DimensionError("shape " + shape.str() + " holds " + std::to_string(shape.numel()) +
                         " elements but " + std::to_string(values.size()) + " were given");
  }
  require_finite(values, "tensor constructor");
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->value.size(), 0.0);
  return node;
}

}  // namespace

Tensor::Tensor() : Tensor(Shape{}, std::vector<double>{0.0}, false) {}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : node_(make_leaf(shape, std::move(values), requires_grad)) {}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return filled(shape, 0.0, requires_grad);
}

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  return Tensor(shape, std::vector<double>(shape.numel(), value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{}, {value}, requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  Shape shape{values.size()};
  return Tensor(shape, std::move(values), requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) {
    throw DimensionError("item() requires a single element, shape is " + shape().str());
  }
  return node_->value[0];
}

double Tensor::at(std::size_t i) const {
  if (shape().rank() != 1 || i >= shape()[0]) {
    throw DimensionError("index [" + std::to_string(i) + "] invalid for shape " + shape().str());
  }
  return node_->value[i];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  const Shape& s = shape();
  if (s.rank() != 2 || i >= s[0] || j >= s[1]) {
    throw DimensionError("index [" + std::to_string(i) + "," + std::to_string(j) +
                         "] invalid for shape " + s.str());
  }
  return node_->value[i * s[1] + j];
}

double Tensor::at(std::size_t i, std::size_t j, std::size_t k) const {
  const Shape& s = shape();
  if (s.rank() != 3 || i >= s[0] || j >= s[1] || k >= s[2]) {
    throw DimensionError("index [" + std::to_string(i) + "," + std::to_string(j) + "," +
                         std::to_string(k) + "] invalid for shape " + s.str());
  }
  return node_->value[(i * s[1] + j) * s[2] + k];
}

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

Tensor Tensor::detach(bool requires_grad) const {
  return Tensor(shape(), node_->value, requires_grad);
}

void Tensor::backward() const { esefn::backward(*this); }

Tensor Tensor::from_op(std::string_view op, Shape shape, std::vector<double> values,
                       std::vector<Tensor> inputs,
                       std::function<void(const detail::Node&)> backprop) {
  if (shape.numel() != values.size()) {
    throw DimensionError(std::string(op) + ": output shape " + shape.str() +
                         " does not match " + std::to_string(values.size()) + " values");
  }
  require_finite(values, std::string(op) + " output");
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->value = std::move(values);
  node->op = op;
  bool any_grad = false;
  node->inputs.reserve(inputs.size());
  for (auto& in : inputs) {
    any_grad = any_grad || in.requires_grad();
    node->inputs.push_back(in.node_);
  }
  if (any_grad && backprop) {
    node->requires_grad = true;
    node->grad.assign(node->value.size(), 0.0);
    node->backprop = std::move(backprop);
  }
  return Tensor(std::move(node));
}

ComputeGraph::ComputeGraph(const Tensor& root) : root_(root.node()) {
  // Iterative post-order DFS; only nodes that carry gradients matter.
  std::unordered_set<const detail::Node*> visited;
  std::vector<std::pair<std::shared_ptr<detail::Node>, std::size_t>> stack;
  if (root_->requires_grad) stack.emplace_back(root_, 0);
  visited.insert(root_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      const auto& child = node->inputs[next++];
      if (child->requires_grad && visited.insert(child.get()).second) {
        stack.emplace_back(child, 0);
      }
      continue;
    }
    order_.push_back(node);
    stack.pop_back();
  }
}

void ComputeGraph::backward() {
  if (root_->value.size() != 1) {
    throw UsageError("backward needs a scalar seed, got shape " + root_->shape.str());
  }
  if (order_.empty()) return;
  for (const auto& node : order_) {
    if (!node->is_leaf()) std::fill(node->grad.begin(), node->grad.end(), 0.0);
  }
  if (root_->is_leaf()) {
    root_->grad[0] += 1.0;
    return;
  }
  root_->grad[0] = 1.0;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    const detail::Node& node = **it;
    if (!node.is_leaf() && node.backprop) node.backprop(node);
  }
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw UsageError("backward needs a scalar seed, got shape " + loss.shape().str());
  }
  ComputeGraph graph(loss);
  graph.backward();
}

}  // namespace esefn
