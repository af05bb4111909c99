#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace esefn {

/// Extents of a dense tensor of rank 0..3. Rank 0 is a scalar.
class Shape {
 public:
  static constexpr std::size_t kMaxRank = 3;

  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::span<const std::size_t> dims);

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t axis) const;
  std::size_t numel() const;
  std::span<const std::size_t> dims() const { return {dims_.data(), rank_}; }
  std::string str() const;

  friend bool operator==(const Shape& a, const Shape& b) {
    return a.rank_ == b.rank_ && a.dims_ == b.dims_;
  }

 private:
  std::array<std::size_t, kMaxRank> dims_{};
  std::uint8_t rank_ = 0;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty unless requires_grad
  bool requires_grad = false;
  std::string_view op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into inputs that require grad.
  std::function<void(const Node&)> backprop;

  bool is_leaf() const { return inputs.empty(); }
};

}  // namespace detail

/// Dense row-major float64 tensor with reverse-mode gradient tracking.
///
/// Tensor is a handle: copies share storage and gradient. Values must stay
/// finite; a NaN or Inf is rejected with NumericError at construction and at
/// every operation output.
class Tensor {
 public:
  Tensor();  // scalar 0, no grad
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  /// Mutable view for in-place parameter updates. Does not re-check finiteness.
  std::span<double> mutable_values() { return node_->value; }

  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t i, std::size_t j) const;
  double at(std::size_t i, std::size_t j, std::size_t k) const;

  bool requires_grad() const { return node_->requires_grad; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  void zero_grad();

  /// Fresh leaf holding a copy of the values.
  Tensor detach(bool requires_grad = false) const;

  bool is_leaf() const { return node_->is_leaf(); }
  std::string_view op() const { return node_->op; }
  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  /// Runs reverse-mode differentiation seeded at this scalar.
  void backward() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

  /// Builds an operation output. `backprop` may be empty when no input
  /// requires grad.
  static Tensor from_op(std::string_view op, Shape shape, std::vector<double> values,
                        std::vector<Tensor> inputs,
                        std::function<void(const detail::Node&)> backprop);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;
};

/// Operation record reachable from a root tensor, in topological order
/// (inputs before the operations consuming them).
class ComputeGraph {
 public:
  explicit ComputeGraph(const Tensor& root);

  std::size_t size() const { return order_.size(); }
  const std::vector<std::shared_ptr<detail::Node>>& nodes() const { return order_; }

  /// Seeds d(root)/d(root) = 1 and propagates. Leaf gradients accumulate
  /// across calls; intermediate gradients are recomputed each call.
  void backward();

 private:
  std::shared_ptr<detail::Node> root_;
  std::vector<std::shared_ptr<detail::Node>> order_;
};

/// backward over the graph reachable from `loss`. Throws UsageError unless
/// `loss` holds exactly one element.
void backward(const Tensor& loss);

/// Throws NumericError naming `where` if any value is NaN or infinite.
void require_finite(std::span<const double> values, std::string_view where);

}  // namespace esefn
