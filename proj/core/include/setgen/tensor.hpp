#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "setgen/matrix.hpp"

namespace setgen {

// Tensor shape, rank 0 to 3. Rank 0 is a scalar with one element.
using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

// One value in the computation trace. Leaves have no parents; interior
// nodes own their parents and a closure that pushes their gradient back.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty means "no gradient yet"
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  bool is_leaf() const { return parents.empty(); }
  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

// Handle to a node of the reverse-mode trace. Copies share the node.
// Values are immutable once built; only leaf parameters are updated in place
// (by optimizers) through mutable_data().
class Tensor {
 public:
  Tensor() = default;

  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from_matrix(const Matrix& m, bool requires_grad = false);
  // Row vector of shape {1, n}.
  static Tensor row(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const { return node().value.size(); }
  // Leading and trailing extents of a rank-2 tensor.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node().value; }
  std::span<double> mutable_data() { return node().value; }
  double item() const;
  double at(std::size_t i) const { return node().value[i]; }
  double at(std::size_t i, std::size_t j) const;

  bool requires_grad() const { return node().requires_grad; }
  bool has_grad() const { return !node().grad.empty(); }
  std::span<const double> grad() const { return node().grad; }
  std::span<double> mutable_grad() { return node().grad_buffer(); }
  void zero_grad();

  // Reverse pass from a scalar. Leaf gradients accumulate across calls.
  void backward() const;

  // Same value, cut from the trace.
  Tensor detach() const;
  Matrix to_matrix() const;
  const char* op() const { return node().op; }

  // Internal: used by op implementations.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }
  detail::Node& node() const;

 private:
  std::shared_ptr<detail::Node> node_;
};

// Global switch for finiteness checks after every op (on by default).
void set_debug_checks(bool enabled);
bool debug_checks();

}  // namespace setgen
