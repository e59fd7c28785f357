// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace e2eqr::autodiff {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Backward-graph record behind a Tensor. Parents are held strongly; children
/// are never referenced, so the graph cannot form a cycle.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first written
  bool requires_grad = false;
  bool is_leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<T>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    return grad;
  }
};

/// Whether ops record backward nodes on the current thread.
bool grad_enabled();

/// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Dense row-major array of rank 0..2 with an optional gradient-tracking node.
///
/// Tensors share their node on copy. Values are immutable after construction
/// except through `mutable_data()` on leaves (parameters, test fixtures).
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<T> data, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  /// Rows of the matrix view: shape[0] for rank 2, 1 otherwise.
  std::size_t rows() const;
  /// Columns of the matrix view: last dimension, 1 for scalars.
  std::size_t cols() const;

  std::span<const T> data() const;
  std::span<T> mutable_data();
  T at(std::size_t row, std::size_t col) const { return data()[row * cols() + col]; }
  T item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  /// Gradient buffer; all zeros when nothing has been accumulated yet.
  std::vector<T> grad() const;
  void zero_grad();
  void set_requires_grad(bool flag);

  /// Seeds d(self)/d(self) = 1 and propagates through the graph. Leaf gradients
  /// accumulate across calls; interior gradients are recomputed each call.
  void backward() const;

  const char* op() const { return node_ ? node_->op : "undefined"; }
  const std::shared_ptr<Node<T>>& node() const { return node_; }

  /// Copy of the values as a fresh untracked leaf.
  Tensor detach() const;

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Named trainable tensor ("dec.layer0.sa.wq").
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> tensor;
};

/// Ordered parameter collection with unique names.
template <typename T>
class ParameterSet {
 public:
  Tensor<T> add(std::string name, Tensor<T> tensor);
  const std::vector<Parameter<T>>& items() const { return items_; }
  std::vector<Parameter<T>>& items() { return items_; }
  const Parameter<T>* find(const std::string& name) const;
  std::size_t size() const { return items_.size(); }
  std::size_t element_count() const;
  void zero_grad();

 private:
  std::vector<Parameter<T>> items_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class ParameterSet<float>;
extern template class ParameterSet<double>;

}  // namespace e2eqr::autodiff
