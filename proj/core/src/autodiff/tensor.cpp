// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/autodiff/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "e2eqr/errors.hpp"

namespace e2eqr::autodiff {

namespace {
thread_local bool t_grad_enabled = true;
}  // namespace

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ')';
  return out.str();
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  auto n = shape_size(shape);
  return from_data(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_data(Shape shape, std::vector<T> data, bool requires_grad) {
  if (shape.size() > 2) throw DimensionError("tensors are limited to rank 2, got " + shape_string(shape));
  if (shape_size(shape) != data.size()) {
    throw DimensionError("shape " + shape_string(shape) + " does not match " + std::to_string(data.size()) +
                         " values");
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from_data({}, {value}, requires_grad);
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return node_->shape;
}

template <typename T>
std::size_t Tensor<T>::size() const {
  return node_ ? node_->data.size() : 0;
}

template <typename T>
std::size_t Tensor<T>::rows() const {
  const auto& s = shape();
  return s.size() == 2 ? s[0] : 1;
}

template <typename T>
std::size_t Tensor<T>::cols() const {
  const auto& s = shape();
  return s.empty() ? 1 : s.back();
}

template <typename T>
std::span<const T> Tensor<T>::data() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return node_->data;
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
  if (!node_) throw ContractError("use of an undefined tensor");
  if (!node_->is_leaf) throw ContractError("only leaf tensors may be modified in place");
  return node_->data;
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw DimensionError("item() requires a single-element tensor, got " + shape_string(shape()));
  return node_->data[0];
}

template <typename T>
std::vector<T> Tensor<T>::grad() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  if (node_->grad.empty()) return std::vector<T>(node_->data.size(), T(0));
  return node_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (node_) node_->grad.clear();
}

template <typename T>
void Tensor<T>::set_requires_grad(bool flag) {
  if (!node_) throw ContractError("use of an undefined tensor");
  if (!node_->is_leaf) throw ContractError("requires_grad can only be toggled on leaves");
  node_->requires_grad = flag;
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from_data(shape(), std::vector<T>(data().begin(), data().end()));
}

template <typename T>
void Tensor<T>::backward() const {
  if (!node_) throw ContractError("backward() on an undefined tensor");
  if (node_->data.size() != 1) {
    throw ContractError("backward() requires a scalar loss, got shape " + shape_string(node_->shape));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS; `order` ends up parents-before-children.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  for (auto* node : order) {
    if (!node->is_leaf) node->grad.assign(node->data.size(), T(0));
  }
  node_->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

template <typename T>
Tensor<T> ParameterSet<T>::add(std::string name, Tensor<T> tensor) {
  if (find(name)) throw ContractError("duplicate parameter name '" + name + "'");
  tensor.set_requires_grad(true);
  items_.push_back({std::move(name), tensor});
  return tensor;
}

template <typename T>
const Parameter<T>* ParameterSet<T>::find(const std::string& name) const {
  auto it = std::find_if(items_.begin(), items_.end(), [&](const auto& p) { return p.name == name; });
  return it == items_.end() ? nullptr : &*it;
}

template <typename T>
std::size_t ParameterSet<T>::element_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.tensor.size();
  return n;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& p : items_) p.tensor.zero_grad();
}

template class Tensor<float>;
template class Tensor<double>;
template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace e2eqr::autodiff
