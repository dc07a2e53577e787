// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "icdnet/error.hpp"
#include "icdnet/tensor.hpp"

namespace icdnet {

/// A trainable tensor with its accumulated gradient. `decay` marks the
/// tensor as subject to the L2 penalty (weight matrices only).
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool decay = true;

  void zero_grad() { grad.fill(0.0); }
};

/// Ordered collection of parameters. Order is insertion order and is part of
/// the checkpoint format.
class ParameterSet {
 public:
  Parameter& add(std::string name, Tensor value, bool decay) {
    if (contains(name)) throw Error("duplicate parameter name: " + name);
    Tensor grad(value.shape());
    params_.push_back(Parameter{std::move(name), std::move(value), std::move(grad), decay});
    return params_.back();
  }

  bool contains(std::string_view name) const {
    for (const auto& p : params_)
      if (p.name == name) return true;
    return false;
  }

  Parameter& operator[](std::string_view name) {
    for (auto& p : params_)
      if (p.name == name) return p;
    throw Error("no parameter named " + std::string(name));
  }
  const Parameter& operator[](std::string_view name) const {
    return const_cast<ParameterSet&>(*this)[name];
  }

  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }
  std::size_t size() const { return params_.size(); }

  /// Total number of scalar values.
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    if (a.params_.size() != b.params_.size()) return false;
    for (std::size_t i = 0; i < a.params_.size(); ++i) {
      if (a.params_[i].name != b.params_[i].name || !(a.params_[i].value == b.params_[i].value))
        return false;
    }
    return true;
  }

 private:
  std::vector<Parameter> params_;
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;

  Graph* graph() const { return g_; }
  std::size_t id() const { return id_; }
  bool valid() const { return g_ != nullptr; }

  inline const Tensor& value() const;
  inline const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Graph;
  Var(Graph* g, std::size_t id) : g_(g), id_(id) {}
  Graph* g_ = nullptr;
  std::size_t id_ = 0;
};

/// Tape of nodes in creation order, which is a topological order, so the
/// backward sweep is a reverse scan. A graph is confined to one thread.
class Graph {
 public:
  using Backward = std::function<void(Graph&, std::size_t self)>;

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Tensor value) { return push(std::move(value), nullptr, nullptr, false, nullptr); }

  /// Free leaf that owns its gradient.
  Var leaf(Tensor value) { return push(std::move(value), nullptr, nullptr, grad_enabled_, nullptr); }

  /// Leaf bound to a parameter: reads its value in place and accumulates
  /// directly into its grad.
  Var param(Parameter& p) { return push(Tensor(), &p.value, &p.grad, grad_enabled_, nullptr); }

  Var record(Tensor value, std::initializer_list<Var> parents, Backward fn) {
    bool req = false;
    if (grad_enabled_) {
      for (const Var& p : parents) req = req || nodes_[p.id()].requires_grad;
    }
    return push(std::move(value), nullptr, nullptr, req, req ? std::move(fn) : nullptr);
  }

  /// Like record() for ops whose gradient sinks are not graph nodes.
  Var record_sink(Tensor value, Backward fn) {
    return push(std::move(value), nullptr, nullptr, grad_enabled_,
                grad_enabled_ ? std::move(fn) : nullptr);
  }

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.value_ref ? *n.value_ref : n.value;
  }

  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient buffer of a node, zero-allocated on first touch.
  Tensor& grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad_ref) return *n.grad_ref;
    if (n.grad.empty()) n.grad = Tensor(value(id).shape());
    return n.grad;
  }

  bool has_grad(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.grad_ref != nullptr || !n.grad.empty();
  }

  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a scalar root. Gradients accumulate, so a node with
  /// several consumers receives the sum over paths.
  void backward(Var root) {
    if (root.graph() != this) throw Error("backward: root belongs to another graph");
    if (value(root.id()).size() != 1) {
      throw DimensionError("backward: root must be scalar, got " +
                           shape_str(value(root.id()).shape()));
    }
    if (!nodes_[root.id()].requires_grad) return;
    grad(root.id())[0] += 1.0;
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && n.requires_grad && has_grad(i)) n.backward(*this, i);
    }
  }

 private:
  struct Node {
    Tensor value;
    const Tensor* value_ref = nullptr;
    Tensor grad;
    Tensor* grad_ref = nullptr;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Tensor value, const Tensor* value_ref, Tensor* grad_ref, bool req, Backward fn) {
    Node n;
    n.value = std::move(value);
    n.value_ref = value_ref;
    n.grad_ref = grad_ref;
    n.requires_grad = req;
    n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  bool grad_enabled_;
  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return g_->value(id_); }
inline const Tensor& Var::grad() const { return g_->grad(id_); }

}  // namespace icdnet
