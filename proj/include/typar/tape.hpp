#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <random>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "typar/error.hpp"

namespace typar {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// true marks an entry that is excluded from a row softmax
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Rng = std::mt19937_64;

template <class S>
struct Parameter {
  std::string name;
  Matrix<S> value;
  Matrix<S> grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Matrix<S> v, bool train = true)
      : name(std::move(n)), value(std::move(v)), trainable(train) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Eigen::Index size() const { return value.size(); }
};

template <class S>
class Tape;

template <class S>
class Var {
 public:
  Var() = default;
  Var(Tape<S>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<S>* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  const Matrix<S>& value() const { return tape_->value(id_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  explicit operator bool() const { return tape_ != nullptr; }

 private:
  Tape<S>* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records primitive ops in execution order; backward() walks them in reverse.
// Parameter leaves accumulate straight into Parameter::grad. Leaves made from
// untrainable parameters or constants never receive gradients, and ops whose
// inputs are all such leaves store no backward rule.
template <class S>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self, const Matrix<S>& grad)>;

  // With gradients == false every leaf is a constant: nothing is recorded for
  // backward, which is what inference wants.
  explicit Tape(bool check_finite = std::is_same_v<S, double>, bool gradients = true)
      : check_finite_(check_finite), gradients_(gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<S> constant(Matrix<S> value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  // Leaf that refers to caller-owned storage; it must outlive the tape.
  Var<S> constant_ref(const Matrix<S>& value) {
    Node n;
    n.ext = &value;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  Var<S> param(Parameter<S>& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return {this, it->second};
    Node n;
    n.ext = &p.value;
    if (p.trainable && gradients_) {
      n.param = &p;
      n.requires_grad = true;
    }
    nodes_.push_back(std::move(n));
    param_nodes_.emplace(&p, nodes_.size() - 1);
    return {this, nodes_.size() - 1};
  }

  Var<S> record(const char* op, Matrix<S> value, std::initializer_list<Var<S>> inputs,
                BackwardFn fn) {
    Node n;
    for (const auto& in : inputs) {
      if (in.tape() != this) throw InvariantError(std::string(op) + ": input from another tape");
      n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
    }
    if (check_finite_ && !value.allFinite())
      throw InvariantError(std::string("non-finite value produced by ") + op);
    n.value = std::move(value);
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  void backward(const Var<S>& loss) {
    if (loss.tape() != this) throw InvariantError("backward: loss is not on this tape");
    if (backward_done_) throw InvariantError("backward: already run on this tape");
    const Matrix<S>& lv = value(loss.id());
    if (lv.rows() != 1 || lv.cols() != 1) throw InvariantError("backward: loss must be scalar");
    backward_done_ = true;
    if (!nodes_[loss.id()].requires_grad) return;
    grad_ref(loss.id()).setOnes();
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.size() == 0) continue;
      n.backward(*this, i, n.grad);
    }
  }

  const Matrix<S>& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.ext ? *n.ext : n.value;
  }

  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(const Var<S>& v) const { return nodes_[v.id()].requires_grad; }

  // Gradient buffer of a node, zero-filled on first touch.
  Matrix<S>& grad_ref(std::size_t id) {
    Node& n = nodes_[id];
    const Matrix<S>& v = value(id);
    Matrix<S>& g = n.param ? n.param->grad : n.grad;
    if (g.rows() != v.rows() || g.cols() != v.cols()) g.setZero(v.rows(), v.cols());
    return g;
  }

  // Accumulated gradient at v after backward(); empty when none reached it.
  const Matrix<S>& grad(const Var<S>& v) const {
    const Node& n = nodes_[v.id()];
    return n.param ? n.param->grad : n.grad;
  }

  std::size_t size() const { return nodes_.size(); }
  bool checks_finite() const { return check_finite_; }

 private:
  struct Node {
    Matrix<S> value;
    const Matrix<S>* ext = nullptr;
    Matrix<S> grad;
    Parameter<S>* param = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<S>*, std::size_t> param_nodes_;
  bool check_finite_;
  bool gradients_;
  bool backward_done_ = false;
};

}  // namespace typar
