#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "rgcnqa/numcore/param.h"
#include "rgcnqa/numcore/random.h"
#include "rgcnqa/numcore/tensor.h"

namespace rgcnqa {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool attached() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Gradients keyed by parameter identity.
class Gradients {
 public:
  const Tensor* find(const Param& p) const;
  const Tensor& at(const Param& p) const;
  void set(const Param& p, Tensor grad) { grads_.insert_or_assign(&p, std::move(grad)); }
  /// this += scale * other, parameter by parameter.
  void accumulate(const Gradients& other, double scale = 1.0);
  void scale(double factor);
  std::size_t size() const { return grads_.size(); }
  bool empty() const { return grads_.empty(); }

 private:
  std::unordered_map<const Param*, Tensor> grads_;
};

/// Reverse-mode gradient tape. Ops append nodes in execution order, so the
/// node list is always topologically sorted; backward() replays it in reverse.
class Tape {
 public:
  /// Accumulates the gradient of node `self` into its parents.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(std::uint64_t seed = 0, bool record_backward = true)
      : seed_(seed), rng_(seed), record_backward_(record_backward) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Registers a parameter leaf; repeated calls for the same Param return the same Var.
  Var param(Param& p);

  /// Appends an op result. Throws NumericError if `value` holds NaN/Inf.
  Var record(const char* op, Tensor value, std::vector<std::size_t> parents, BackwardFn backward);

  /// Runs reverse accumulation from a 1 x 1 loss and returns the gradient of
  /// every registered parameter. Consumes the tape.
  Gradients backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  /// Gradient buffer of a node, allocated as zeros on first access.
  Tensor& grad(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  std::size_t size() const { return nodes_.size(); }
  std::uint64_t seed() const { return seed_; }
  Rng& rng() { return rng_; }
  bool recording() const { return record_backward_; }
  bool consumed() const { return consumed_; }
  void check_owner(const Var& v, const char* op) const;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    Param* param = nullptr;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Param*, std::size_t> param_ids_;
  std::vector<Param*> param_order_;
  std::uint64_t seed_;
  Rng rng_;
  bool record_backward_;
  bool consumed_ = false;
};

}  // namespace rgcnqa
