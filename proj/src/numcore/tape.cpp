#include "rgcnqa/numcore/tape.h"

#include <string>

namespace rgcnqa {

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("Var: detached handle has no value");
  return tape_->value(id_);
}

const Tensor* Gradients::find(const Param& p) const {
  auto it = grads_.find(&p);
  return it == grads_.end() ? nullptr : &it->second;
}

const Tensor& Gradients::at(const Param& p) const {
  const Tensor* g = find(p);
  if (g == nullptr) throw std::out_of_range("Gradients: parameter has no gradient");
  return *g;
}

void Gradients::accumulate(const Gradients& other, double scale) {
  for (const auto& [param, grad] : other.grads_) {
    auto it = grads_.find(param);
    if (it == grads_.end()) {
      Tensor scaled = grad;
      for (double& v : scaled.values()) v *= scale;
      grads_.emplace(param, std::move(scaled));
      continue;
    }
    if (it->second.shape() != grad.shape()) throw ShapeError("Gradients::accumulate: shape mismatch");
    auto dst = it->second.data();
    auto src = grad.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  }
}

void Gradients::scale(double factor) {
  for (auto& [param, grad] : grads_) {
    for (double& v : grad.values()) v *= factor;
  }
}

void Tape::check_owner(const Var& v, const char* op) const {
  if (v.tape() != this) {
    throw std::logic_error(std::string(op) + ": operand is not recorded on this tape");
  }
  if (consumed_) throw std::logic_error(std::string(op) + ": tape already consumed by backward()");
}

Var Tape::constant(Tensor value) {
  if (consumed_) throw std::logic_error("constant: tape already consumed by backward()");
  if (!value.all_finite()) throw NumericError("constant: non-finite input");
  nodes_.push_back(Node{std::move(value), {}, false, false, {}, {}, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Param& p) {
  if (consumed_) throw std::logic_error("param: tape already consumed by backward()");
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return Var(this, it->second);
  if (!p.value.all_finite()) throw NumericError("param: non-finite parameter value");
  nodes_.push_back(Node{p.value, {}, false, record_backward_, {}, {}, &p});
  const std::size_t id = nodes_.size() - 1;
  param_ids_.emplace(&p, id);
  param_order_.push_back(&p);
  return Var(this, id);
}

Var Tape::record(const char* op, Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
  if (consumed_) throw std::logic_error(std::string(op) + ": tape already consumed by backward()");
  if (!value.all_finite()) throw NumericError(std::string(op) + ": non-finite output");
  bool needs = false;
  if (record_backward_) {
    for (std::size_t p : parents) needs = needs || nodes_[p].requires_grad;
  }
  Node node{std::move(value), {}, false, needs, {}, {}, nullptr};
  if (needs) {
    node.parents = std::move(parents);
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

Gradients Tape::backward(Var loss) {
  if (!loss.attached()) throw std::logic_error("backward: loss is a detached tensor");
  check_owner(loss, "backward");
  if (!record_backward_) throw std::logic_error("backward: tape was created without gradient recording");
  if (value(loss.id()).size() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + shape_str(value(loss.id()).shape()));
  }

  grad(loss.id()).fill(1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, i);
  }

  Gradients out;
  for (Param* p : param_order_) {
    Node& n = nodes_[param_ids_.at(p)];
    out.set(*p, n.has_grad ? std::move(n.grad) : Tensor(n.value.shape()));
  }
  consumed_ = true;
  return out;
}

}  // namespace rgcnqa
