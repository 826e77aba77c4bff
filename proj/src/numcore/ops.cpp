#include "rgcnqa/numcore/ops.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rgcnqa::ops {
namespace {

Tape& owner(const Var& a, const char* op) {
  if (!a.attached()) throw std::logic_error(std::string(op) + ": detached operand");
  Tape& t = *a.tape();
  t.check_owner(a, op);
  return t;
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected rank-2 operand, got " + shape_str(t.shape()));
}

// Naive row-major product, i-k-j loop order.
void gemm_acc(const Tensor& a, bool ta, const Tensor& b, bool tb, Tensor& c) {
  const std::size_t m = c.rows(), n = c.cols();
  const std::size_t k = ta ? a.rows() : a.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = &c(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ta ? a(p, i) : a(i, p);
      if (av == 0.0) continue;
      if (!tb) {
        const double* brow = b.data().data() + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * b(j, p);
      }
    }
  }
}

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  return b.rows() == 1 && a.rows() != 1 && b.cols() == a.cols();
}

// Reduces an upstream gradient to b's shape (sums rows when b was broadcast).
void accumulate_broadcast(const Tensor& g, Tensor& gb, bool broadcast, double sign = 1.0) {
  if (!broadcast) {
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
    return;
  }
  const std::size_t n = g.cols();
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < n; ++c) gb[c] += sign * g(r, c);
  }
}

Var unary(const char* op, Var a, double (*fwd)(double), double (*dfdy)(double)) {
  Tape& t = owner(a, op);
  const Tensor& av = a.value();
  require_rank2(av, op);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  const std::size_t ia = a.id();
  return t.record(op, std::move(out), {ia}, [ia, dfdy](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    const Tensor& y = tp.value(self);
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < y.size(); ++i) ga[i] += g[i] * dfdy(y[i]);
  });
}

Var binary(Elementwise kind, Var a, Var b) {
  const char* op = kind == Elementwise::add ? "add" : kind == Elementwise::sub ? "sub" : "mul";
  Tape& t = owner(a, op);
  t.check_owner(b, op);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, op);
  require_rank2(bv, op);
  const bool bcast = is_row_broadcast(av, bv);
  if (av.shape() != bv.shape() && !bcast) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  }
  const std::size_t n = av.cols();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double x = av[i];
    const double y = bcast ? bv[i % n] : bv[i];
    switch (kind) {
      case Elementwise::add: out[i] = x + y; break;
      case Elementwise::sub: out[i] = x - y; break;
      default: out[i] = x * y; break;
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(op, std::move(out), {ia, ib}, [kind, ia, ib, bcast, n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (kind == Elementwise::mul) {
      const Tensor& x = tp.value(ia);
      const Tensor& y = tp.value(ib);
      if (tp.requires_grad(ia)) {
        Tensor& ga = tp.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (bcast ? y[i % n] : y[i]);
      }
      if (tp.requires_grad(ib)) {
        Tensor& gb = tp.grad(ib);
        for (std::size_t i = 0; i < g.size(); ++i) gb[bcast ? i % n : i] += g[i] * x[i];
      }
      return;
    }
    if (tp.requires_grad(ia)) {
      Tensor& ga = tp.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.requires_grad(ib)) {
      accumulate_broadcast(g, tp.grad(ib), bcast, kind == Elementwise::sub ? -1.0 : 1.0);
    }
  });
}

double sigmoid_scalar(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = owner(a, "matmul");
  t.check_owner(b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner extents differ, " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
  }
  Tensor out = Tensor::matrix(av.rows(), bv.cols());
  gemm_acc(av, false, bv, false, out);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record("matmul", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ia)) gemm_acc(g, false, tp.value(ib), true, tp.grad(ia));
    if (tp.requires_grad(ib)) gemm_acc(tp.value(ia), true, g, false, tp.grad(ib));
  });
}

Var elementwise(Elementwise kind, Var a, std::optional<Var> b) {
  switch (kind) {
    case Elementwise::sigmoid:
    case Elementwise::tanh:
      if (b) throw std::invalid_argument("elementwise: unary kind given a second operand");
      return kind == Elementwise::sigmoid ? sigmoid(a) : tanh(a);
    default:
      if (!b) throw std::invalid_argument("elementwise: binary kind needs a second operand");
      return binary(kind, a, *b);
  }
}

Var add(Var a, Var b) { return binary(Elementwise::add, a, b); }
Var sub(Var a, Var b) { return binary(Elementwise::sub, a, b); }
Var mul(Var a, Var b) { return binary(Elementwise::mul, a, b); }

Var sigmoid(Var a) {
  return unary("sigmoid", a, sigmoid_scalar, [](double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double y) { return 1.0 - y * y; });
}

Var scale(Var a, double factor) {
  Tape& t = owner(a, "scale");
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  const std::size_t ia = a.id();
  return t.record("scale", std::move(out), {ia}, [ia, factor](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

Var dropout(Var a, double rate) {
  Tape& t = owner(a, "dropout");
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  if (rate == 0.0) return a;
  const double keep = 1.0 / (1.0 - rate);
  std::vector<double> mult(a.value().size());
  for (double& m : mult) m = t.rng().uniform() < rate ? 0.0 : keep;
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mult[i];
  const std::size_t ia = a.id();
  return t.record("dropout", std::move(out), {ia}, [ia, mult = std::move(mult)](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += mult[i] * g[i];
  });
}

Var softmax_rows(Var a, const Mask* mask) {
  Tape& t = owner(a, "softmax_rows");
  const Tensor& av = a.value();
  require_rank2(av, "softmax_rows");
  const std::size_t m = av.rows(), n = av.cols();
  if (mask != nullptr && mask->size() != m * n) {
    throw ShapeError("softmax_rows: mask holds " + std::to_string(mask->size()) + " entries for " + shape_str(av.shape()));
  }
  auto on = [&](std::size_t i, std::size_t j) { return mask == nullptr || (*mask)[i * n + j] != 0; };
  Tensor out(av.shape());
  for (std::size_t i = 0; i < m; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      if (on(i, j)) mx = std::max(mx, av(i, j));
    }
    if (mx == -INFINITY) throw std::invalid_argument("softmax_rows: row " + std::to_string(i) + " is fully masked");
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!on(i, j)) continue;
      out(i, j) = std::exp(av(i, j) - mx);
      z += out(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) out(i, j) /= z;
  }
  const std::size_t ia = a.id();
  return t.record("softmax_rows", std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    const Tensor& y = tp.value(self);
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no operands");
  if (axis > 1) throw std::invalid_argument("concat: axis must be 0 or 1");
  Tape& t = owner(parts[0], "concat");
  const std::size_t fixed = parts[0].value().shape()[1 - axis];
  std::size_t total = 0;
  std::vector<std::size_t> ids, extents;
  for (const Var& p : parts) {
    t.check_owner(p, "concat");
    const Tensor& v = p.value();
    require_rank2(v, "concat");
    const std::size_t along = v.shape()[axis];
    if (along == 0) continue;
    if (v.shape()[1 - axis] != fixed) {
      throw ShapeError("concat: extent mismatch, " + shape_str(parts[0].shape()) + " vs " + shape_str(v.shape()));
    }
    ids.push_back(p.id());
    extents.push_back(along);
    total += along;
  }
  Tensor out = axis == 0 ? Tensor::matrix(total, fixed) : Tensor::matrix(fixed, total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const Tensor& v = t.value(ids[k]);
    for (std::size_t r = 0; r < v.rows(); ++r) {
      for (std::size_t c = 0; c < v.cols(); ++c) {
        if (axis == 0) out(offset + r, c) = v(r, c);
        else out(r, offset + c) = v(r, c);
      }
    }
    offset += extents[k];
  }
  return t.record("concat", std::move(out), ids, [ids, extents, axis](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (tp.requires_grad(ids[k])) {
        Tensor& gk = tp.grad(ids[k]);
        for (std::size_t r = 0; r < gk.rows(); ++r) {
          for (std::size_t c = 0; c < gk.cols(); ++c) gk(r, c) += axis == 0 ? g(off + r, c) : g(r, off + c);
        }
      }
      off += extents[k];
    }
  });
}

Var slice(Var a, std::size_t axis, std::size_t offset, std::size_t length) {
  Tape& t = owner(a, "slice");
  const Tensor& av = a.value();
  require_rank2(av, "slice");
  if (axis > 1) throw std::invalid_argument("slice: axis must be 0 or 1");
  if (offset + length > av.shape()[axis]) {
    throw ShapeError("slice: [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                     ") exceeds extent " + std::to_string(av.shape()[axis]));
  }
  Tensor out = axis == 0 ? Tensor::matrix(length, av.cols()) : Tensor::matrix(av.rows(), length);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = axis == 0 ? av(offset + r, c) : av(r, offset + c);
  }
  const std::size_t ia = a.id();
  return t.record("slice", std::move(out), {ia}, [ia, axis, offset](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) {
        if (axis == 0) ga(offset + r, c) += g(r, c);
        else ga(r, offset + c) += g(r, c);
      }
    }
  });
}

std::vector<Var> split(Var a, std::size_t axis, std::span<const std::size_t> sizes) {
  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  if (axis > 1 || total != a.value().shape()[axis]) {
    throw ShapeError("split: sizes do not cover extent of " + shape_str(a.shape()));
  }
  std::vector<Var> out;
  std::size_t off = 0;
  for (std::size_t s : sizes) {
    out.push_back(slice(a, axis, off, s));
    off += s;
  }
  return out;
}

Var transpose(Var a) {
  Tape& t = owner(a, "transpose");
  const Tensor& av = a.value();
  require_rank2(av, "transpose");
  Tensor out = Tensor::matrix(av.cols(), av.rows());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) out(c, r) = av(r, c);
  }
  const std::size_t ia = a.id();
  return t.record("transpose", std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) ga(c, r) += g(r, c);
    }
  });
}

Var repeat_rows(Var row, std::size_t count) {
  Tape& t = owner(row, "repeat_rows");
  const Tensor& v = row.value();
  require_rank2(v, "repeat_rows");
  if (v.rows() != 1) throw ShapeError("repeat_rows: expected a 1 x n row, got " + shape_str(v.shape()));
  const std::size_t n = v.cols();
  Tensor out = Tensor::matrix(count, n);
  for (std::size_t r = 0; r < count; ++r) std::copy_n(v.data().begin(), n, out.data().begin() + r * n);
  const std::size_t ia = row.id();
  return t.record("repeat_rows", std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    accumulate_broadcast(tp.grad(self), tp.grad(ia), true);
  });
}

Var sum(Var a) {
  Tape& t = owner(a, "sum");
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id();
  return t.record("sum", Tensor::scalar(s), {ia}, [ia](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    const double g = tp.grad(self)[0];
    for (double& v : tp.grad(ia).values()) v += g;
  });
}

Var mean_aggregate(Var h, const NeighborLists& lists) {
  Tape& t = owner(h, "mean_aggregate");
  const Tensor& hv = h.value();
  require_rank2(hv, "mean_aggregate");
  const std::size_t n = hv.rows(), d = hv.cols();
  if (lists.size() != n) {
    throw ShapeError("mean_aggregate: " + std::to_string(lists.size()) + " neighbor lists for " + std::to_string(n) + " rows");
  }
  Tensor out = Tensor::matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    if (lists[i].empty()) continue;
    const double w = 1.0 / static_cast<double>(lists[i].size());
    for (std::size_t j : lists[i]) {
      if (j >= n) throw std::out_of_range("mean_aggregate: neighbor index " + std::to_string(j) + " out of range");
      for (std::size_t c = 0; c < d; ++c) out(i, c) += w * hv(j, c);
    }
  }
  const std::size_t ih = h.id();
  return t.record("mean_aggregate", std::move(out), {ih}, [ih, lists](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ih)) return;
    const Tensor& g = tp.grad(self);
    Tensor& gh = tp.grad(ih);
    for (std::size_t i = 0; i < lists.size(); ++i) {
      if (lists[i].empty()) continue;
      const double w = 1.0 / static_cast<double>(lists[i].size());
      for (std::size_t j : lists[i]) {
        for (std::size_t c = 0; c < g.cols(); ++c) gh(j, c) += w * g(i, c);
      }
    }
  });
}

Var row_max(Var a) {
  Tape& t = owner(a, "row_max");
  const Tensor& av = a.value();
  require_rank2(av, "row_max");
  if (av.cols() == 0) throw ShapeError("row_max: empty rows");
  Tensor out = Tensor::matrix(av.rows(), 1);
  std::vector<std::size_t> arg(av.rows());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < av.cols(); ++c) {
      if (av(r, c) > av(r, best)) best = c;
    }
    arg[r] = best;
    out(r, 0) = av(r, best);
  }
  const std::size_t ia = a.id();
  return t.record("row_max", std::move(out), {ia}, [ia, arg](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t r = 0; r < arg.size(); ++r) ga(r, arg[r]) += g(r, 0);
  });
}

Var group_max(Var scores, const std::vector<std::vector<std::size_t>>& groups) {
  Tape& t = owner(scores, "group_max");
  const Tensor& sv = scores.value();
  require_rank2(sv, "group_max");
  if (sv.cols() != 1) throw ShapeError("group_max: expected n x 1 scores, got " + shape_str(sv.shape()));
  Tensor out = Tensor::matrix(1, groups.size());
  std::vector<std::size_t> arg(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw std::invalid_argument("group_max: group " + std::to_string(g) + " is empty");
    std::size_t best = groups[g][0];
    for (std::size_t r : groups[g]) {
      if (r >= sv.rows()) throw std::out_of_range("group_max: row " + std::to_string(r) + " out of range");
      if (sv(r, 0) > sv(best, 0)) best = r;
    }
    arg[g] = best;
    out(0, g) = sv(best, 0);
  }
  const std::size_t is = scores.id();
  return t.record("group_max", std::move(out), {is}, [is, arg](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(is)) return;
    const Tensor& g = tp.grad(self);
    Tensor& gs = tp.grad(is);
    for (std::size_t k = 0; k < arg.size(); ++k) gs(arg[k], 0) += g(0, k);
  });
}

Var softmax_cross_entropy(Var logits, std::size_t target) {
  Tape& t = owner(logits, "softmax_cross_entropy");
  const Tensor& lv = logits.value();
  require_rank2(lv, "softmax_cross_entropy");
  if (lv.rows() != 1 || lv.cols() == 0) {
    throw ShapeError("softmax_cross_entropy: expected a 1 x k row, got " + shape_str(lv.shape()));
  }
  if (target >= lv.cols()) throw std::out_of_range("softmax_cross_entropy: target out of range");
  double mx = lv[0];
  for (double v : lv.data()) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : lv.data()) z += std::exp(v - mx);
  const double loss = mx + std::log(z) - lv[target];
  const std::size_t il = logits.id();
  return t.record("softmax_cross_entropy", Tensor::scalar(loss), {il}, [il, target, mx, z](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(il)) return;
    const double g = tp.grad(self)[0];
    const Tensor& x = tp.value(il);
    Tensor& gl = tp.grad(il);
    for (std::size_t k = 0; k < x.size(); ++k) {
      gl[k] += g * (std::exp(x[k] - mx) / z - (k == target ? 1.0 : 0.0));
    }
  });
}

}  // namespace rgcnqa::ops
