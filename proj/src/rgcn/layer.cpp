#include "rgcnqa/rgcn/layer.h"

#include <algorithm>
#include <stdexcept>

namespace rgcnqa {
namespace {

Var ones(Tape& tape, std::size_t rows, std::size_t cols) {
  Tensor t = Tensor::matrix(rows, cols);
  t.fill(1.0);
  return tape.constant(std::move(t));
}

void require_width(Var v, std::size_t d, const char* what) {
  if (v.cols() != d) {
    throw ShapeError(std::string(what) + ": expected width " + std::to_string(d) + ", got " + shape_str(v.shape()));
  }
}

// h + g * (target - h), the convex blend g * target + (1 - g) * h
Var blend(Var gate, Var target, Var h) { return ops::add(h, ops::mul(gate, ops::sub(target, h))); }

}  // namespace

NeighborIndex::NeighborIndex(std::size_t node_count, std::size_t relation_count)
    : node_count_(node_count), lists_(relation_count, ops::NeighborLists(node_count)) {}

NeighborIndex NeighborIndex::from_graph(const RelGraph& graph, std::span<const Relation> active) {
  NeighborIndex index(graph.nodes.size(), active.size());
  for (const Edge& e : graph.edges) {
    const auto it = std::find(active.begin(), active.end(), e.relation);
    if (it == active.end()) {
      throw std::invalid_argument("graph " + graph.instance_id + " holds a " + std::string(relation_name(e.relation)) +
                                  " edge outside the active relation set");
    }
    index.add_edge(e.src, e.dst, static_cast<std::size_t>(it - active.begin()));
  }
  return index;
}

void NeighborIndex::add_edge(std::size_t src, std::size_t dst, std::size_t relation) {
  if (relation >= lists_.size()) throw std::out_of_range("relation slot " + std::to_string(relation) + " out of range");
  if (src >= node_count_ || dst >= node_count_) {
    throw std::out_of_range("edge " + std::to_string(src) + " -> " + std::to_string(dst) + " outside " +
                            std::to_string(node_count_) + " nodes");
  }
  lists_[relation][dst].push_back(src);
}

bool NeighborIndex::relation_empty(std::size_t relation) const {
  const auto& l = lists_.at(relation);
  return std::all_of(l.begin(), l.end(), [](const auto& v) { return v.empty(); });
}

RgcnLayer::RgcnLayer(ParamSet& params, const std::string& prefix, std::size_t d,
                     std::span<const std::string> relation_names, bool query_aware, Rng& rng)
    : d_(d) {
  if (d == 0) throw std::invalid_argument("rgcn layer width must be positive");
  for (const auto& r : relation_names) relation_.push_back(&params.glorot(prefix + "/W_" + r, d, d, rng));
  self_ = &params.glorot(prefix + "/W_u", d, d, rng);
  gate_w_ = &params.glorot(prefix + "/W_a", 2 * d, d, rng);
  gate_b_ = &params.zeros(prefix + "/b_a", 1, d);
  if (query_aware) {
    query_w_ = &params.glorot(prefix + "/W_q", 2 * d, 1, rng);
    query_b_ = &params.zeros(prefix + "/b_q", 1, 1);
    beta_w_ = &params.glorot(prefix + "/W_beta", 2 * d, d, rng);
    beta_b_ = &params.zeros(prefix + "/b_beta", 1, d);
  }
}

Param& RgcnLayer::query_weight() const {
  if (!query_w_) throw std::logic_error("layer has no query gate");
  return *query_w_;
}
Param& RgcnLayer::query_bias() const {
  if (!query_b_) throw std::logic_error("layer has no query gate");
  return *query_b_;
}
Param& RgcnLayer::beta_weight() const {
  if (!beta_w_) throw std::logic_error("layer has no query gate");
  return *beta_w_;
}
Param& RgcnLayer::beta_bias() const {
  if (!beta_b_) throw std::logic_error("layer has no query gate");
  return *beta_b_;
}

Var RgcnLayer::message(Tape& tape, Var h, const NeighborIndex& index) const {
  require_width(h, d_, "rgcn message");
  if (index.node_count() != h.rows()) {
    throw ShapeError("rgcn message: index covers " + std::to_string(index.node_count()) + " nodes, states have " +
                     std::to_string(h.rows()));
  }
  if (index.relation_count() != relation_.size()) {
    throw ShapeError("rgcn message: index has " + std::to_string(index.relation_count()) + " relations, layer has " +
                     std::to_string(relation_.size()));
  }
  std::optional<Var> m;
  for (std::size_t r = 0; r < relation_.size(); ++r) {
    if (index.relation_empty(r)) continue;
    Var term = ops::matmul(ops::mean_aggregate(h, index.incoming(r)), tape.param(*relation_[r]));
    m = m ? ops::add(*m, term) : term;
  }
  return m ? *m : tape.constant(Tensor::matrix(h.rows(), d_));
}

Var RgcnLayer::update(Tape& tape, Var h, Var m) const {
  require_width(h, d_, "rgcn update");
  return ops::add(ops::matmul(h, tape.param(*self_)), m);
}

Var RgcnLayer::query_attention(Tape& tape, Var u, Var p) const {
  if (!query_w_) throw std::logic_error("rgcn query_gate: layer was built without a query gate");
  if (p.rows() == 0) throw ShapeError("rgcn query_gate: empty query");
  require_width(u, d_, "rgcn query_gate");
  require_width(p, d_, "rgcn query_gate");
  const std::size_t n = u.rows(), m = p.rows();
  const auto halves = ops::split(tape.param(*query_w_), 0, std::vector<std::size_t>{d_, d_});
  // s_ij = u_i . w_u + p_j . w_p + b_q
  Var su = ops::matmul(ops::matmul(u, halves[0]), ones(tape, 1, m));
  Var sp = ops::repeat_rows(ops::add(ops::transpose(ops::matmul(p, halves[1])),
                                     ops::matmul(tape.param(*query_b_), ones(tape, 1, m))),
                            n);
  return ops::softmax_rows(ops::sigmoid(ops::add(su, sp)));
}

Var RgcnLayer::query_gate(Tape& tape, Var u, Var p) const {
  Var q = ops::matmul(query_attention(tape, u, p), p);
  const Var qu[] = {q, u};
  Var beta = ops::sigmoid(ops::add(ops::matmul(ops::concat(qu, 1), tape.param(*beta_w_)), tape.param(*beta_b_)));
  return blend(beta, ops::tanh(q), u);
}

Var RgcnLayer::gate(Tape& tape, Var u, Var h) const {
  require_width(u, d_, "rgcn gate");
  require_width(h, d_, "rgcn gate");
  const Var uh[] = {u, h};
  Var a = ops::sigmoid(ops::add(ops::matmul(ops::concat(uh, 1), tape.param(*gate_w_)), tape.param(*gate_b_)));
  return blend(a, ops::tanh(u), h);
}

Var RgcnLayer::forward(Tape& tape, Var h, const NeighborIndex& index, std::optional<Var> p) const {
  Var u = update(tape, h, message(tape, h, index));
  if (query_aware()) {
    if (!p) throw std::invalid_argument("query-aware rgcn layer needs query states");
    u = query_gate(tape, u, *p);
  }
  return gate(tape, u, h);
}

std::vector<RgcnLayer> make_rgcn_layers(ParamSet& params, const std::string& prefix, std::size_t count, std::size_t d,
                                        std::span<const std::string> relation_names, bool query_aware, Rng& rng) {
  std::vector<RgcnLayer> out;
  for (std::size_t l = 0; l < count; ++l) {
    out.emplace_back(params, prefix + std::to_string(l), d, relation_names, query_aware, rng);
  }
  return out;
}

Var rgcn_forward(Tape& tape, Var h0, std::optional<Var> p, const NeighborIndex& index,
                 std::span<const RgcnLayer> layers, bool query_aware) {
  if (layers.empty()) throw std::invalid_argument("rgcn_forward: at least one layer required");
  if (query_aware && !p) throw std::invalid_argument("rgcn_forward: query-aware stack needs query states");
  Var h = h0;
  for (const auto& layer : layers) {
    if (layer.query_aware() != query_aware) {
      throw std::invalid_argument("rgcn_forward: layer query gating does not match the stack setting");
    }
    h = layer.forward(tape, h, index, query_aware ? p : std::nullopt);
  }
  return h;
}

}  // namespace rgcnqa
