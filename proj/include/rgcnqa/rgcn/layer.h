#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rgcnqa/graphbuild/graph.h"
#include "rgcnqa/numcore/ops.h"
#include "rgcnqa/numcore/param.h"
#include "rgcnqa/numcore/tape.h"

namespace rgcnqa {

/// Incoming neighbor lists per relation slot and destination node.
/// Slot r of the index pairs with relation weight r of every layer.
class NeighborIndex {
 public:
  NeighborIndex(std::size_t node_count, std::size_t relation_count);

  /// Slots follow the order of `active`; an edge under any other relation throws.
  static NeighborIndex from_graph(const RelGraph& graph, std::span<const Relation> active);

  /// Records src as an incoming neighbor of dst under slot `relation`.
  /// Parallel edges are kept and count toward the degree.
  void add_edge(std::size_t src, std::size_t dst, std::size_t relation);

  std::size_t node_count() const { return node_count_; }
  std::size_t relation_count() const { return lists_.size(); }
  const ops::NeighborLists& incoming(std::size_t relation) const { return lists_.at(relation); }
  bool relation_empty(std::size_t relation) const;

 private:
  std::size_t node_count_;
  std::vector<ops::NeighborLists> lists_;
};

/// One gated relational graph convolution layer over d-wide node states.
///
///   m = sum_r mean_{j in N^r(i)} h_j W_r
///   u = h W_u + m
///   (query-aware only) s_ij = [u_i; p_j] W_q + b_q, alpha = softmax_j(sigmoid(s)),
///       q = alpha P, beta = sigmoid([q; u] W_beta + b_beta),
///       u <- beta * tanh(q) + (1 - beta) * u
///   a = sigmoid([u; h] W_a + b_a), h' = a * tanh(u) + (1 - a) * h
class RgcnLayer {
 public:
  RgcnLayer(ParamSet& params, const std::string& prefix, std::size_t d, std::span<const std::string> relation_names,
            bool query_aware, Rng& rng);

  Var message(Tape& tape, Var h, const NeighborIndex& index) const;
  Var update(Tape& tape, Var h, Var m) const;
  /// n x m attention of nodes over query tokens; rows sum to 1.
  Var query_attention(Tape& tape, Var u, Var p) const;
  /// Throws when the layer has no query gate or P has no rows.
  Var query_gate(Tape& tape, Var u, Var p) const;
  Var gate(Tape& tape, Var u, Var h) const;
  /// message -> update -> query_gate (when query-aware) -> gate.
  Var forward(Tape& tape, Var h, const NeighborIndex& index, std::optional<Var> p) const;

  std::size_t width() const { return d_; }
  std::size_t relation_count() const { return relation_.size(); }
  bool query_aware() const { return query_w_ != nullptr; }

  Param& relation_weight(std::size_t r) const { return *relation_.at(r); }
  Param& self_weight() const { return *self_; }
  Param& gate_weight() const { return *gate_w_; }
  Param& gate_bias() const { return *gate_b_; }
  Param& query_weight() const;
  Param& query_bias() const;
  Param& beta_weight() const;
  Param& beta_bias() const;

 private:
  std::size_t d_;
  std::vector<Param*> relation_;
  Param* self_;
  Param* gate_w_;
  Param* gate_b_;
  Param* query_w_ = nullptr;  // 2d x 1
  Param* query_b_ = nullptr;  // 1 x 1
  Param* beta_w_ = nullptr;   // 2d x d
  Param* beta_b_ = nullptr;   // 1 x d
};

/// Layers named `<prefix><l>/...` for l = 0..count-1.
std::vector<RgcnLayer> make_rgcn_layers(ParamSet& params, const std::string& prefix, std::size_t count, std::size_t d,
                                        std::span<const std::string> relation_names, bool query_aware, Rng& rng);

/// Applies `layers` in order. P is required iff `query_aware`.
Var rgcn_forward(Tape& tape, Var h0, std::optional<Var> p, const NeighborIndex& index,
                 std::span<const RgcnLayer> layers, bool query_aware);

}  // namespace rgcnqa
