#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rgcnqa/graphbuild/graph.h"
#include "rgcnqa/graphbuild/instance.h"
#include "rgcnqa/graphbuild/paths.h"

namespace rgcnqa {

/// Builds the relational graph of one instance. Pure function of its inputs.
///
/// Nodes are the query and candidate mentions, the reasoning mentions that lie
/// on at least one reasoning path (when `use_reasoning`), one node per sentence
/// (when `use_sentences`), and a detached placeholder for each candidate that
/// is never mentioned. Symmetric relations are stored as mirrored directed
/// pairs; sent_prev and sent_next are one-directional. Placeholders carry no
/// edges at all, complement included.
RelGraph build_graph(const Instance& instance, const GraphConfig& config);

struct GraphStats {
  std::size_t graphs = 0;
  double mean_nodes = 0.0;
  double mean_edges = 0.0;
  std::array<std::size_t, kRelationCount> relation_totals{};
  std::array<std::size_t, 4> node_kind_totals{};
};

GraphStats graph_stats(std::span<const RelGraph> graphs);

class GraphFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kGraphFormatVersion = 1;

/// Versioned JSON record with a node table and an edge table. Identical
/// graphs always serialize to identical bytes.
std::string serialize_graph(const RelGraph& graph);
RelGraph deserialize_graph(std::string_view bytes);

}  // namespace rgcnqa
