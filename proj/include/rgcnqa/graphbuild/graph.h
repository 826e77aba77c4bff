#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rgcnqa {

/// The twelve edge types of a QA relational graph.
enum class Relation : std::uint8_t {
  co_doc,          // (i) entity mentions in the same document
  match_across,    // (ii) same referent, different documents
  match_within,    // (iii) same referent, same document
  query_reason,    // (iv) query and reasoning mention in the same sentence
  reason_reason,   // (v) adjacent reasoning mentions on one path
  reason_cand,     // (vi) reasoning and candidate mention in the same sentence
  complement,      // (vii) pairs in no other relation
  sent_same_doc,   // (viii) sentences of one document
  sent_adj,        // (ix) consecutive sentences, both directions
  sent_prev,       // (x) sentence -> its predecessor
  sent_next,       // (xi) sentence -> its successor
  sent_contains,   // (xii) sentence <-> entity mentions inside it
};

inline constexpr std::size_t kRelationCount = 12;

std::string_view relation_name(Relation r);
Relation relation_from_name(std::string_view name);
constexpr std::size_t relation_index(Relation r) { return static_cast<std::size_t>(r); }

enum class NerMode : std::uint8_t { heuristic, provided };

struct GraphConfig {
  bool use_reasoning = false;
  bool use_sentences = false;
  std::size_t max_path_docs = 3;
  NerMode ner_mode = NerMode::heuristic;

  bool operator==(const GraphConfig&) const = default;
};

/// Relations a graph built under `config` can contain, in enum order.
std::vector<Relation> active_relations(const GraphConfig& config);

/// Short setting label: "base", "reason", "sents" or "reason+sents".
std::string setting_name(const GraphConfig& config);
GraphConfig config_for_setting(std::string_view name);

enum class NodeKind : std::uint8_t { query, candidate, reason, sentence };

std::string_view node_kind_name(NodeKind k);
NodeKind node_kind_from_name(std::string_view name);

inline constexpr std::int32_t kNoDocument = -1;

/// Graph vertex. Entity nodes cover tokens [begin, end) of one sentence;
/// sentence nodes cover the whole sentence. Placeholder candidate nodes (for
/// candidates never mentioned in the supports) have doc == kNoDocument.
struct Node {
  NodeKind kind = NodeKind::query;
  std::string referent;
  std::int32_t doc = kNoDocument;
  std::int32_t sentence = kNoDocument;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  std::optional<std::uint32_t> candidate;

  bool placeholder() const { return doc == kNoDocument; }
  bool is_entity() const { return kind != NodeKind::sentence; }
  bool operator==(const Node&) const = default;
};

struct Edge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  Relation relation = Relation::co_doc;

  auto operator<=>(const Edge&) const = default;
};

struct RelGraph {
  std::string instance_id;
  std::size_t candidate_count = 0;
  std::vector<Node> nodes;
  std::vector<Edge> edges;  // sorted, no duplicates, no self-loops

  /// For each candidate index, the nodes that score it.
  std::vector<std::vector<std::size_t>> candidate_nodes() const;
  bool operator==(const RelGraph&) const = default;
};

/// Canonical node order: (document, sentence, span, kind, candidate, referent),
/// with placeholders after every textual node.
bool canonical_less(const Node& a, const Node& b);

}  // namespace rgcnqa
