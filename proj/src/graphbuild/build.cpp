#include "rgcnqa/graphbuild/build.h"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <set>

#include "json.hpp"

namespace rgcnqa {
namespace {

enum class Origin { query, candidate, reason, sentence, placeholder };

struct Pending {
  Node node;
  Origin origin;
  std::size_t index;  // into the matching MentionSet list / candidate list
};

Node node_from_mention(const Mention& m, NodeKind kind) {
  Node n;
  n.kind = kind;
  n.referent = m.referent;
  n.doc = static_cast<std::int32_t>(m.doc);
  n.sentence = static_cast<std::int32_t>(m.sentence);
  n.begin = static_cast<std::uint32_t>(m.begin);
  n.end = static_cast<std::uint32_t>(m.end);
  if (m.candidate) n.candidate = static_cast<std::uint32_t>(*m.candidate);
  return n;
}

class EdgeSink {
 public:
  explicit EdgeSink(std::size_t n) : n_(n), related_(n * n, 0) {}

  void both(std::size_t a, std::size_t b, Relation r) {
    one(a, b, r);
    one(b, a, r);
  }
  void one(std::size_t a, std::size_t b, Relation r) {
    if (a == b) return;
    edges_.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), r});
    related_[a * n_ + b] = related_[b * n_ + a] = 1;
  }
  bool related(std::size_t a, std::size_t b) const { return related_[a * n_ + b] != 0; }

  std::vector<Edge> finish() {
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    return std::move(edges_);
  }

 private:
  std::size_t n_;
  std::vector<std::uint8_t> related_;
  std::vector<Edge> edges_;
};

}  // namespace

RelGraph build_graph(const Instance& instance, const GraphConfig& config) {
  validate(instance);
  if (config.max_path_docs < 2) throw ValidationError("max_path_docs must be at least 2");

  const MentionSet ms = find_mentions(instance, config);
  std::vector<ReasoningPath> paths;
  std::set<std::size_t> kept_reason;
  if (config.use_reasoning) {
    paths = find_reasoning_paths(instance, ms, config);
    for (const auto& p : paths) kept_reason.insert(p.reason_mentions.begin(), p.reason_mentions.end());
  }

  std::vector<Pending> pending;
  for (std::size_t i = 0; i < ms.query.size(); ++i) {
    pending.push_back({node_from_mention(ms.query[i], NodeKind::query), Origin::query, i});
  }
  std::vector<bool> mentioned(instance.candidates.size(), false);
  for (std::size_t i = 0; i < ms.candidates.size(); ++i) {
    pending.push_back({node_from_mention(ms.candidates[i], NodeKind::candidate), Origin::candidate, i});
    mentioned[*ms.candidates[i].candidate] = true;
  }
  for (std::size_t i : kept_reason) {
    pending.push_back({node_from_mention(ms.reason[i], NodeKind::reason), Origin::reason, i});
  }
  if (config.use_sentences) {
    for (std::size_t d = 0; d < instance.supports.size(); ++d) {
      for (std::size_t s = 0; s < instance.supports[d].size(); ++s) {
        Node n;
        n.kind = NodeKind::sentence;
        n.doc = static_cast<std::int32_t>(d);
        n.sentence = static_cast<std::int32_t>(s);
        n.end = static_cast<std::uint32_t>(instance.supports[d][s].size());
        pending.push_back({n, Origin::sentence, 0});
      }
    }
  }
  for (std::size_t k = 0; k < instance.candidates.size(); ++k) {
    if (mentioned[k]) continue;
    Node n;
    n.kind = NodeKind::candidate;
    n.referent = join_tokens(normalize_tokens(instance.candidates[k]));
    n.candidate = static_cast<std::uint32_t>(k);
    pending.push_back({n, Origin::placeholder, k});
  }
  std::stable_sort(pending.begin(), pending.end(),
                   [](const Pending& a, const Pending& b) { return canonical_less(a.node, b.node); });

  RelGraph g;
  g.instance_id = instance.id;
  g.candidate_count = instance.candidates.size();
  std::vector<std::size_t> reason_node(ms.reason.size(), SIZE_MAX);
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (pending[i].origin == Origin::reason) reason_node[pending[i].index] = i;
    g.nodes.push_back(std::move(pending[i].node));
  }

  const std::size_t n = g.nodes.size();
  EdgeSink sink(n);
  for (std::size_t a = 0; a < n; ++a) {
    const Node& x = g.nodes[a];
    if (x.placeholder()) continue;
    for (std::size_t b = a + 1; b < n; ++b) {
      const Node& y = g.nodes[b];
      if (y.placeholder()) continue;
      const bool same_doc = x.doc == y.doc;
      const bool same_sentence = same_doc && x.sentence == y.sentence;
      if (x.is_entity() && y.is_entity()) {
        if (same_doc) sink.both(a, b, Relation::co_doc);
        if (x.referent == y.referent) sink.both(a, b, same_doc ? Relation::match_within : Relation::match_across);
        if (config.use_reasoning && same_sentence) {
          auto pair_is = [&](NodeKind p, NodeKind q) {
            return (x.kind == p && y.kind == q) || (x.kind == q && y.kind == p);
          };
          if (pair_is(NodeKind::query, NodeKind::reason)) sink.both(a, b, Relation::query_reason);
          if (pair_is(NodeKind::reason, NodeKind::candidate)) sink.both(a, b, Relation::reason_cand);
        }
      } else if (!x.is_entity() && !y.is_entity()) {
        if (same_doc) {
          sink.both(a, b, Relation::sent_same_doc);
          const auto [first, second] = x.sentence < y.sentence ? std::pair{a, b} : std::pair{b, a};
          if (std::abs(x.sentence - y.sentence) == 1) {
            sink.both(a, b, Relation::sent_adj);
            sink.one(second, first, Relation::sent_prev);
            sink.one(first, second, Relation::sent_next);
          }
        }
      } else if (same_sentence) {
        sink.both(a, b, Relation::sent_contains);
      }
    }
  }
  for (const auto& p : paths) {
    for (std::size_t t = 0; t + 1 < p.reason_mentions.size(); ++t) {
      sink.both(reason_node[p.reason_mentions[t]], reason_node[p.reason_mentions[t + 1]], Relation::reason_reason);
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (g.nodes[a].placeholder()) continue;
    for (std::size_t b = a + 1; b < n; ++b) {
      if (!g.nodes[b].placeholder() && !sink.related(a, b)) sink.both(a, b, Relation::complement);
    }
  }
  g.edges = sink.finish();
  return g;
}

GraphStats graph_stats(std::span<const RelGraph> graphs) {
  if (graphs.empty()) throw std::invalid_argument("graph_stats: no graphs");
  GraphStats st;
  st.graphs = graphs.size();
  double nodes = 0, edges = 0;
  for (const auto& g : graphs) {
    nodes += static_cast<double>(g.nodes.size());
    edges += static_cast<double>(g.edges.size());
    for (const auto& e : g.edges) ++st.relation_totals[relation_index(e.relation)];
    for (const auto& nd : g.nodes) ++st.node_kind_totals[static_cast<std::size_t>(nd.kind)];
  }
  st.mean_nodes = nodes / static_cast<double>(graphs.size());
  st.mean_edges = edges / static_cast<double>(graphs.size());
  return st;
}

std::string serialize_graph(const RelGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes) {
    nlohmann::json rec{{"kind", node_kind_name(n.kind)}, {"referent", n.referent}, {"doc", n.doc},
                       {"sent", n.sentence},            {"span", {n.begin, n.end}}};
    rec["candidate"] = n.candidate ? nlohmann::json(*n.candidate) : nlohmann::json(nullptr);
    nodes.push_back(std::move(rec));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges) edges.push_back({e.src, e.dst, relation_name(e.relation)});
  nlohmann::json doc{{"format", "rgcnqa-graph"}, {"version", kGraphFormatVersion}, {"instance", g.instance_id},
                     {"candidates", g.candidate_count}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
  return doc.dump() + "\n";
}

RelGraph deserialize_graph(std::string_view bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw GraphFormatError("graph payload is not valid JSON (byte " + std::to_string(e.byte) + "): " + e.what());
  }
  RelGraph g;
  try {
    if (doc.at("format") != "rgcnqa-graph") throw GraphFormatError("not a graph record");
    if (doc.at("version") != kGraphFormatVersion) {
      throw GraphFormatError("unsupported graph version " + doc.at("version").dump());
    }
    g.instance_id = doc.at("instance").get<std::string>();
    g.candidate_count = doc.at("candidates").get<std::size_t>();
    for (const auto& rec : doc.at("nodes")) {
      Node n;
      n.kind = node_kind_from_name(rec.at("kind").get<std::string>());
      n.referent = rec.at("referent").get<std::string>();
      n.doc = rec.at("doc").get<std::int32_t>();
      n.sentence = rec.at("sent").get<std::int32_t>();
      const auto span = rec.at("span").get<std::vector<std::uint32_t>>();
      if (span.size() != 2) throw GraphFormatError("node span must have two entries");
      n.begin = span[0];
      n.end = span[1];
      if (!rec.at("candidate").is_null()) n.candidate = rec.at("candidate").get<std::uint32_t>();
      if (n.candidate && *n.candidate >= g.candidate_count) throw GraphFormatError("candidate index out of range");
      g.nodes.push_back(std::move(n));
    }
    for (const auto& rec : doc.at("edges")) {
      if (!rec.is_array() || rec.size() != 3) throw GraphFormatError("edge must be [src, dst, relation]");
      Edge e{rec[0].get<std::uint32_t>(), rec[1].get<std::uint32_t>(), relation_from_name(rec[2].get<std::string>())};
      if (e.src >= g.nodes.size() || e.dst >= g.nodes.size()) throw GraphFormatError("edge endpoint out of range");
      if (e.src == e.dst) throw GraphFormatError("self-loop edge");
      g.edges.push_back(e);
    }
  } catch (const GraphFormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw GraphFormatError(std::string("malformed graph record: ") + e.what());
  }
  if (!std::is_sorted(g.edges.begin(), g.edges.end()) ||
      std::adjacent_find(g.edges.begin(), g.edges.end()) != g.edges.end()) {
    throw GraphFormatError("edge table is not in canonical order or holds duplicates");
  }
  return g;
}

}  // namespace rgcnqa
