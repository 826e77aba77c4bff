#pragma once

// Brute-force reference for graph construction. Paths come from exhaustive
// enumeration of ordered document tuples; edges from testing every relation
// predicate on every ordered node pair.

#include <algorithm>
#include <cstdlib>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "rgcnqa/graphbuild/build.h"
#include "rgcnqa/graphbuild/mentions.h"

namespace rgcnqa::testing {

using EdgeTriple = std::tuple<std::uint32_t, std::uint32_t, Relation>;

struct OraclePath {
  std::vector<std::size_t> docs;
  std::vector<std::string> bridges;
  std::vector<std::size_t> reason;  // indices into MentionSet::reason
  auto operator<=>(const OraclePath&) const = default;
};

inline std::set<std::string> oracle_referents_in(const MentionSet& ms, std::size_t d) {
  std::set<std::string> out;
  for (const auto& m : ms.reason) {
    if (m.doc == d) out.insert(m.referent);
  }
  for (const auto& m : ms.query) {
    if (m.doc == d) out.insert(m.referent);
  }
  return out;
}

inline void oracle_extend(const Instance& in, const MentionSet& ms, std::size_t max_docs,
                          std::vector<std::size_t>& docs, std::set<OraclePath>& out) {
  const std::size_t n = in.supports.size();
  if (!docs.empty()) {
    const bool starts = std::any_of(ms.query.begin(), ms.query.end(), [&](const Mention& m) { return m.doc == docs[0]; });
    const bool ends = std::any_of(ms.candidates.begin(), ms.candidates.end(),
                                  [&](const Mention& m) { return m.doc == docs.back(); });
    if (starts && ends) {
      // every choice of one shared referent per consecutive pair
      std::vector<std::vector<std::string>> options;
      bool linked = true;
      for (std::size_t t = 0; t + 1 < docs.size(); ++t) {
        const auto a = oracle_referents_in(ms, docs[t]);
        const auto b = oracle_referents_in(ms, docs[t + 1]);
        std::vector<std::string> shared;
        for (const auto& r : a) {
          if (b.count(r)) shared.push_back(r);
        }
        if (shared.empty()) linked = false;
        options.push_back(shared);
      }
      if (linked) {
        std::vector<std::size_t> pick(options.size(), 0);
        while (true) {
          OraclePath p;
          p.docs = docs;
          for (std::size_t t = 0; t < options.size(); ++t) p.bridges.push_back(options[t][pick[t]]);
          for (std::size_t pos = 0; pos < docs.size(); ++pos) {
            for (std::size_t i = 0; i < ms.reason.size(); ++i) {
              const Mention& m = ms.reason[i];
              if (m.doc != docs[pos]) continue;
              const bool left = pos > 0 && p.bridges[pos - 1] == m.referent;
              const bool right = pos + 1 < docs.size() && p.bridges[pos] == m.referent;
              if (left || right) p.reason.push_back(i);
            }
          }
          out.insert(p);
          std::size_t t = 0;
          while (t < pick.size() && ++pick[t] == options[t].size()) pick[t++] = 0;
          if (t == pick.size()) break;
        }
      }
    }
  }
  if (docs.size() == max_docs) return;
  for (std::size_t d = 0; d < n; ++d) {
    if (std::find(docs.begin(), docs.end(), d) != docs.end()) continue;
    docs.push_back(d);
    oracle_extend(in, ms, max_docs, docs, out);
    docs.pop_back();
  }
}

/// Every path over every ordered tuple of distinct documents.
inline std::set<OraclePath> oracle_paths(const Instance& in, const MentionSet& ms, std::size_t max_docs) {
  std::set<OraclePath> out;
  std::vector<std::size_t> docs;
  oracle_extend(in, ms, max_docs, docs, out);
  return out;
}

inline Node oracle_node(const Mention& m, NodeKind kind) {
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

/// The node multiset a graph must contain, in no particular order.
inline std::vector<Node> oracle_nodes(const Instance& in, const GraphConfig& cfg) {
  const MentionSet ms = find_mentions(in, cfg);
  std::vector<Node> out;
  for (const auto& m : ms.query) out.push_back(oracle_node(m, NodeKind::query));
  std::set<std::size_t> mentioned;
  for (const auto& m : ms.candidates) {
    out.push_back(oracle_node(m, NodeKind::candidate));
    mentioned.insert(*m.candidate);
  }
  if (cfg.use_reasoning) {
    std::set<std::size_t> kept;
    for (const auto& p : oracle_paths(in, ms, cfg.max_path_docs)) kept.insert(p.reason.begin(), p.reason.end());
    for (std::size_t i : kept) out.push_back(oracle_node(ms.reason[i], NodeKind::reason));
  }
  if (cfg.use_sentences) {
    for (std::size_t d = 0; d < in.supports.size(); ++d) {
      for (std::size_t s = 0; s < in.supports[d].size(); ++s) {
        Node n;
        n.kind = NodeKind::sentence;
        n.doc = static_cast<std::int32_t>(d);
        n.sentence = static_cast<std::int32_t>(s);
        n.end = static_cast<std::uint32_t>(in.supports[d][s].size());
        out.push_back(n);
      }
    }
  }
  for (std::size_t k = 0; k < in.candidates.size(); ++k) {
    if (mentioned.count(k)) continue;
    Node n;
    n.kind = NodeKind::candidate;
    n.referent = join_tokens(normalize_tokens(in.candidates[k]));
    n.candidate = static_cast<std::uint32_t>(k);
    out.push_back(n);
  }
  return out;
}

/// Expected edge set for the nodes of `g`, one predicate per relation.
inline std::set<EdgeTriple> oracle_edges(const Instance& in, const GraphConfig& cfg, const RelGraph& g) {
  const MentionSet ms = find_mentions(in, cfg);
  const auto& N = g.nodes;
  const std::size_t n = N.size();

  auto node_of_reason = [&](std::size_t i) -> std::size_t {
    const Mention& m = ms.reason[i];
    for (std::size_t v = 0; v < n; ++v) {
      if (N[v].kind == NodeKind::reason && N[v].doc == static_cast<std::int32_t>(m.doc) &&
          N[v].sentence == static_cast<std::int32_t>(m.sentence) && N[v].begin == m.begin && N[v].end == m.end) {
        return v;
      }
    }
    std::abort();
  };
  std::set<std::pair<std::size_t, std::size_t>> rr;
  if (cfg.use_reasoning) {
    for (const auto& p : oracle_paths(in, ms, cfg.max_path_docs)) {
      for (std::size_t t = 0; t + 1 < p.reason.size(); ++t) {
        const std::size_t a = node_of_reason(p.reason[t]);
        const std::size_t b = node_of_reason(p.reason[t + 1]);
        rr.insert({a, b});
        rr.insert({b, a});
      }
    }
  }

  auto holds = [&](Relation r, std::size_t a, std::size_t b) -> bool {
    const Node& x = N[a];
    const Node& y = N[b];
    if (a == b || x.placeholder() || y.placeholder()) return false;
    const bool ent = x.is_entity() && y.is_entity();
    const bool sents = !x.is_entity() && !y.is_entity();
    const bool same_doc = x.doc == y.doc;
    const bool same_sent = same_doc && x.sentence == y.sentence;
    auto kinds = [&](NodeKind p, NodeKind q) { return (x.kind == p && y.kind == q) || (x.kind == q && y.kind == p); };
    switch (r) {
      case Relation::co_doc: return ent && same_doc;
      case Relation::match_across: return ent && x.referent == y.referent && !same_doc;
      case Relation::match_within: return ent && x.referent == y.referent && same_doc;
      case Relation::query_reason: return cfg.use_reasoning && same_sent && kinds(NodeKind::query, NodeKind::reason);
      case Relation::reason_reason: return rr.count({a, b}) > 0;
      case Relation::reason_cand: return cfg.use_reasoning && same_sent && kinds(NodeKind::reason, NodeKind::candidate);
      case Relation::sent_same_doc: return sents && same_doc;
      case Relation::sent_adj: return sents && same_doc && std::abs(x.sentence - y.sentence) == 1;
      case Relation::sent_prev: return sents && same_doc && x.sentence == y.sentence + 1;
      case Relation::sent_next: return sents && same_doc && x.sentence + 1 == y.sentence;
      case Relation::sent_contains: return x.is_entity() != y.is_entity() && same_sent;
      case Relation::complement: return false;
    }
    return false;
  };

  std::set<EdgeTriple> out;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      bool any = false;
      for (std::size_t r = 0; r < kRelationCount; ++r) {
        const auto rel = static_cast<Relation>(r);
        if (holds(rel, a, b)) {
          out.insert({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), rel});
          any = true;
        }
        if (holds(rel, b, a)) any = true;
      }
      if (!any && a != b && !N[a].placeholder() && !N[b].placeholder()) {
        out.insert({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), Relation::complement});
      }
    }
  }
  return out;
}

inline std::set<EdgeTriple> edge_set(const RelGraph& g) {
  std::set<EdgeTriple> out;
  for (const auto& e : g.edges) out.insert({e.src, e.dst, e.relation});
  return out;
}

/// True iff every complement pair carries no other relation in either direction
/// and every unrelated non-placeholder pair carries complement.
inline bool complement_exclusive(const RelGraph& g) {
  const std::size_t n = g.nodes.size();
  std::vector<int> other(n * n, 0), comp(n * n, 0);
  for (const auto& e : g.edges) {
    if (e.relation == Relation::complement) {
      comp[e.src * n + e.dst] = 1;
    } else {
      other[e.src * n + e.dst] = other[e.dst * n + e.src] = 1;
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const bool eligible = !g.nodes[a].placeholder() && !g.nodes[b].placeholder();
      const bool want = eligible && !other[a * n + b];
      if (static_cast<bool>(comp[a * n + b]) != want) return false;
    }
  }
  return true;
}

}  // namespace rgcnqa::testing
