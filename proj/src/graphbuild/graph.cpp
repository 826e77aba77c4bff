#include "rgcnqa/graphbuild/graph.h"

#include <stdexcept>
#include <tuple>

namespace rgcnqa {
namespace {

constexpr std::array<std::string_view, kRelationCount> kRelationNames{
    "co_doc",    "match_across", "match_within", "query_reason", "reason_reason", "reason_cand",
    "complement", "sent_same_doc", "sent_adj",   "sent_prev",    "sent_next",     "sent_contains"};

constexpr std::array<std::string_view, 4> kKindNames{"query", "cand", "reason", "sent"};

}  // namespace

std::string_view relation_name(Relation r) { return kRelationNames[relation_index(r)]; }

Relation relation_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i) {
    if (kRelationNames[i] == name) return static_cast<Relation>(i);
  }
  throw std::invalid_argument("unknown relation \"" + std::string(name) + "\"");
}

std::vector<Relation> active_relations(const GraphConfig& config) {
  std::vector<Relation> out{Relation::co_doc, Relation::match_across, Relation::match_within};
  if (config.use_reasoning) {
    out.insert(out.end(), {Relation::query_reason, Relation::reason_reason, Relation::reason_cand});
  }
  out.push_back(Relation::complement);
  if (config.use_sentences) {
    out.insert(out.end(), {Relation::sent_same_doc, Relation::sent_adj, Relation::sent_prev, Relation::sent_next,
                           Relation::sent_contains});
  }
  return out;
}

std::string setting_name(const GraphConfig& config) {
  if (config.use_reasoning && config.use_sentences) return "reason+sents";
  if (config.use_reasoning) return "reason";
  if (config.use_sentences) return "sents";
  return "base";
}

GraphConfig config_for_setting(std::string_view name) {
  GraphConfig c;
  if (name == "base") return c;
  if (name == "reason") {
    c.use_reasoning = true;
  } else if (name == "sents") {
    c.use_sentences = true;
  } else if (name == "reason+sents") {
    c.use_reasoning = c.use_sentences = true;
  } else {
    throw std::invalid_argument("unknown graph setting \"" + std::string(name) + "\"");
  }
  return c;
}

std::string_view node_kind_name(NodeKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

NodeKind node_kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<NodeKind>(i);
  }
  throw std::invalid_argument("unknown node kind \"" + std::string(name) + "\"");
}

std::vector<std::vector<std::size_t>> RelGraph::candidate_nodes() const {
  std::vector<std::vector<std::size_t>> out(candidate_count);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    if (n.kind != NodeKind::candidate || !n.candidate) continue;
    if (*n.candidate >= candidate_count) throw std::out_of_range("candidate node points past the candidate list");
    out[*n.candidate].push_back(i);
  }
  return out;
}

bool canonical_less(const Node& a, const Node& b) {
  auto key = [](const Node& n) {
    return std::make_tuple(n.placeholder(), n.doc, n.sentence, n.begin, n.end, n.kind,
                           n.candidate.value_or(0), n.referent);
  };
  return key(a) < key(b);
}

}  // namespace rgcnqa
