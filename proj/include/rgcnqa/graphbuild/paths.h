#pragma once

#include <string>
#include <vector>

#include "rgcnqa/graphbuild/mentions.h"

namespace rgcnqa {

/// A document chain from a query mention to a candidate mention. Consecutive
/// documents are linked by a shared bridge referent; `bridges[t]` links
/// docs[t] and docs[t+1].
struct ReasoningPath {
  std::vector<std::size_t> docs;
  std::vector<std::string> bridges;
  /// Indices into MentionSet::reason of the bridge mentions along the chain,
  /// ordered by (position in chain, sentence, token).
  std::vector<std::size_t> reason_mentions;

  bool operator==(const ReasoningPath&) const = default;
};

/// Referents that may bridge two documents: reasoning entities and query
/// entities present in both.
std::vector<std::string> shared_bridges(const MentionSet& mentions, std::size_t doc_a, std::size_t doc_b);

/// Breadth-first enumeration of simple document chains of length
/// 1..max_path_docs, deduplicated by (doc chain, bridge chain).
std::vector<ReasoningPath> find_reasoning_paths(const Instance& instance, const MentionSet& mentions,
                                                const GraphConfig& config);

}  // namespace rgcnqa
