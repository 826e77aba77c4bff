#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rgcnqa/graphbuild/graph.h"
#include "rgcnqa/graphbuild/instance.h"

namespace rgcnqa {

enum class MentionKind : std::uint8_t { query, candidate, reason };

/// One textual occurrence of an entity.
struct Mention {
  MentionKind kind = MentionKind::query;
  std::string referent;  // canonical (normalized) string
  std::string surface;   // tokens as written
  std::size_t doc = 0;
  std::size_t sentence = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::optional<std::size_t> candidate;  // set for candidate mentions

  bool operator==(const Mention&) const = default;
};

/// Mentions partitioned by kind, each list ordered by (doc, sentence, begin, end, referent).
struct MentionSet {
  std::vector<Mention> query;
  std::vector<Mention> candidates;
  std::vector<Mention> reason;  // reasoning-entity candidates; paths decide which survive
};

/// Normalized token sequences naming the query entities: the full subject,
/// followed by each maximal capitalized run inside the subject.
std::vector<std::vector<std::string>> query_entities(const Instance& instance);

/// Maximal runs of capitalized tokens in a sentence, as [begin, end) pairs.
/// A sentence-initial stopword ("The", "In", ...) is not part of a run.
std::vector<std::pair<std::size_t, std::size_t>> capitalized_runs(const Sentence& sentence);

MentionSet find_mentions(const Instance& instance, const GraphConfig& config);

}  // namespace rgcnqa
