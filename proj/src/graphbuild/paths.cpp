#include "rgcnqa/graphbuild/paths.h"

#include <algorithm>
#include <deque>
#include <set>

namespace rgcnqa {
namespace {

std::set<std::string> bridge_referents(const MentionSet& ms, std::size_t doc) {
  std::set<std::string> out;
  for (const auto& m : ms.reason) {
    if (m.doc == doc) out.insert(m.referent);
  }
  for (const auto& m : ms.query) {
    if (m.doc == doc) out.insert(m.referent);
  }
  return out;
}

bool has_kind_in_doc(const std::vector<Mention>& ms, std::size_t doc) {
  return std::any_of(ms.begin(), ms.end(), [doc](const Mention& m) { return m.doc == doc; });
}

std::vector<std::size_t> collect_reason_mentions(const MentionSet& ms, const ReasoningPath& path) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < path.docs.size(); ++p) {
    std::set<std::string> wanted;
    if (p > 0) wanted.insert(path.bridges[p - 1]);
    if (p + 1 < path.docs.size()) wanted.insert(path.bridges[p]);
    std::vector<std::size_t> here;
    for (std::size_t i = 0; i < ms.reason.size(); ++i) {
      const Mention& m = ms.reason[i];
      if (m.doc == path.docs[p] && wanted.contains(m.referent)) here.push_back(i);
    }
    // ms.reason is already in (doc, sentence, begin) order
    out.insert(out.end(), here.begin(), here.end());
  }
  return out;
}

}  // namespace

std::vector<std::string> shared_bridges(const MentionSet& mentions, std::size_t doc_a, std::size_t doc_b) {
  const auto a = bridge_referents(mentions, doc_a);
  const auto b = bridge_referents(mentions, doc_b);
  std::vector<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<ReasoningPath> find_reasoning_paths(const Instance& instance, const MentionSet& mentions,
                                                const GraphConfig& config) {
  if (config.max_path_docs < 2) throw ValidationError("max_path_docs must be at least 2");
  const std::size_t n_docs = instance.supports.size();

  std::vector<std::set<std::string>> refs(n_docs);
  std::vector<bool> has_candidate(n_docs);
  for (std::size_t d = 0; d < n_docs; ++d) {
    refs[d] = bridge_referents(mentions, d);
    has_candidate[d] = has_kind_in_doc(mentions.candidates, d);
  }

  std::vector<ReasoningPath> found;
  std::set<std::pair<std::vector<std::size_t>, std::vector<std::string>>> seen;
  std::deque<ReasoningPath> frontier;
  for (std::size_t d = 0; d < n_docs; ++d) {
    if (has_kind_in_doc(mentions.query, d)) frontier.push_back(ReasoningPath{{d}, {}, {}});
  }

  while (!frontier.empty()) {
    ReasoningPath path = std::move(frontier.front());
    frontier.pop_front();
    const std::size_t last = path.docs.back();
    if (has_candidate[last] && seen.emplace(path.docs, path.bridges).second) {
      ReasoningPath done = path;
      done.reason_mentions = collect_reason_mentions(mentions, done);
      found.push_back(std::move(done));
    }
    if (path.docs.size() >= config.max_path_docs) continue;
    for (std::size_t next = 0; next < n_docs; ++next) {
      if (std::find(path.docs.begin(), path.docs.end(), next) != path.docs.end()) continue;
      std::vector<std::string> shared;
      std::set_intersection(refs[last].begin(), refs[last].end(), refs[next].begin(), refs[next].end(),
                            std::back_inserter(shared));
      for (auto& r : shared) {
        ReasoningPath ext = path;
        ext.docs.push_back(next);
        ext.bridges.push_back(r);
        frontier.push_back(std::move(ext));
      }
    }
  }
  return found;
}

}  // namespace rgcnqa
