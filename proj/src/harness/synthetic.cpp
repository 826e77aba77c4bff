#include "rgcnqa/harness/synthetic.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>
#include <string_view>

#include "rgcnqa/numcore/random.h"

namespace rgcnqa {
namespace {

constexpr std::array<std::string_view, 20> kSyllables{"ka", "lo", "mer", "vin", "tas", "ro", "bel", "dun",
                                                     "sha", "pri", "gol", "ven", "zar", "mi",  "tor", "qua",
                                                     "nel", "fis", "dra", "hu"};

constexpr std::array<std::string_view, 32> kFillerWords{
    "old",    "river", "market", "stone",  "bridge", "small",  "people", "many",
    "road",   "hill",  "known",  "famous", "trade",  "winter", "summer", "farms",
    "houses", "green", "north",  "south",  "coast",  "valley", "forest", "quiet",
    "busy",   "town",  "ancient", "wide",  "long",   "harbor", "fields", "walls"};

// Each template links two entities; {0} and {1} mark the slots.
constexpr std::array<std::string_view, 5> kLinkTemplates{
    "{0} is located next to {1} .", "{0} lies close to {1} .", "the road from {0} reaches {1} .",
    "{0} shares a border with {1} .", "travellers from {0} often visit {1} ."};

constexpr std::array<std::string_view, 5> kRelations{"located_in", "part_of", "member_of", "connected_to",
                                                     "next_to"};

const std::vector<std::string>& name_pool() {
  static const std::vector<std::string> pool = [] {
    std::set<std::string> banned(kFillerWords.begin(), kFillerWords.end());
    for (auto t : kLinkTemplates) {
      std::string tok;
      for (char c : std::string(t) + " ") {
        if (c == ' ') {
          banned.insert(tok);
          tok.clear();
        } else {
          tok += c;
        }
      }
    }
    std::vector<std::string> out;
    auto add = [&](std::string s) {
      if (!banned.contains(s)) {
        s[0] = static_cast<char>(s[0] - 'a' + 'A');
        out.push_back(std::move(s));
      }
    };
    for (auto a : kSyllables)
      for (auto b : kSyllables) add(std::string(a) + std::string(b));
    for (auto a : kSyllables)
      for (auto b : kSyllables)
        for (auto c : kSyllables) add(std::string(a) + std::string(b) + std::string(c));
    return out;
  }();
  return pool;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::string tok;
  for (char c : std::string(s) + " ") {
    if (c == ' ') {
      if (!tok.empty()) out.push_back(tok);
      tok.clear();
    } else {
      tok += c;
    }
  }
  return out;
}

class Writer {
 public:
  explicit Writer(std::uint64_t seed) : rng_(seed) {}

  Sentence link(const std::string& x, const std::string& y) {
    Sentence out;
    for (auto& w : split_words(kLinkTemplates[rng_.below(kLinkTemplates.size())])) {
      if (w == "{0}") {
        out.push_back(x);
      } else if (w == "{1}") {
        out.push_back(y);
      } else {
        out.push_back(w);
      }
    }
    return out;
  }

  Sentence filler() {
    Sentence out;
    const std::size_t len = 4 + rng_.below(4);
    for (std::size_t i = 0; i < len; ++i) out.emplace_back(kFillerWords[rng_.below(kFillerWords.size())]);
    out.emplace_back(".");
    return out;
  }

  /// A linking sentence plus one filler sentence, in random order.
  Document doc(const std::string& x, const std::string& y) {
    Document d{link(x, y), filler()};
    if (rng_.below(2) == 1) std::swap(d[0], d[1]);
    return d;
  }

  /// Distinct names for one instance.
  std::vector<std::string> names(std::size_t count) {
    const auto& pool = name_pool();
    std::set<std::size_t> used;
    std::vector<std::string> out;
    while (out.size() < count) {
      const std::size_t i = rng_.below(pool.size());
      if (used.insert(i).second) out.push_back(pool[i]);
    }
    return out;
  }

  Rng& rng() { return rng_; }

 private:
  Rng rng_;
};

}  // namespace

void SyntheticSpec::validate() const {
  if (n_instances == 0) throw ValidationError("synthetic spec: n_instances must be positive");
  if (hop_depth != 1 && hop_depth != 2) throw ValidationError("synthetic spec: hop_depth must be 1 or 2");
  if (n_candidates < 2) throw ValidationError("synthetic spec: n_candidates must be at least 2");
  const std::size_t needed_docs = hop_depth == 2 ? n_candidates + 1 : n_candidates;
  if (n_docs < needed_docs) {
    throw ValidationError("synthetic spec: hop_depth " + std::to_string(hop_depth) + " with " +
                          std::to_string(n_candidates) + " candidates needs at least " + std::to_string(needed_docs) +
                          " documents, got " + std::to_string(n_docs));
  }
  // subject, bridge, candidates, distractor bridges, two per filler document
  const std::size_t names = 2 + 2 * n_candidates + 2 * (n_docs - needed_docs);
  if (names > synthetic_name_pool_size()) {
    throw ValidationError("synthetic spec: needs " + std::to_string(names) + " distinct entities per instance but the " +
                          "name vocabulary holds " + std::to_string(synthetic_name_pool_size()));
  }
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k == "n_instances") {
        s.n_instances = it->get<std::size_t>();
      } else if (k == "n_docs") {
        s.n_docs = it->get<std::size_t>();
      } else if (k == "n_candidates") {
        s.n_candidates = it->get<std::size_t>();
      } else if (k == "hop_depth") {
        s.hop_depth = it->get<int>();
      } else if (k == "seed") {
        s.seed = it->get<std::uint64_t>();
      } else {
        throw ValidationError("synthetic spec: unknown field \"" + k + "\"");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json synthetic_spec_to_json(const SyntheticSpec& s) {
  return {{"n_instances", s.n_instances}, {"n_docs", s.n_docs}, {"n_candidates", s.n_candidates},
          {"hop_depth", s.hop_depth},     {"seed", s.seed}};
}

std::size_t synthetic_name_pool_size() { return name_pool().size(); }

std::vector<Instance> gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t k = spec.n_candidates;
  const std::size_t linking = spec.hop_depth == 2 ? k + 1 : k;
  const std::size_t fillers = spec.n_docs - linking;
  std::vector<Instance> out;
  out.reserve(spec.n_instances);
  for (std::size_t i = 0; i < spec.n_instances; ++i) {
    Writer w(mix64(spec.seed ^ mix64(i)));
    const auto names = w.names(2 + 2 * k + 2 * fillers);
    std::size_t next = 0;
    const std::string subject = names[next++];
    const std::string bridge = names[next++];
    std::vector<std::string> candidates(names.begin() + static_cast<std::ptrdiff_t>(next),
                                        names.begin() + static_cast<std::ptrdiff_t>(next + k));
    next += k;
    const std::size_t answer = w.rng().below(k);

    std::vector<Document> docs;
    if (spec.hop_depth == 2) {
      docs.push_back(w.doc(subject, bridge));
      docs.push_back(w.doc(bridge, candidates[answer]));
    } else {
      docs.push_back(w.doc(subject, candidates[answer]));
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (c == answer) continue;
      docs.push_back(w.doc(names[next++], candidates[c]));
    }
    for (std::size_t f = 0; f < fillers; ++f) {
      docs.push_back(w.doc(names[next], names[next + 1]));
      next += 2;
    }
    w.rng().shuffle(docs.begin(), docs.end());

    Instance inst;
    char id[48];
    std::snprintf(id, sizeof id, "syn%d-%llu-%05zu", spec.hop_depth, static_cast<unsigned long long>(spec.seed), i);
    inst.id = id;
    inst.query_relation = std::string(kRelations[w.rng().below(kRelations.size())]);
    inst.query_subject = subject;
    inst.candidates = candidates;
    inst.answer = candidates[answer];
    inst.supports = std::move(docs);
    validate(inst);
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace rgcnqa
