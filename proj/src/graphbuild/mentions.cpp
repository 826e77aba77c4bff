#include "rgcnqa/graphbuild/mentions.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <string_view>
#include <tuple>

namespace rgcnqa {
namespace {

constexpr std::array<std::string_view, 40> kInitialStopwords{
    "the",  "a",     "an",    "in",    "on",    "at",     "of",  "for",   "it",    "this",
    "that", "these", "those", "he",    "she",   "they",   "we",  "i",     "there", "his",
    "her",  "its",   "their", "after", "before", "during", "as", "by",    "from",  "with",
    "to",   "and",   "but",   "or",    "when",  "while",  "however", "although", "since", "if"};

bool is_capitalized(const std::string& token) {
  return !token.empty() && std::isupper(static_cast<unsigned char>(token[0]));
}

bool is_initial_stopword(const std::string& token) {
  const std::string norm = normalize_token(token);
  return std::find(kInitialStopwords.begin(), kInitialStopwords.end(), norm) != kInitialStopwords.end();
}

// Start offsets of every occurrence of `needle` in `hay` (both normalized).
std::vector<std::size_t> occurrences(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  std::vector<std::size_t> out;
  if (needle.empty() || needle.size() > hay.size()) return out;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) out.push_back(i);
  }
  return out;
}

bool overlaps(const Mention& m, std::size_t doc, std::size_t sent, std::size_t b, std::size_t e) {
  return m.doc == doc && m.sentence == sent && m.begin < e && b < m.end;
}

void sort_mentions(std::vector<Mention>& ms) {
  std::sort(ms.begin(), ms.end(), [](const Mention& a, const Mention& b) {
    return std::tie(a.doc, a.sentence, a.begin, a.end, a.referent) <
           std::tie(b.doc, b.sentence, b.begin, b.end, b.referent);
  });
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
}

Mention make_mention(MentionKind kind, const Sentence& raw, std::size_t doc, std::size_t sent, std::size_t b,
                     std::size_t e) {
  Mention m;
  m.kind = kind;
  m.referent = join_tokens(normalize_tokens(std::vector<std::string>(raw.begin() + static_cast<std::ptrdiff_t>(b),
                                                                      raw.begin() + static_cast<std::ptrdiff_t>(e))));
  m.surface = join_tokens(raw, b, e);
  m.doc = doc;
  m.sentence = sent;
  m.begin = b;
  m.end = e;
  return m;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> capitalized_runs(const Sentence& sentence) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t i = 0;
  while (i < sentence.size()) {
    if (!is_capitalized(sentence[i]) || (i == 0 && is_initial_stopword(sentence[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < sentence.size() && is_capitalized(sentence[j])) ++j;
    runs.emplace_back(i, j);
    i = j;
  }
  return runs;
}

std::vector<std::vector<std::string>> query_entities(const Instance& instance) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> raw;
  {
    std::string tok;
    for (char c : instance.query_subject + " ") {
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) raw.push_back(tok);
        tok.clear();
      } else {
        tok += c;
      }
    }
  }
  auto full = normalize_tokens(raw);
  if (full.empty()) return out;
  out.push_back(full);
  for (auto [b, e] : capitalized_runs(raw)) {
    std::vector<std::string> sub(full.begin() + static_cast<std::ptrdiff_t>(b), full.begin() + static_cast<std::ptrdiff_t>(e));
    if (sub != full && std::find(out.begin(), out.end(), sub) == out.end()) out.push_back(std::move(sub));
  }
  return out;
}

MentionSet find_mentions(const Instance& instance, const GraphConfig& config) {
  MentionSet ms;
  const auto qents = query_entities(instance);  // full subject first, so it claims spans before its parts
  std::vector<std::vector<std::string>> cands;
  for (const auto& c : instance.candidates) cands.push_back(normalize_tokens(c));

  for (std::size_t d = 0; d < instance.supports.size(); ++d) {
    for (std::size_t s = 0; s < instance.supports[d].size(); ++s) {
      const Sentence& raw = instance.supports[d][s];
      const auto norm = normalize_tokens(raw);

      std::vector<Mention> sentence_query;
      for (const auto& q : qents) {
        for (std::size_t b : occurrences(norm, q)) {
          const std::size_t e = b + q.size();
          const bool taken = std::any_of(sentence_query.begin(), sentence_query.end(),
                                         [&](const Mention& m) { return overlaps(m, d, s, b, e); });
          if (!taken) sentence_query.push_back(make_mention(MentionKind::query, raw, d, s, b, e));
        }
      }
      ms.query.insert(ms.query.end(), sentence_query.begin(), sentence_query.end());

      for (std::size_t k = 0; k < cands.size(); ++k) {
        for (std::size_t b : occurrences(norm, cands[k])) {
          Mention m = make_mention(MentionKind::candidate, raw, d, s, b, b + cands[k].size());
          m.candidate = k;
          ms.candidates.push_back(std::move(m));
        }
      }

      auto blocked = [&](std::size_t b, std::size_t e) {
        auto hit = [&](const Mention& m) { return overlaps(m, d, s, b, e); };
        return std::any_of(ms.query.begin(), ms.query.end(), hit) ||
               std::any_of(ms.candidates.begin(), ms.candidates.end(), hit);
      };
      if (config.ner_mode == NerMode::heuristic) {
        for (auto [b, e] : capitalized_runs(raw)) {
          if (!blocked(b, e)) ms.reason.push_back(make_mention(MentionKind::reason, raw, d, s, b, e));
        }
      } else {
        for (const auto& span : instance.ner_spans) {
          if (span.doc != d || span.sentence != s) continue;
          if (span.end > raw.size() || span.begin >= span.end) {
            throw ValidationError("instance " + instance.id + ": ner span out of sentence bounds");
          }
          if (!blocked(span.begin, span.end)) {
            ms.reason.push_back(make_mention(MentionKind::reason, raw, d, s, span.begin, span.end));
          }
        }
      }
    }
  }
  sort_mentions(ms.query);
  sort_mentions(ms.candidates);
  sort_mentions(ms.reason);
  return ms;
}

}  // namespace rgcnqa
