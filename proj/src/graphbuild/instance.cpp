#include "rgcnqa/graphbuild/instance.h"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace rgcnqa {

std::string normalize_token(std::string_view token) {
  std::string out(token);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> normalize_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream ss{std::string(text)};
  std::string tok;
  while (ss >> tok) out.push_back(normalize_token(tok));
  return out;
}

std::vector<std::string> normalize_tokens(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(normalize_token(t));
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) { return join_tokens(tokens, 0, tokens.size()); }

std::size_t Instance::answer_index() const {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] == answer) return i;
  }
  throw ValidationError("instance " + id + ": answer \"" + answer + "\" is not among the candidates");
}

std::vector<std::string> Instance::query_tokens() const {
  std::vector<std::string> out;
  std::string part;
  for (char c : query_relation) {
    if (c == '_') {
      if (!part.empty()) out.push_back(normalize_token(part));
      part.clear();
    } else {
      part += c;
    }
  }
  if (!part.empty()) out.push_back(normalize_token(part));
  for (auto& t : normalize_tokens(query_subject)) out.push_back(std::move(t));
  return out;
}

void validate(const Instance& in) {
  const std::string who = "instance " + (in.id.empty() ? std::string("<no id>") : in.id);
  if (in.candidates.empty()) throw ValidationError(who + ": no candidates");
  in.answer_index();
  std::set<std::string> seen;
  for (const auto& c : in.candidates) {
    const std::string norm = join_tokens(normalize_tokens(c));
    if (norm.empty()) throw ValidationError(who + ": empty candidate string");
    if (!seen.insert(norm).second) throw ValidationError(who + ": duplicate candidate \"" + c + "\"");
  }
  if (normalize_tokens(in.query_subject).empty()) throw ValidationError(who + ": empty query subject");
  if (in.supports.empty()) throw ValidationError(who + ": no support documents");
  for (std::size_t d = 0; d < in.supports.size(); ++d) {
    if (in.supports[d].empty()) throw ValidationError(who + ": support document " + std::to_string(d) + " has no sentences");
    for (std::size_t s = 0; s < in.supports[d].size(); ++s) {
      if (in.supports[d][s].empty()) {
        throw ValidationError(who + ": document " + std::to_string(d) + " sentence " + std::to_string(s) + " is empty");
      }
    }
  }
  for (const auto& span : in.ner_spans) {
    const bool ok = span.doc < in.supports.size() && span.sentence < in.supports[span.doc].size() &&
                    span.begin < span.end && span.end <= in.supports[span.doc][span.sentence].size();
    if (!ok) {
      throw ValidationError(who + ": ner span [" + std::to_string(span.doc) + ", " + std::to_string(span.sentence) + ", " +
                            std::to_string(span.begin) + ", " + std::to_string(span.end) + "] is out of bounds");
    }
  }
}

Instance instance_from_json(const nlohmann::json& rec) {
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!rec.contains(key)) throw ValidationError(std::string("record lacks field \"") + key + "\"");
    return rec.at(key);
  };
  Instance in;
  try {
    in.id = need("id").get<std::string>();
    const auto query = need("query").get<std::string>();
    const auto space = query.find(' ');
    if (space == std::string::npos) {
      throw ValidationError("instance " + in.id + ": query \"" + query + "\" has no subject after the relation");
    }
    in.query_relation = query.substr(0, space);
    in.query_subject = query.substr(space + 1);
    in.candidates = need("candidates").get<std::vector<std::string>>();
    in.supports = need("supports").get<std::vector<Document>>();
    in.answer = need("answer").get<std::string>();
    if (rec.contains("ner_spans")) {
      for (const auto& s : rec.at("ner_spans")) {
        const auto v = s.get<std::vector<std::size_t>>();
        if (v.size() != 4) throw ValidationError("instance " + in.id + ": ner span needs [doc, sent, start, end]");
        in.ner_spans.push_back({v[0], v[1], v[2], v[3]});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("instance " + in.id + ": schema violation: " + e.what());
  }
  return in;
}

nlohmann::json instance_to_json(const Instance& in) {
  nlohmann::json rec;
  rec["id"] = in.id;
  rec["query"] = in.query_relation + " " + in.query_subject;
  rec["candidates"] = in.candidates;
  rec["supports"] = in.supports;
  rec["answer"] = in.answer;
  if (!in.ner_spans.empty()) {
    auto spans = nlohmann::json::array();
    for (const auto& s : in.ner_spans) spans.push_back({s.doc, s.sentence, s.begin, s.end});
    rec["ner_spans"] = spans;
  }
  return rec;
}

}  // namespace rgcnqa
