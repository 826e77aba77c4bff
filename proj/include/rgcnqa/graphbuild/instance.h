#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace rgcnqa {

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Sentence = std::vector<std::string>;
using Document = std::vector<Sentence>;

/// Externally supplied named-entity span: tokens [begin, end) of one sentence.
struct SpanAnnotation {
  std::size_t doc = 0;
  std::size_t sentence = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const SpanAnnotation&) const = default;
};

/// One multihop QA item: a query <subject, relation, ?>, candidate answers,
/// tokenized support documents and the gold answer.
struct Instance {
  std::string id;
  std::string query_relation;
  std::string query_subject;
  std::vector<std::string> candidates;
  std::vector<Document> supports;
  std::string answer;
  std::vector<SpanAnnotation> ner_spans;

  /// Index of `answer` in `candidates`; throws ValidationError when absent.
  std::size_t answer_index() const;
  /// Relation tokens (split on '_') followed by the subject's tokens, normalized.
  std::vector<std::string> query_tokens() const;

  bool operator==(const Instance&) const = default;
};

/// Checks the Instance invariants (answer among candidates, non-empty
/// supports and sentences, distinct candidates, in-bounds spans).
void validate(const Instance& instance);

std::string normalize_token(std::string_view token);
std::vector<std::string> normalize_tokens(std::string_view text);
std::vector<std::string> normalize_tokens(const std::vector<std::string>& tokens);
std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end);
std::string join_tokens(const std::vector<std::string>& tokens);

/// Parses one instance record. The "query" field splits at its first space
/// into relation and subject.
Instance instance_from_json(const nlohmann::json& record);
nlohmann::json instance_to_json(const Instance& instance);

}  // namespace rgcnqa
