#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "rgcnqa/graphbuild/instance.h"

namespace rgcnqa {

/// Parameters of the generated multihop corpus.
///
/// hop_depth 2: a query document pairs the subject with a bridge entity, an
/// answer document pairs that bridge with the answer, and every other
/// candidate sits in a distractor document with a bridge of its own that no
/// other document mentions. All linking documents share one template pool, so
/// no single document singles out the answer. hop_depth 1: the answer shares
/// the query document with the subject. Remaining documents are fillers whose
/// entities occur once.
struct SyntheticSpec {
  std::size_t n_instances = 100;
  std::size_t n_docs = 8;
  std::size_t n_candidates = 5;
  int hop_depth = 2;
  std::uint64_t seed = 1;

  /// Throws ValidationError when the spec cannot be satisfied.
  void validate() const;
  bool operator==(const SyntheticSpec&) const = default;
};

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec);

/// Number of distinct entity names the generator can draw from.
std::size_t synthetic_name_pool_size();

/// Deterministic in the spec; every instance passes validate().
std::vector<Instance> gen_synthetic(const SyntheticSpec& spec);

}  // namespace rgcnqa
