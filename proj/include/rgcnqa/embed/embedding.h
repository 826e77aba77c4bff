#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "rgcnqa/graphbuild/graph.h"
#include "rgcnqa/graphbuild/instance.h"
#include "rgcnqa/numcore/param.h"
#include "rgcnqa/numcore/tape.h"

namespace rgcnqa {

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SourceKind : std::uint8_t { static_table, contextual_file, hash_fallback };

std::string_view source_kind_name(SourceKind k);
SourceKind source_kind_from_name(std::string_view name);

/// Key of a contextual vector. Entity and sentence spans use their document
/// coordinates. Query token j uses doc = sent = -1 and span [j, j+1); the
/// placeholder of candidate k uses doc = -1, sent = k and span [0, #tokens).
struct SpanKey {
  std::string instance;
  std::int64_t doc = 0;
  std::int64_t sent = 0;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  auto operator<=>(const SpanKey&) const = default;
};

inline constexpr const char* kStaticTableHeader = "#rgcnqa-static-table v1";
inline constexpr const char* kContextualFormat = "rgcnqa-contextual";
inline constexpr int kContextualVersion = 1;

/// Immutable source of fixed-width vectors.
class EmbeddingSource {
 public:
  /// Text lines "token v1 ... vD". A leading header line is optional; when
  /// present its version must match. Tokens are normalized on load and the
  /// first occurrence of a token wins.
  static EmbeddingSource load_static_table(const std::filesystem::path& path, std::string name);
  static EmbeddingSource parse_static_table(std::istream& in, std::string name);
  /// JSON header {"format", "version", "dim"} followed by one record per line.
  static EmbeddingSource load_contextual(const std::filesystem::path& path, std::string name, bool strict);
  static EmbeddingSource parse_contextual(std::istream& in, std::string name, bool strict);
  static EmbeddingSource hash_fallback(std::string name, std::size_t dim);

  const std::string& name() const { return name_; }
  SourceKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  bool strict() const { return strict_; }
  std::size_t entry_count() const;

  /// Static table: stored vector or zeros for out-of-vocabulary tokens.
  /// Hash fallback: the vector of the normalized token. Contextual: throws.
  std::vector<double> token(const std::string& token) const;
  /// Contextual lookup; missing keys throw in strict mode and give zeros otherwise.
  std::vector<double> span(const SpanKey& key) const;

  bool operator==(const EmbeddingSource&) const = default;

 private:
  EmbeddingSource(std::string name, SourceKind kind, std::size_t dim) : name_(std::move(name)), kind_(kind), dim_(dim) {}

  std::string name_;
  SourceKind kind_;
  std::size_t dim_;
  bool strict_ = false;
  std::map<std::string, std::vector<double>> table_;
  std::map<SpanKey, std::vector<double>> spans_;
};

/// Deterministic unit vector of width `dim` for a string, identical on every
/// platform: FNV-1a of the bytes seeds a splitmix64 stream.
std::vector<double> hash_vector(const std::string& key, std::size_t dim);

/// Initial vector of one graph node under one source. Static tables average
/// the token vectors of the node's span (the whole sentence for sentence
/// nodes, the candidate string for placeholders). Hashing uses the referent
/// of entity nodes and averages token hashes for sentence nodes.
std::vector<double> embed_node(const Instance& instance, const Node& node, const EmbeddingSource& source);

/// Ordered list of sources whose vectors are concatenated.
class EmbedSpec {
 public:
  EmbedSpec() = default;
  explicit EmbedSpec(std::vector<std::shared_ptr<const EmbeddingSource>> sources);

  std::size_t total_dim() const { return total_; }
  std::size_t size() const { return sources_.size(); }
  const EmbeddingSource& source(std::size_t i) const { return *sources_.at(i); }
  std::vector<std::string> names() const;
  /// Start column of each source within a combined feature.
  const std::vector<std::size_t>& offsets() const { return offsets_; }

  /// Concatenation in spec order; throws on a count or width mismatch.
  std::vector<double> combine(const std::vector<std::vector<double>>& parts) const;
  /// Inverse of combine.
  std::vector<std::vector<double>> split(const std::vector<double>& feature) const;

 private:
  std::vector<std::shared_ptr<const EmbeddingSource>> sources_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

/// n x total_dim node features, one row per graph node.
Tensor featurize_nodes(const Instance& instance, const RelGraph& graph, const EmbedSpec& spec);
/// m x total_dim features of the query tokens.
Tensor featurize_query(const Instance& instance, const EmbedSpec& spec);

/// Learned affine map from combined features to the model width.
class Projection {
 public:
  Projection(ParamSet& params, const std::string& prefix, std::size_t in_dim, std::size_t out_dim, Rng& rng);
  Var apply(Tape& tape, Var features) const;
  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }
  Param& weight() const { return *w_; }
  Param& bias() const { return *b_; }

 private:
  std::size_t in_;
  std::size_t out_;
  Param* w_;
  Param* b_;
};

}  // namespace rgcnqa
