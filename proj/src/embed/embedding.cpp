#include "rgcnqa/embed/embedding.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rgcnqa/numcore/ops.h"
#include "rgcnqa/numcore/random.h"

namespace rgcnqa {
namespace {

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EmbeddingError("cannot open embedding file " + path.string());
  return in;
}

void mean_into(std::vector<double>& acc, const std::vector<double>& v) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
}

std::vector<double> mean_of_tokens(const std::vector<std::string>& tokens, const EmbeddingSource& src) {
  std::vector<double> acc(src.dim(), 0.0);
  if (tokens.empty()) return acc;
  for (const auto& t : tokens) mean_into(acc, src.token(t));
  for (double& v : acc) v /= static_cast<double>(tokens.size());
  return acc;
}

std::vector<std::string> span_tokens(const Instance& in, const Node& n) {
  const Sentence& s = in.supports.at(static_cast<std::size_t>(n.doc)).at(static_cast<std::size_t>(n.sentence));
  if (n.end > s.size() || n.begin >= n.end) throw EmbeddingError("node span outside its sentence in " + in.id);
  return std::vector<std::string>(s.begin() + n.begin, s.begin() + n.end);
}

}  // namespace

std::string_view source_kind_name(SourceKind k) {
  switch (k) {
    case SourceKind::static_table: return "static_table";
    case SourceKind::contextual_file: return "contextual_file";
    case SourceKind::hash_fallback: return "hash_fallback";
  }
  return "?";
}

SourceKind source_kind_from_name(std::string_view name) {
  for (auto k : {SourceKind::static_table, SourceKind::contextual_file, SourceKind::hash_fallback}) {
    if (source_kind_name(k) == name) return k;
  }
  throw EmbeddingError("unknown embedding source kind \"" + std::string(name) + "\"");
}

std::vector<double> hash_vector(const std::string& key, std::size_t dim) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t state = mix64(h ^ mix64(dim));
  std::vector<double> v(dim);
  double norm = 0.0;
  for (double& x : v) {
    state += 0x9E3779B97F4A7C15ULL;
    x = static_cast<double>(mix64(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    norm += x * x;
  }
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    v.assign(dim, 0.0);
    if (dim) v[0] = 1.0;
    return v;
  }
  for (double& x : v) x /= norm;
  return v;
}

EmbeddingSource EmbeddingSource::parse_static_table(std::istream& in, std::string name) {
  EmbeddingSource src(std::move(name), SourceKind::static_table, 0);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("#rgcnqa-static-table", 0) == 0) {
      if (line != kStaticTableHeader) throw EmbeddingError("static table: unsupported header \"" + line + "\"");
      continue;
    }
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> vec;
    std::string field;
    while (ss >> field) {
      try {
        std::size_t used = 0;
        vec.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw EmbeddingError("static table line " + std::to_string(lineno) + ": \"" + field + "\" is not a number");
      }
      if (!std::isfinite(vec.back())) {
        throw EmbeddingError("static table line " + std::to_string(lineno) + ": non-finite value");
      }
    }
    if (vec.empty()) throw EmbeddingError("static table line " + std::to_string(lineno) + ": no vector values");
    if (src.dim_ == 0) src.dim_ = vec.size();
    if (vec.size() != src.dim_) {
      throw EmbeddingError("static table line " + std::to_string(lineno) + ": dimension " + std::to_string(vec.size()) +
                           " differs from " + std::to_string(src.dim_));
    }
    src.table_.emplace(normalize_token(token), std::move(vec));
  }
  if (src.table_.empty()) throw EmbeddingError("static table \"" + src.name_ + "\" holds no vectors");
  return src;
}

EmbeddingSource EmbeddingSource::load_static_table(const std::filesystem::path& path, std::string name) {
  auto in = open_or_throw(path);
  return parse_static_table(in, std::move(name));
}

EmbeddingSource EmbeddingSource::parse_contextual(std::istream& in, std::string name, bool strict) {
  std::string line;
  if (!std::getline(in, line)) throw EmbeddingError("contextual file \"" + name + "\" is empty");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw EmbeddingError("contextual file line 1: header is not JSON: " + std::string(e.what()));
  }
  if (!header.is_object() || header.value("format", "") != kContextualFormat) {
    throw EmbeddingError("contextual file line 1: missing \"" + std::string(kContextualFormat) + "\" header");
  }
  if (header.value("version", -1) != kContextualVersion) {
    throw EmbeddingError("contextual file line 1: unsupported version " + header.value("version", nlohmann::json()).dump());
  }
  const auto dim = header.value("dim", std::size_t{0});
  if (dim == 0) throw EmbeddingError("contextual file line 1: dim must be positive");
  EmbeddingSource src(std::move(name), SourceKind::contextual_file, dim);
  src.strict_ = strict;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::string where = "contextual file line " + std::to_string(lineno) + ": ";
    try {
      const auto rec = nlohmann::json::parse(line);
      SpanKey key;
      key.instance = rec.at("instance").get<std::string>();
      key.doc = rec.at("doc").get<std::int64_t>();
      key.sent = rec.at("sent").get<std::int64_t>();
      const auto span = rec.at("span").get<std::vector<std::uint32_t>>();
      if (span.size() != 2 || span[0] >= span[1]) throw EmbeddingError(where + "span must be [start, end) with start < end");
      key.begin = span[0];
      key.end = span[1];
      auto vec = rec.at("vec").get<std::vector<double>>();
      if (vec.size() != dim) {
        throw EmbeddingError(where + "vector has " + std::to_string(vec.size()) + " values, header says " +
                             std::to_string(dim));
      }
      if (!src.spans_.emplace(std::move(key), std::move(vec)).second) throw EmbeddingError(where + "duplicate key");
    } catch (const nlohmann::json::exception& e) {
      throw EmbeddingError(where + e.what());
    }
  }
  return src;
}

EmbeddingSource EmbeddingSource::load_contextual(const std::filesystem::path& path, std::string name, bool strict) {
  auto in = open_or_throw(path);
  return parse_contextual(in, std::move(name), strict);
}

EmbeddingSource EmbeddingSource::hash_fallback(std::string name, std::size_t dim) {
  if (dim == 0) throw EmbeddingError("hash_fallback dim must be positive");
  return EmbeddingSource(std::move(name), SourceKind::hash_fallback, dim);
}

std::size_t EmbeddingSource::entry_count() const { return table_.size() + spans_.size(); }

std::vector<double> EmbeddingSource::token(const std::string& token) const {
  switch (kind_) {
    case SourceKind::static_table: {
      const auto it = table_.find(normalize_token(token));
      return it == table_.end() ? std::vector<double>(dim_, 0.0) : it->second;
    }
    case SourceKind::hash_fallback: return hash_vector(normalize_token(token), dim_);
    case SourceKind::contextual_file: break;
  }
  throw EmbeddingError("source \"" + name_ + "\" is contextual and has no token-level vectors");
}

std::vector<double> EmbeddingSource::span(const SpanKey& key) const {
  if (kind_ != SourceKind::contextual_file) throw EmbeddingError("source \"" + name_ + "\" has no span vectors");
  const auto it = spans_.find(key);
  if (it != spans_.end()) return it->second;
  if (strict_) {
    throw EmbeddingError("source \"" + name_ + "\": no vector for instance " + key.instance + " doc " +
                         std::to_string(key.doc) + " sent " + std::to_string(key.sent) + " span [" +
                         std::to_string(key.begin) + ", " + std::to_string(key.end) + ")");
  }
  return std::vector<double>(dim_, 0.0);
}

std::vector<double> embed_node(const Instance& in, const Node& n, const EmbeddingSource& src) {
  if (n.placeholder()) {
    if (!n.candidate || *n.candidate >= in.candidates.size()) throw EmbeddingError("placeholder without a candidate");
    const auto tokens = normalize_tokens(in.candidates[*n.candidate]);
    switch (src.kind()) {
      case SourceKind::static_table: return mean_of_tokens(tokens, src);
      case SourceKind::hash_fallback: return hash_vector(n.referent, src.dim());
      case SourceKind::contextual_file:
        return src.span({in.id, -1, static_cast<std::int64_t>(*n.candidate), 0, static_cast<std::uint32_t>(tokens.size())});
    }
  }
  const auto tokens = span_tokens(in, n);
  switch (src.kind()) {
    case SourceKind::static_table: return mean_of_tokens(tokens, src);
    case SourceKind::hash_fallback:
      return n.is_entity() ? hash_vector(n.referent, src.dim()) : mean_of_tokens(tokens, src);
    case SourceKind::contextual_file: return src.span({in.id, n.doc, n.sentence, n.begin, n.end});
  }
  return {};
}

EmbedSpec::EmbedSpec(std::vector<std::shared_ptr<const EmbeddingSource>> sources) : sources_(std::move(sources)) {
  for (const auto& s : sources_) {
    if (!s) throw EmbeddingError("embed spec holds a null source");
    offsets_.push_back(total_);
    total_ += s->dim();
  }
}

std::vector<std::string> EmbedSpec::names() const {
  std::vector<std::string> out;
  for (const auto& s : sources_) out.push_back(s->name());
  return out;
}

std::vector<double> EmbedSpec::combine(const std::vector<std::vector<double>>& parts) const {
  if (parts.size() != sources_.size()) {
    throw EmbeddingError("combine: " + std::to_string(parts.size()) + " vectors for " +
                         std::to_string(sources_.size()) + " sources");
  }
  std::vector<double> out;
  out.reserve(total_);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].size() != sources_[i]->dim()) {
      throw EmbeddingError("combine: source \"" + sources_[i]->name() + "\" expects dim " +
                           std::to_string(sources_[i]->dim()) + ", got " + std::to_string(parts[i].size()));
    }
    out.insert(out.end(), parts[i].begin(), parts[i].end());
  }
  return out;
}

std::vector<std::vector<double>> EmbedSpec::split(const std::vector<double>& feature) const {
  if (feature.size() != total_) {
    throw EmbeddingError("split: feature has " + std::to_string(feature.size()) + " values, spec needs " +
                         std::to_string(total_));
  }
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < sources_.size(); ++i) {
    const auto b = feature.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
    out.emplace_back(b, b + static_cast<std::ptrdiff_t>(sources_[i]->dim()));
  }
  return out;
}

Tensor featurize_nodes(const Instance& in, const RelGraph& g, const EmbedSpec& spec) {
  if (spec.size() == 0) throw EmbeddingError("embed spec is empty");
  Tensor out = Tensor::matrix(g.nodes.size(), spec.total_dim());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    std::vector<std::vector<double>> parts;
    for (std::size_t s = 0; s < spec.size(); ++s) parts.push_back(embed_node(in, g.nodes[i], spec.source(s)));
    const auto row = spec.combine(parts);
    std::copy(row.begin(), row.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * spec.total_dim()));
  }
  return out;
}

Tensor featurize_query(const Instance& in, const EmbedSpec& spec) {
  if (spec.size() == 0) throw EmbeddingError("embed spec is empty");
  const auto tokens = in.query_tokens();
  if (tokens.empty()) throw EmbeddingError("instance " + in.id + " has an empty query");
  Tensor out = Tensor::matrix(tokens.size(), spec.total_dim());
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    std::vector<std::vector<double>> parts;
    for (std::size_t s = 0; s < spec.size(); ++s) {
      const auto& src = spec.source(s);
      if (src.kind() == SourceKind::contextual_file) {
        parts.push_back(src.span({in.id, -1, -1, static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(j + 1)}));
      } else {
        parts.push_back(src.token(tokens[j]));
      }
    }
    const auto row = spec.combine(parts);
    std::copy(row.begin(), row.end(), out.data().begin() + static_cast<std::ptrdiff_t>(j * spec.total_dim()));
  }
  return out;
}

Projection::Projection(ParamSet& params, const std::string& prefix, std::size_t in_dim, std::size_t out_dim, Rng& rng)
    : in_(in_dim), out_(out_dim) {
  if (in_dim == 0 || out_dim == 0) throw std::invalid_argument("projection widths must be positive");
  w_ = &params.glorot(prefix + "/W", in_dim, out_dim, rng);
  b_ = &params.zeros(prefix + "/b", 1, out_dim);
}

Var Projection::apply(Tape& tape, Var features) const {
  if (features.cols() != in_) {
    throw ShapeError("projection expects width " + std::to_string(in_) + ", got " + shape_str(features.shape()));
  }
  return ops::add(ops::matmul(features, tape.param(*w_)), tape.param(*b_));
}

}  // namespace rgcnqa
