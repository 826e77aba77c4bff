#include "rgcnqa/models/model.h"

#include <cmath>
#include <stdexcept>

#include "rgcnqa/numcore/ops.h"

namespace rgcnqa {
namespace {

std::vector<std::string> relation_labels(const GraphConfig& g) {
  std::vector<std::string> out;
  for (Relation r : active_relations(g)) out.emplace_back(relation_name(r));
  return out;
}

bool query_aware(Arch a) { return a != Arch::entity; }
bool has_joint(Arch a) { return a != Arch::path; }
bool has_biattention(Arch a) { return a != Arch::entity; }

Var ones(Tape& tape, std::size_t rows, std::size_t cols) {
  Tensor t = Tensor::matrix(rows, cols);
  t.fill(1.0);
  return tape.constant(std::move(t));
}

}  // namespace

std::string_view arch_name(Arch a) {
  switch (a) {
    case Arch::entity: return "entity";
    case Arch::path: return "path";
    case Arch::mashup: return "mashup";
  }
  return "?";
}

Arch arch_from_name(std::string_view name) {
  for (Arch a : {Arch::entity, Arch::path, Arch::mashup}) {
    if (arch_name(a) == name) return a;
  }
  throw std::invalid_argument("unknown architecture \"" + std::string(name) + "\"");
}

void ModelConfig::validate() const {
  if (d < 2 || d % 2 != 0) throw std::invalid_argument("model width d must be even and at least 2");
  if (layers < 1) throw std::invalid_argument("model needs at least one layer");
  if (scale != 1 && scale != 2) throw std::invalid_argument("scale must be 1 or 2");
  if (input_dim == 0) throw std::invalid_argument("input_dim must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must lie in [0, 1)");
  if (graph.max_path_docs < 2) throw std::invalid_argument("max_path_docs must be at least 2");
}

std::size_t parameter_count(const ModelConfig& c, std::size_t w) {
  const std::size_t e = c.input_dim, h = w / 2, R = active_relations(c.graph).size();
  std::size_t n = e * w + w;                          // input projection
  n += 2 * (e * 4 * h + h * 4 * h + 4 * h) + w * w + w;  // query BiLSTM and pooling
  if (has_joint(c.arch)) n += 2 * w * w + w;
  if (c.use_rgcn) {
    std::size_t layer = R * w * w + w * w + 2 * w * w + w;
    if (query_aware(c.arch)) layer += 2 * w + 1 + 2 * w * w + w;
    n += c.layers * layer;
  }
  if (has_biattention(c.arch)) n += 3 * w + 4 * w * w + w;
  const std::size_t final_width = c.arch == Arch::entity ? 2 * w : w;
  n += final_width * w + w + w + 1;  // output scorer
  return n;
}

std::size_t ModelConfig::width() const {
  if (scale == 1) return d;
  const double target = 2.0 * static_cast<double>(parameter_count(*this, d));
  std::size_t best = d;
  double best_gap = INFINITY;
  for (std::size_t w = d; w <= 2 * d; w += 2) {
    const double gap = std::abs(static_cast<double>(parameter_count(*this, w)) - target);
    if (gap < best_gap) {
      best_gap = gap;
      best = w;
    }
  }
  return best;
}

nlohmann::json model_config_to_json(const ModelConfig& c) {
  return {{"arch", arch_name(c.arch)},
          {"d", c.d},
          {"layers", c.layers},
          {"use_rgcn", c.use_rgcn},
          {"scale", c.scale},
          {"graph", setting_name(c.graph)},
          {"max_path_docs", c.graph.max_path_docs},
          {"ner_mode", c.graph.ner_mode == NerMode::heuristic ? "heuristic" : "provided"},
          {"embed_spec", c.embed_spec},
          {"input_dim", c.input_dim},
          {"dropout", c.dropout},
          {"seed", c.seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.arch = arch_from_name(j.value("arch", std::string("entity")));
    c.d = j.value("d", c.d);
    c.layers = j.value("layers", c.layers);
    c.use_rgcn = j.value("use_rgcn", c.use_rgcn);
    c.scale = j.value("scale", c.scale);
    c.graph = config_for_setting(j.value("graph", std::string("base")));
    c.graph.max_path_docs = j.value("max_path_docs", c.graph.max_path_docs);
    const auto ner = j.value("ner_mode", std::string("heuristic"));
    if (ner != "heuristic" && ner != "provided") throw std::invalid_argument("ner_mode must be heuristic or provided");
    c.graph.ner_mode = ner == "heuristic" ? NerMode::heuristic : NerMode::provided;
    c.embed_spec = j.value("embed_spec", c.embed_spec);
    c.input_dim = j.value("input_dim", c.input_dim);
    c.dropout = j.value("dropout", c.dropout);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("model config: ") + e.what());
  }
  return c;
}

ModelInput make_input(const RelGraph& graph, Tensor node_features, Tensor query_features,
                      const GraphConfig& graph_config) {
  if (node_features.rows() != graph.nodes.size()) {
    throw ShapeError("node features have " + std::to_string(node_features.rows()) + " rows for " +
                     std::to_string(graph.nodes.size()) + " nodes");
  }
  if (query_features.rows() == 0) throw ShapeError("empty query");
  const auto active = active_relations(graph_config);
  ModelInput in{std::move(node_features), std::move(query_features), NeighborIndex::from_graph(graph, active),
                graph.candidate_nodes()};
  for (std::size_t k = 0; k < in.candidate_nodes.size(); ++k) {
    if (in.candidate_nodes[k].empty()) {
      throw std::invalid_argument("graph " + graph.instance_id + ": candidate " + std::to_string(k) + " has no node");
    }
  }
  return in;
}

std::size_t NodeScores::predicted() const {
  const auto& p = probabilities;
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.cols(); ++k) {
    if (p(0, k) > p(0, best)) best = k;
  }
  return best;
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  w_ = config_.width();
  Rng rng(config_.seed);
  const std::string a(arch_name(config_.arch));
  input_proj_ = std::make_unique<Projection>(params_, a + "/input_proj", config_.input_dim, w_, rng);
  query_lstm_ = std::make_unique<BiLstm>(params_, a + "/query_lstm", config_.input_dim, w_, rng);
  if (has_joint(config_.arch)) {
    joint_w_ = &params_.glorot(a + "/joint/W", 2 * w_, w_, rng);
    joint_b_ = &params_.zeros(a + "/joint/b", 1, w_);
  }
  if (config_.use_rgcn) {
    const auto labels = relation_labels(config_.graph);
    rgcn_ = make_rgcn_layers(params_, a + "/rgcn", config_.layers, w_, labels, query_aware(config_.arch), rng);
  }
  if (has_biattention(config_.arch)) {
    att_w1_ = &params_.glorot(a + "/biatt/w_node", w_, 1, rng);
    att_w2_ = &params_.glorot(a + "/biatt/w_query", w_, 1, rng);
    att_w3_ = &params_.glorot(a + "/biatt/w_product", 1, w_, rng);
    att_out_w_ = &params_.glorot(a + "/biatt/W_out", 4 * w_, w_, rng);
    att_out_b_ = &params_.zeros(a + "/biatt/b_out", 1, w_);
  }
  const std::size_t final_width = config_.arch == Arch::entity ? 2 * w_ : w_;
  out_w1_ = &params_.glorot(a + "/output/W1", final_width, w_, rng);
  out_b1_ = &params_.zeros(a + "/output/b1", 1, w_);
  out_w2_ = &params_.glorot(a + "/output/W2", w_, 1, rng);
  out_b2_ = &params_.zeros(a + "/output/b2", 1, 1);
}

void Model::require_arch(Arch a, const char* who) const {
  if (config_.arch != a) {
    throw std::logic_error(std::string(who) + " called on a " + std::string(arch_name(config_.arch)) + " model");
  }
}

Model::Query Model::encode_query(Tape& tape, const Tensor& query_features) const {
  if (query_features.rows() == 0) throw ShapeError("encode_query: empty query");
  const auto out = query_lstm_->forward(tape, tape.constant(query_features));
  return {out.states, out.pooled};
}

Var Model::node_states(Tape& tape, const ModelInput& input, const Query& q, bool training) const {
  const std::size_t n = input.node_features.rows();
  Var h = input_proj_->apply(tape, tape.constant(input.node_features));
  if (has_joint(config_.arch)) {
    const Var parts[] = {ops::repeat_rows(q.pooled, n), h};
    h = ops::tanh(ops::add(ops::matmul(ops::concat(parts, 1), tape.param(*joint_w_)), tape.param(*joint_b_)));
  }
  if (!config_.use_rgcn) return h;
  const bool qa = query_aware(config_.arch);
  for (const auto& layer : rgcn_) {
    h = layer.forward(tape, h, input.index, qa ? std::optional<Var>(q.states) : std::nullopt);
    if (training && config_.dropout > 0.0) h = ops::dropout(h, config_.dropout);
  }
  return h;
}

Var Model::biattention(Tape& tape, Var nodes, Var query) const {
  if (!att_w1_) throw std::logic_error("biattention: model has no attention layer");
  if (nodes.rows() == 0 || query.rows() == 0) throw ShapeError("biattention: empty input");
  const std::size_t n = nodes.rows(), m = query.rows();
  // S = N w1 1^T + 1 (P w2)^T + (N * w3) P^T
  Var s_node = ops::matmul(ops::matmul(nodes, tape.param(*att_w1_)), ones(tape, 1, m));
  Var s_query = ops::repeat_rows(ops::transpose(ops::matmul(query, tape.param(*att_w2_))), n);
  Var s_prod = ops::matmul(ops::mul(nodes, tape.param(*att_w3_)), ops::transpose(query));
  Var s = ops::add(ops::add(s_node, s_query), s_prod);
  Var attended = ops::matmul(ops::softmax_rows(s), query);                              // n x w
  Var node_weights = ops::softmax_rows(ops::transpose(ops::row_max(s)));                 // 1 x n
  Var pooled = ops::repeat_rows(ops::matmul(node_weights, nodes), n);                    // n x w
  const Var parts[] = {nodes, attended, ops::mul(nodes, attended), ops::mul(nodes, pooled)};
  return ops::tanh(ops::add(ops::matmul(ops::concat(parts, 1), tape.param(*att_out_w_)), tape.param(*att_out_b_)));
}

NodeScores Model::output_layer(Tape& tape, Var reps, const ModelInput& input) const {
  if (input.candidate_nodes.empty()) throw std::invalid_argument("output layer: no candidates");
  for (const auto& g : input.candidate_nodes) {
    if (g.empty()) throw std::invalid_argument("output layer: candidate without nodes");
  }
  Var hidden = ops::tanh(ops::add(ops::matmul(reps, tape.param(*out_w1_)), tape.param(*out_b1_)));
  Var logits = ops::add(ops::matmul(hidden, tape.param(*out_w2_)), tape.param(*out_b2_));
  Var cand = ops::group_max(logits, input.candidate_nodes);
  NodeScores s{logits, cand, Tensor::matrix(1, cand.cols())};
  double mx = -INFINITY;
  for (double v : cand.value().data()) mx = std::max(mx, v);
  double z = 0.0;
  for (std::size_t k = 0; k < cand.cols(); ++k) z += s.probabilities(0, k) = std::exp(cand.value()(0, k) - mx);
  for (double& p : s.probabilities.values()) p /= z;
  return s;
}

NodeScores Model::forward_entitygcn(Tape& tape, const ModelInput& input, bool training) const {
  require_arch(Arch::entity, "forward_entitygcn");
  const Query q = encode_query(tape, input.query_features);
  Var h = node_states(tape, input, q, training);
  const Var parts[] = {ops::repeat_rows(q.pooled, h.rows()), h};
  return output_layer(tape, ops::concat(parts, 1), input);
}

NodeScores Model::forward_pathgcn(Tape& tape, const ModelInput& input, bool training) const {
  require_arch(Arch::path, "forward_pathgcn");
  const Query q = encode_query(tape, input.query_features);
  return output_layer(tape, biattention(tape, node_states(tape, input, q, training), q.states), input);
}

NodeScores Model::forward_mashupgcn(Tape& tape, const ModelInput& input, bool training) const {
  require_arch(Arch::mashup, "forward_mashupgcn");
  const Query q = encode_query(tape, input.query_features);
  return output_layer(tape, biattention(tape, node_states(tape, input, q, training), q.states), input);
}

NodeScores Model::forward(Tape& tape, const ModelInput& input, bool training) const {
  switch (config_.arch) {
    case Arch::entity: return forward_entitygcn(tape, input, training);
    case Arch::path: return forward_pathgcn(tape, input, training);
    case Arch::mashup: return forward_mashupgcn(tape, input, training);
  }
  throw std::logic_error("unreachable architecture");
}

Var Model::loss(Tape&, const NodeScores& scores, std::size_t target) const {
  return ops::softmax_cross_entropy(scores.candidate_logits, target);
}

}  // namespace rgcnqa
