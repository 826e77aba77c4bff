#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rgcnqa/graphbuild/graph.h"
#include "rgcnqa/embed/embedding.h"
#include "rgcnqa/numcore/bilstm.h"
#include "rgcnqa/rgcn/layer.h"

namespace rgcnqa {

enum class Arch : std::uint8_t { entity, path, mashup };

std::string_view arch_name(Arch a);
Arch arch_from_name(std::string_view name);

struct ModelConfig {
  Arch arch = Arch::entity;
  std::size_t d = 256;
  std::size_t layers = 3;
  bool use_rgcn = true;
  int scale = 1;  // 1 or 2; 2 roughly doubles the parameter count
  GraphConfig graph;
  std::vector<std::string> embed_spec;
  std::size_t input_dim = 0;  // width of the combined embedding feature
  double dropout = 0.0;
  std::uint64_t seed = 1;

  /// Hidden width actually used: d for scale 1; for scale 2 the even width
  /// whose parameter count is closest to twice that of width d.
  std::size_t width() const;
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Closed-form parameter count of the model built from `c` at width `w`.
std::size_t parameter_count(const ModelConfig& c, std::size_t w);

/// Everything a forward pass needs about one instance.
struct ModelInput {
  Tensor node_features;   // n x input_dim
  Tensor query_features;  // m x input_dim
  NeighborIndex index;
  std::vector<std::vector<std::size_t>> candidate_nodes;  // per candidate, its scoring nodes
};

ModelInput make_input(const RelGraph& graph, Tensor node_features, Tensor query_features, const GraphConfig& graph_config);

struct NodeScores {
  Var node_logits;       // n x 1, one per node; only candidate rows are used
  Var candidate_logits;  // 1 x k, max over each candidate's nodes
  Tensor probabilities;  // 1 x k softmax of candidate_logits
  std::size_t predicted() const;
};

class Model {
 public:
  explicit Model(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  std::size_t width() const { return w_; }

  struct Query {
    Var states;  // m x w
    Var pooled;  // 1 x w
  };
  Query encode_query(Tape& tape, const Tensor& query_features) const;

  /// Dispatches on config().arch. `training` enables dropout.
  NodeScores forward(Tape& tape, const ModelInput& input, bool training = false) const;
  NodeScores forward_entitygcn(Tape& tape, const ModelInput& input, bool training = false) const;
  NodeScores forward_pathgcn(Tape& tape, const ModelInput& input, bool training = false) const;
  NodeScores forward_mashupgcn(Tape& tape, const ModelInput& input, bool training = false) const;

  /// Node states after the RGCN stack (or its bypass), before any attention
  /// or output layer.
  Var node_states(Tape& tape, const ModelInput& input, const Query& q, bool training = false) const;

  /// Node-query attention fused into n x w node representations.
  Var biattention(Tape& tape, Var nodes, Var query) const;
  /// Two-layer scorer, max per candidate, softmax over candidates.
  NodeScores output_layer(Tape& tape, Var reps, const ModelInput& input) const;

  /// Negative log probability of candidate `target`.
  Var loss(Tape& tape, const NodeScores& scores, std::size_t target) const;

 private:
  void require_arch(Arch a, const char* who) const;

  ModelConfig config_;
  std::size_t w_;
  ParamSet params_;
  std::unique_ptr<Projection> input_proj_;
  std::unique_ptr<BiLstm> query_lstm_;
  Param* joint_w_ = nullptr;
  Param* joint_b_ = nullptr;
  std::vector<RgcnLayer> rgcn_;
  Param* att_w1_ = nullptr;  // w x 1
  Param* att_w2_ = nullptr;  // w x 1
  Param* att_w3_ = nullptr;  // 1 x w
  Param* att_out_w_ = nullptr;
  Param* att_out_b_ = nullptr;
  Param* out_w1_;
  Param* out_b1_;
  Param* out_w2_;
  Param* out_b2_;
};

}  // namespace rgcnqa
