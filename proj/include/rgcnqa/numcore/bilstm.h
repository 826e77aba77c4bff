#pragma once

#include <string>

#include "rgcnqa/numcore/param.h"
#include "rgcnqa/numcore/tape.h"

namespace rgcnqa {

/// Weights of one LSTM direction. Gate columns are laid out [input, forget, cell, output].
struct LstmWeights {
  Param* input = nullptr;   // e x 4h
  Param* hidden = nullptr;  // h x 4h
  Param* bias = nullptr;    // 1 x 4h
};

/// Bidirectional LSTM mapping an m x e sequence to m x d states, where each
/// direction contributes d/2 columns. The pooled vector is the concatenation of
/// the last forward state and the first backward state, linearly projected to d.
class BiLstm {
 public:
  struct Output {
    Var states;  // m x d
    Var pooled;  // 1 x d
  };

  BiLstm(ParamSet& params, const std::string& prefix, std::size_t input_dim, std::size_t output_dim, Rng& rng);

  Output forward(Tape& tape, Var sequence) const;

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  const LstmWeights& forward_weights() const { return fwd_; }
  const LstmWeights& backward_weights() const { return bwd_; }
  Param& pool_weight() const { return *pool_w_; }
  Param& pool_bias() const { return *pool_b_; }

 private:
  std::size_t input_dim_;
  std::size_t output_dim_;
  LstmWeights fwd_;
  LstmWeights bwd_;
  Param* pool_w_;
  Param* pool_b_;
};

}  // namespace rgcnqa
