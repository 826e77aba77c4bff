#include "rgcnqa/numcore/bilstm.h"

#include <array>
#include <vector>

#include "rgcnqa/numcore/ops.h"

namespace rgcnqa {
namespace {

LstmWeights make_direction(ParamSet& params, const std::string& prefix, std::size_t e, std::size_t h, Rng& rng) {
  LstmWeights w;
  w.input = &params.glorot(prefix + "_W_input", e, 4 * h, rng);
  w.hidden = &params.glorot(prefix + "_W_hidden", h, 4 * h, rng);
  w.bias = &params.zeros(prefix + "_b", 1, 4 * h);
  return w;
}

// Runs one direction; returns per-step hidden states in sequence order.
std::vector<Var> run_direction(Tape& tape, const LstmWeights& w, Var projected_inputs, std::size_t h, bool reverse) {
  const std::size_t m = projected_inputs.rows();
  Var w_hidden = tape.param(*w.hidden);
  Var bias = tape.param(*w.bias);
  Var state = tape.constant(Tensor::matrix(1, h));
  Var cell = tape.constant(Tensor::matrix(1, h));
  std::vector<Var> states(m);
  for (std::size_t step = 0; step < m; ++step) {
    const std::size_t t = reverse ? m - 1 - step : step;
    Var z = ops::add(ops::add(ops::slice(projected_inputs, 0, t, 1), ops::matmul(state, w_hidden)), bias);
    const std::array<std::size_t, 4> sizes{h, h, h, h};
    auto gates = ops::split(z, 1, sizes);
    Var in = ops::sigmoid(gates[0]);
    Var forget = ops::sigmoid(gates[1]);
    Var candidate = ops::tanh(gates[2]);
    Var out = ops::sigmoid(gates[3]);
    cell = ops::add(ops::mul(forget, cell), ops::mul(in, candidate));
    state = ops::mul(out, ops::tanh(cell));
    states[t] = state;
  }
  return states;
}

}  // namespace

BiLstm::BiLstm(ParamSet& params, const std::string& prefix, std::size_t input_dim, std::size_t output_dim, Rng& rng)
    : input_dim_(input_dim), output_dim_(output_dim) {
  if (output_dim == 0 || output_dim % 2 != 0) {
    throw std::invalid_argument("BiLstm: output width must be a positive even number");
  }
  const std::size_t h = output_dim / 2;
  fwd_ = make_direction(params, prefix + "/fwd", input_dim, h, rng);
  bwd_ = make_direction(params, prefix + "/bwd", input_dim, h, rng);
  pool_w_ = &params.glorot(prefix + "/pool_W", output_dim, output_dim, rng);
  pool_b_ = &params.zeros(prefix + "/pool_b", 1, output_dim);
}

BiLstm::Output BiLstm::forward(Tape& tape, Var sequence) const {
  if (sequence.rows() == 0) throw std::invalid_argument("bilstm: empty sequence");
  if (sequence.cols() != input_dim_) {
    throw ShapeError("bilstm: expected input width " + std::to_string(input_dim_) + ", got " +
                     std::to_string(sequence.cols()));
  }
  const std::size_t h = output_dim_ / 2;
  const std::size_t m = sequence.rows();
  Var fwd_in = ops::matmul(sequence, tape.param(*fwd_.input));
  Var bwd_in = ops::matmul(sequence, tape.param(*bwd_.input));
  auto fwd_states = run_direction(tape, fwd_, fwd_in, h, false);
  auto bwd_states = run_direction(tape, bwd_, bwd_in, h, true);

  std::vector<Var> rows;
  rows.reserve(m);
  for (std::size_t t = 0; t < m; ++t) {
    const std::array<Var, 2> halves{fwd_states[t], bwd_states[t]};
    rows.push_back(ops::concat(halves, 1));
  }
  Var states = ops::concat(rows, 0);

  const std::array<Var, 2> finals{fwd_states[m - 1], bwd_states[0]};
  Var pooled = ops::add(ops::matmul(ops::concat(finals, 1), tape.param(*pool_w_)), tape.param(*pool_b_));
  return {states, pooled};
}

}  // namespace rgcnqa
