#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <map>

#include "../support/model_fixtures.h"
#include "../support/toy_instances.h"
#include "rgcnqa/graphbuild/build.h"
#include "rgcnqa/numcore/ops.h"

using namespace rgcnqa;
using namespace rgcnqa::testing;

namespace {

const Arch kArchs[] = {Arch::entity, Arch::path, Arch::mashup};

Tensor probs(const Model& m, const ModelInput& in) {
  Tape t(0, false);
  return m.forward(t, in).probabilities;
}

Tensor cand_logits(const Model& m, const ModelInput& in) {
  Tape t(0, false);
  return m.forward(t, in).candidate_logits.value();
}

}  // namespace

TEST_CASE("architecture names and config json") {
  for (Arch a : kArchs) CHECK(arch_from_name(arch_name(a)) == a);
  CHECK_THROWS(arch_from_name("gat"));
  ModelConfig c = small_config(Arch::mashup, 6);
  c.graph = config_for_setting("reason+sents");
  c.embed_spec = {"glove", "elmo"};
  c.scale = 2;
  CHECK(model_config_from_json(model_config_to_json(c)) == c);
  ModelConfig bad = c;
  bad.d = 5;
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.scale = 3;
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.input_dim = 0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("parameter count formula and scale") {
  for (Arch a : kArchs) {
    for (bool rgcn : {true, false}) {
      for (int scale : {1, 2}) {
        ModelConfig c = small_config(a, 6, rgcn);
        c.d = 8;
        c.scale = scale;
        c.graph = config_for_setting("reason");
        const Model m(c);
        CHECK(m.params().scalar_count() == parameter_count(c, m.width()));
      }
    }
    for (std::size_t input_dim : {16u, 300u, 2092u}) {
      ModelConfig c = small_config(a, input_dim);
      c.d = 256;
      c.layers = 3;
      const double one = static_cast<double>(parameter_count(c, c.width()));
      c.scale = 2;
      const double two = static_cast<double>(parameter_count(c, c.width()));
      CAPTURE(input_dim);
      CHECK(two / one == doctest::Approx(2.0).epsilon(0.15));
      CHECK(c.width() % 2 == 0);
      CHECK(c.width() > 256);
    }
  }
  const ModelConfig c = small_config(Arch::entity, 6);
  const Model m(c);
  CHECK(m.params().find("entity/rgcn0/W_co_doc") != nullptr);
  CHECK(m.params().find("entity/rgcn1/W_complement") != nullptr);
  CHECK(m.params().find("entity/output/W1") != nullptr);
  CHECK(m.params().find("entity/rgcn0/W_q") == nullptr);
  const Model p(small_config(Arch::path, 6));
  CHECK(p.params().find("path/rgcn0/W_q") != nullptr);
  CHECK(p.params().find("path/joint/W") == nullptr);
  CHECK(p.params().find("path/biatt/W_out") != nullptr);
}

TEST_CASE("query encoding") {
  const Model m(small_config(Arch::entity, 5));
  Rng rng(4);
  const Tensor one = random_tensor(1, 5, rng);
  Tape t;
  const auto q = m.encode_query(t, one);
  CHECK(q.states.rows() == 1);
  CHECK(q.states.cols() == 4);
  const Tensor seq = random_tensor(3, 5, rng);
  Tape t1, t2;
  const auto a = m.encode_query(t1, seq);
  const Model twin(small_config(Arch::entity, 5));
  const auto b = twin.encode_query(t2, seq);
  CHECK(a.states.value() == b.states.value());
  CHECK(a.pooled.value() == b.pooled.value());
  // pooled = [last forward state; first backward state] W_pool + b_pool
  const Tensor& s = a.states.value();
  const Tensor& W = m.params().find("entity/query_lstm/pool_W")->value;
  const Tensor& bias = m.params().find("entity/query_lstm/pool_b")->value;
  for (std::size_t c = 0; c < 4; ++c) {
    double v = bias(0, c);
    for (std::size_t k = 0; k < 2; ++k) v += s(2, k) * W(k, c) + s(0, 2 + k) * W(2 + k, c);
    CHECK(std::abs(a.pooled.value()(0, c) - v) < 1e-12);
  }
  Tape t3;
  CHECK_THROWS_AS(m.encode_query(t3, Tensor::matrix(0, 5)), ShapeError);
}

TEST_CASE("probabilities and forced softmax") {
  const RelGraph g = toy_graph();
  for (Arch a : kArchs) {
    for (bool rgcn : {true, false}) {
      Model m(small_config(a, 5, rgcn));
      Rng rng(9);
      const ModelInput in = random_input(g, GraphConfig{}, 5, 3, rng);
      const Tensor p = probs(m, in);
      CHECK(p.cols() == 2);
      CHECK(p(0, 0) + p(0, 1) == doctest::Approx(1.0).epsilon(1e-12));

      RelGraph single = g;
      for (auto& n : single.nodes) {
        if (n.candidate) n.candidate = 0u;
      }
      single.candidate_count = 1;
      const ModelInput in1 = random_input(single, GraphConfig{}, 5, 3, rng);
      CHECK(probs(m, in1)(0, 0) == 1.0);
    }
  }
}

TEST_CASE("output layer") {
  Model m(small_config(Arch::path, 5));
  const RelGraph g = toy_graph();
  Rng rng(10);
  const ModelInput in = random_input(g, GraphConfig{}, 5, 2, rng);

  SUBCASE("identical representations give equal probabilities") {
    Tape t;
    Tensor reps = Tensor::matrix(5, 4);
    reps.fill(0.3);
    const NodeScores s = m.output_layer(t, t.constant(reps), in);
    CHECK(s.probabilities(0, 0) == doctest::Approx(0.5));
    CHECK(s.probabilities(0, 1) == doctest::Approx(0.5));
  }
  SUBCASE("max aggregation") {
    Tape t;
    Tensor logits = Tensor::matrix(3, 1);
    logits(0, 0) = 0.2;
    logits(1, 0) = 0.9;
    logits(2, 0) = -1.0;
    const Var c = ops::group_max(t.constant(logits), {{0, 1}, {2}});
    CHECK(c.value()(0, 0) == 0.9);
  }
  SUBCASE("independent recomputation") {
    Tape t;
    const Tensor reps = random_tensor(5, 4, rng);
    const NodeScores s = m.output_layer(t, t.constant(reps), in);
    const Tensor& nl = s.node_logits.value();
    std::vector<double> cand(2, -INFINITY);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (g.nodes[i].kind == NodeKind::candidate) cand[*g.nodes[i].candidate] = std::max(cand[*g.nodes[i].candidate], nl(i, 0));
    }
    const double z = std::exp(cand[0]) + std::exp(cand[1]);
    CHECK(std::abs(s.probabilities(0, 0) - std::exp(cand[0]) / z) < 1e-9);
    CHECK(std::abs(s.probabilities(0, 1) - std::exp(cand[1]) / z) < 1e-9);
    // the reasoning node does not score even with the largest logit
    Tensor boosted = reps;
    for (std::size_t c = 0; c < 4; ++c) boosted(2, c) = 50.0;
    Tape t2;
    CHECK(m.output_layer(t2, t2.constant(boosted), in).candidate_logits.value() == s.candidate_logits.value());
  }
  SUBCASE("no candidates") {
    ModelInput empty = in;
    empty.candidate_nodes.clear();
    Tape t;
    CHECK_THROWS(m.output_layer(t, t.constant(Tensor::matrix(5, 4)), empty));
  }
}

TEST_CASE("bi-directional attention") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Model m(small_config(Arch::mashup, 5, true, seed));
    Rng rng(seed + 20);
    randomize_biases(m.params(), rng);
    const auto& P = m.params();
    for (std::size_t qlen : {1u, 2u}) {
      const Tensor N = random_tensor(2, 4, rng);
      const Tensor Q = random_tensor(qlen, 4, rng);
      Tape t;
      const Tensor out = m.biattention(t, t.constant(N), t.constant(Q)).value();
      CHECK(out.rows() == 2);
      CHECK(out.cols() == 4);
      const Tensor ref = oracle_biattention(N, Q, P.find("mashup/biatt/w_node")->value, P.find("mashup/biatt/w_query")->value,
                                            P.find("mashup/biatt/w_product")->value, P.find("mashup/biatt/W_out")->value,
                                            P.find("mashup/biatt/b_out")->value);
      double diff = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) diff = std::max(diff, std::abs(out[i] - ref[i]));
      CHECK(diff < 1e-12);
    }
  }
  Model entity(small_config(Arch::entity, 5));
  Tape t;
  CHECK_THROWS(entity.biattention(t, t.constant(Tensor::matrix(2, 4)), t.constant(Tensor::matrix(1, 4))));
}

TEST_CASE("single query token attends fully") {
  // with one query row every node's attended vector is that row, so the
  // layer output matches the oracle run with P = [p_1]
  Model m(small_config(Arch::path, 5));
  Rng rng(31);
  const Tensor N = random_tensor(3, 4, rng);
  const Tensor Q = random_tensor(1, 4, rng);
  Tape t;
  const Tensor out = m.biattention(t, t.constant(N), t.constant(Q)).value();
  const auto& P = m.params();
  const Tensor ref = oracle_biattention(N, Q, P.find("path/biatt/w_node")->value, P.find("path/biatt/w_query")->value,
                                        P.find("path/biatt/w_product")->value, P.find("path/biatt/W_out")->value,
                                        P.find("path/biatt/b_out")->value);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(std::abs(out[i] - ref[i]) < 1e-12);
}

TEST_CASE("end to end gradients") {
  const RelGraph g = toy_graph();
  for (Arch a : kArchs) {
    for (bool rgcn : {true, false}) {
      Model m(small_config(a, 5, rgcn));
      Rng rng(50);
      randomize_biases(m.params(), rng);
      const ModelInput in = random_input(g, GraphConfig{}, 5, 3, rng);
      const auto res = model_gradcheck(m, in, 1);
      CAPTURE(arch_name(a));
      CAPTURE(res.worst_param);
      CHECK(res.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("architecture-specific entry points") {
  const RelGraph g = toy_graph();
  Rng rng(3);
  const ModelInput in = random_input(g, GraphConfig{}, 5, 2, rng);
  Model e(small_config(Arch::entity, 5));
  Tape t;
  CHECK_NOTHROW(e.forward_entitygcn(t, in));
  CHECK_THROWS(e.forward_pathgcn(t, in));
  CHECK_THROWS(e.forward_mashupgcn(t, in));
}

TEST_CASE("without rgcn the edges do not matter") {
  const RelGraph g = toy_graph();
  for (Arch a : kArchs) {
    Model m(small_config(a, 5, false));
    Rng rng(60);
    const ModelInput in = random_input(g, GraphConfig{}, 5, 3, rng);
    RelGraph stripped = g;
    stripped.edges.clear();
    RelGraph rewired = g;
    rewired.edges = {{4, 1, Relation::co_doc}, {1, 4, Relation::match_within}};
    const ModelInput in2 = make_input(stripped, in.node_features, in.query_features, GraphConfig{});
    const ModelInput in3 = make_input(rewired, in.node_features, in.query_features, GraphConfig{});
    CHECK(cand_logits(m, in) == cand_logits(m, in2));
    CHECK(cand_logits(m, in) == cand_logits(m, in3));
  }
}

TEST_CASE("candidate order does not change predictions") {
  auto hash = std::make_shared<const EmbeddingSource>(EmbeddingSource::hash_fallback("hash", 6));
  const EmbedSpec spec({hash});
  const GraphConfig gc = config_for_setting("reason");
  for (Arch a : kArchs) {
    ModelConfig c = small_config(a, 6);
    c.graph = gc;
    const Model m(c);
    for (const auto& in : toy_instances()) {
      if (in.candidates.size() < 2) continue;
      Instance rev = in;
      std::reverse(rev.candidates.begin(), rev.candidates.end());
      std::map<std::string, double> p1, p2;
      for (const Instance* x : {&in, static_cast<const Instance*>(&rev)}) {
        const RelGraph g = build_graph(*x, gc);
        const ModelInput input = make_input(g, featurize_nodes(*x, g, spec), featurize_query(*x, spec), gc);
        const Tensor p = probs(m, input);
        for (std::size_t k = 0; k < x->candidates.size(); ++k) (x == &in ? p1 : p2)[x->candidates[k]] = p(0, k);
      }
      double total = 0.0;
      for (const auto& [name, v] : p1) {
        CHECK(std::abs(v - p2[name]) < 1e-9);
        total += v;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("entity model output depends only on the L-hop neighborhood of candidates") {
  // chain 0 -> 1 -> 2 -> 3 where only node 3 is a candidate mention
  RelGraph g;
  g.candidate_count = 1;
  g.nodes.resize(4);
  for (std::size_t i = 0; i < 4; ++i) {
    g.nodes[i].kind = NodeKind::reason;
    g.nodes[i].doc = static_cast<std::int32_t>(i);
  }
  g.nodes[3].kind = NodeKind::candidate;
  g.nodes[3].candidate = 0u;
  g.edges = {{0, 1, Relation::co_doc}, {1, 2, Relation::co_doc}, {2, 3, Relation::co_doc}};
  Model m(small_config(Arch::entity, 5));  // L = 2
  Rng rng(70);
  const ModelInput in = random_input(g, GraphConfig{}, 5, 2, rng);
  auto logits_with = [&](std::size_t node) {
    ModelInput bumped = in;
    for (std::size_t c = 0; c < 5; ++c) bumped.node_features(node, c) += 1.0;
    Tape t(0, false);
    return m.forward(t, bumped).node_logits.value()(3, 0);
  };
  Tape t(0, false);
  const double base = m.forward(t, in).node_logits.value()(3, 0);
  CHECK(logits_with(0) == base);  // three hops away
  CHECK(logits_with(1) != base);  // two hops away
}

TEST_CASE("dropout only in training mode") {
  ModelConfig c = small_config(Arch::entity, 5);
  c.dropout = 0.5;
  Model m(c);
  const RelGraph g = toy_graph();
  Rng rng(80);
  const ModelInput in = random_input(g, GraphConfig{}, 5, 2, rng);
  Tape a(1, false), b(2, false);
  CHECK(m.forward(a, in).candidate_logits.value() == m.forward(b, in).candidate_logits.value());
  Tape c1(1, false), c2(1, false);
  CHECK(m.forward(c1, in, true).candidate_logits.value() == m.forward(c2, in, true).candidate_logits.value());
}
