#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <deque>
#include <numeric>

#include "../support/gradcheck.h"
#include "../support/rgcn_oracle.h"
#include "rgcnqa/rgcn/layer.h"

using namespace rgcnqa;
using namespace rgcnqa::testing;

namespace {

std::vector<std::string> rel_names(std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t r = 0; r < k; ++r) out.push_back("r" + std::to_string(r));
  return out;
}

struct Fixture {
  ParamSet params;
  Rng rng;
  std::vector<RgcnLayer> layers;

  Fixture(std::size_t d, std::size_t relations, std::size_t count, bool query_aware, std::uint64_t seed)
      : rng(seed) {
    const auto names = rel_names(relations);
    layers = make_rgcn_layers(params, "test/rgcn", count, d, names, query_aware, rng);
    // non-zero biases so the oracle sees them
    for (const auto& e : params.entries()) {
      if (e.name.find("/b_") != std::string::npos) {
        for (double& v : e.param->value.values()) v = rng.uniform(-0.5, 0.5);
      }
    }
  }
};

std::vector<ops::NeighborLists> lists_of(const NeighborIndex& index) {
  std::vector<ops::NeighborLists> out;
  for (std::size_t r = 0; r < index.relation_count(); ++r) out.push_back(index.incoming(r));
  return out;
}

NeighborIndex random_index(std::size_t n, std::size_t relations, double density, Rng& rng) {
  NeighborIndex index(n, relations);
  for (std::size_t r = 0; r < relations; ++r)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b && rng.uniform() < density) index.add_edge(a, b, r);
  return index;
}

Tensor oracle_layer(const RgcnLayer& L, const Tensor& h, const NeighborIndex& index, const Tensor* p) {
  std::vector<const Tensor*> w;
  for (std::size_t r = 0; r < L.relation_count(); ++r) w.push_back(&L.relation_weight(r).value);
  Tensor u = oracle_update(h, oracle_message(h, lists_of(index), w), L.self_weight().value);
  if (L.query_aware()) {
    u = oracle_query_gate(u, *p, L.query_weight().value, L.query_bias().value, L.beta_weight().value,
                          L.beta_bias().value);
  }
  return oracle_gate(u, h, L.gate_weight().value, L.gate_bias().value);
}

Tensor run_stack(const std::vector<RgcnLayer>& layers, const Tensor& h0, const Tensor* p, const NeighborIndex& index,
                 bool query_aware) {
  Tape tape(0, false);
  std::optional<Var> pv;
  if (p) pv = tape.constant(*p);
  return rgcn_forward(tape, tape.constant(h0), pv, index, layers, query_aware).value();
}

}  // namespace

TEST_CASE("message") {
  SUBCASE("isolated node receives nothing") {
    Fixture f(3, 1, 1, false, 1);
    NeighborIndex index(3, 1);
    index.add_edge(0, 1, 0);
    Tape t;
    Tensor m = f.layers[0].message(t, t.constant(random_tensor(3, 3, f.rng)), index).value();
    for (std::size_t c = 0; c < 3; ++c) CHECK(m(2, c) == 0.0);
  }
  SUBCASE("identity transport") {
    Fixture f(3, 1, 1, false, 2);
    f.layers[0].relation_weight(0).value = Tensor::identity(3);
    NeighborIndex index(2, 1);
    index.add_edge(0, 1, 0);
    Tape t;
    const Tensor h = random_tensor(2, 3, f.rng);
    Tensor m = f.layers[0].message(t, t.constant(h), index).value();
    for (std::size_t c = 0; c < 3; ++c) CHECK(m(1, c) == h(0, c));
  }
  SUBCASE("random graphs match the double loop") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Fixture f(4, 3, 1, false, seed);
      const NeighborIndex index = random_index(8, 3, 0.3, f.rng);
      const Tensor h = random_tensor(8, 4, f.rng);
      Tape t;
      const Tensor m = f.layers[0].message(t, t.constant(h), index).value();
      std::vector<const Tensor*> w;
      for (std::size_t r = 0; r < 3; ++r) w.push_back(&f.layers[0].relation_weight(r).value);
      CHECK(max_abs_diff(m, oracle_message(h, lists_of(index), w)) < 1e-12);
    }
  }
  SUBCASE("duplicated identical neighbors leave the mean unchanged") {
    Fixture f(3, 1, 1, false, 3);
    NeighborIndex once(3, 1), thrice(3, 1);
    once.add_edge(0, 2, 0);
    for (int k = 0; k < 3; ++k) thrice.add_edge(0, 2, 0);
    const Tensor h = random_tensor(3, 3, f.rng);
    Tape t;
    const Tensor a = f.layers[0].message(t, t.constant(h), once).value();
    const Tensor b = f.layers[0].message(t, t.constant(h), thrice).value();
    CHECK(max_abs_diff(a, b) < 1e-15);
  }
  SUBCASE("errors") {
    NeighborIndex index(3, 2);
    CHECK_THROWS_AS(index.add_edge(0, 3, 0), std::out_of_range);
    CHECK_THROWS_AS(index.add_edge(0, 1, 2), std::out_of_range);
    Fixture f(3, 2, 1, false, 4);
    Tape t;
    CHECK_THROWS_AS(f.layers[0].message(t, t.constant(Tensor::matrix(4, 3)), index), ShapeError);
    CHECK_THROWS_AS(f.layers[0].message(t, t.constant(Tensor::matrix(3, 2)), index), ShapeError);
    NeighborIndex wrong(3, 1);
    CHECK_THROWS_AS(f.layers[0].message(t, t.constant(Tensor::matrix(3, 3)), wrong), ShapeError);
  }
}

TEST_CASE("neighbor index from a graph") {
  RelGraph g;
  g.nodes.resize(3);
  g.edges = {{0, 1, Relation::co_doc}, {1, 0, Relation::co_doc}, {2, 1, Relation::complement}};
  const std::vector<Relation> active{Relation::co_doc, Relation::complement};
  const NeighborIndex index = NeighborIndex::from_graph(g, active);
  CHECK(index.incoming(0)[1] == std::vector<std::size_t>{0});
  CHECK(index.incoming(0)[0] == std::vector<std::size_t>{1});
  CHECK(index.incoming(1)[1] == std::vector<std::size_t>{2});
  CHECK(index.relation_empty(1) == false);
  const std::vector<Relation> narrow{Relation::co_doc};
  CHECK_THROWS_AS(NeighborIndex::from_graph(g, narrow), std::invalid_argument);
}

TEST_CASE("update") {
  Fixture f(3, 1, 1, false, 5);
  const RgcnLayer& L = f.layers[0];
  const Tensor h = random_tensor(4, 3, f.rng);
  const Tensor m = random_tensor(4, 3, f.rng);
  Tape t;
  CHECK(max_abs_diff(L.update(t, t.constant(h), t.constant(m)).value(), oracle_update(h, m, L.self_weight().value)) <
        1e-12);
  CHECK(L.update(t, t.constant(Tensor::matrix(4, 3)), t.constant(m)).value() == m);
  L.self_weight().value = Tensor::identity(3);
  Tape t2;
  CHECK(L.update(t2, t2.constant(h), t2.constant(Tensor::matrix(4, 3))).value() == h);
  CHECK_THROWS_AS(L.update(t, t.constant(h), t.constant(Tensor::matrix(3, 3))), ShapeError);
}

TEST_CASE("query gate") {
  SUBCASE("single token attention") {
    Fixture f(3, 1, 1, true, 6);
    const Tensor u = random_tensor(4, 3, f.rng);
    const Tensor p = random_tensor(1, 3, f.rng);
    Tape t;
    const Tensor alpha = f.layers[0].query_attention(t, t.constant(u), t.constant(p)).value();
    for (std::size_t i = 0; i < 4; ++i) CHECK(alpha(i, 0) == 1.0);
    // with q_i = p_1 the blend uses the first query row for every node
    const RgcnLayer& L = f.layers[0];
    Tensor p_rows = Tensor::matrix(1, 3);
    for (std::size_t c = 0; c < 3; ++c) p_rows(0, c) = p(0, c);
    const Tensor out = L.query_gate(t, t.constant(u), t.constant(p)).value();
    CHECK(max_abs_diff(out, oracle_query_gate(u, p_rows, L.query_weight().value, L.query_bias().value,
                                              L.beta_weight().value, L.beta_bias().value)) < 1e-12);
  }
  SUBCASE("closed gate returns the update") {
    Fixture f(3, 1, 1, true, 7);
    const RgcnLayer& L = f.layers[0];
    L.beta_weight().value.fill(0.0);
    L.beta_bias().value.fill(-40.0);
    CHECK(sig(-40.0) < 1e-6);
    const Tensor u = random_tensor(4, 3, f.rng);
    const Tensor p = random_tensor(2, 3, f.rng);
    Tape t;
    CHECK(max_abs_diff(L.query_gate(t, t.constant(u), t.constant(p)).value(), u) < 1e-12);
  }
  SUBCASE("scalar transcription") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Fixture f(4, 1, 1, true, 100 + seed);
      const RgcnLayer& L = f.layers[0];
      const Tensor u = random_tensor(3, 4, f.rng);
      const Tensor p = random_tensor(2, 4, f.rng);
      Tensor alpha_ref;
      const Tensor ref = oracle_query_gate(u, p, L.query_weight().value, L.query_bias().value, L.beta_weight().value,
                                           L.beta_bias().value, &alpha_ref);
      Tape t;
      const Tensor alpha = L.query_attention(t, t.constant(u), t.constant(p)).value();
      CHECK(max_abs_diff(alpha, alpha_ref) < 1e-12);
      for (std::size_t i = 0; i < 3; ++i) CHECK(alpha(i, 0) + alpha(i, 1) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(max_abs_diff(L.query_gate(t, t.constant(u), t.constant(p)).value(), ref) < 1e-12);
    }
  }
  SUBCASE("errors") {
    Fixture f(3, 1, 1, true, 8);
    Tape t;
    CHECK_THROWS_AS(f.layers[0].query_gate(t, t.constant(Tensor::matrix(2, 3)), t.constant(Tensor::matrix(0, 3))),
                    ShapeError);
    Fixture plain(3, 1, 1, false, 8);
    CHECK_THROWS(plain.layers[0].query_gate(t, t.constant(Tensor::matrix(2, 3)), t.constant(Tensor::matrix(1, 3))));
    CHECK_THROWS(plain.layers[0].query_weight());
  }
}

TEST_CASE("output gate") {
  Fixture f(3, 1, 1, false, 9);
  const RgcnLayer& L = f.layers[0];
  const Tensor u = random_tensor(4, 3, f.rng);
  const Tensor h = random_tensor(4, 3, f.rng);
  Tape t;
  CHECK(max_abs_diff(L.gate(t, t.constant(u), t.constant(h)).value(),
                     oracle_gate(u, h, L.gate_weight().value, L.gate_bias().value)) < 1e-12);

  L.gate_weight().value.fill(0.0);
  L.gate_bias().value.fill(0.0);
  Tape t2;
  const Tensor neutral = L.gate(t2, t2.constant(u), t2.constant(h)).value();
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(neutral[i] == doctest::Approx(0.5 * std::tanh(u[i]) + 0.5 * h[i]));

  L.gate_bias().value.fill(-40.0);
  Tape t3;
  CHECK(max_abs_diff(L.gate(t3, t3.constant(u), t3.constant(h)).value(), h) < 1e-12);
  CHECK_THROWS_AS(L.gate(t, t.constant(u), t.constant(Tensor::matrix(4, 2))), ShapeError);
}

TEST_CASE("stacked forward") {
  SUBCASE("no edges and closed gates return the input") {
    Fixture f(3, 2, 1, false, 10);
    f.layers[0].gate_bias().value.fill(-40.0);
    const Tensor h0 = random_tensor(4, 3, f.rng);
    CHECK(max_abs_diff(run_stack(f.layers, h0, nullptr, NeighborIndex(4, 2), false), h0) < 1e-12);
  }
  SUBCASE("composition of per-layer oracles") {
    for (bool qa : {false, true}) {
      Fixture f(4, 3, 3, qa, 11);
      const NeighborIndex index = random_index(6, 3, 0.3, f.rng);
      const Tensor h0 = random_tensor(6, 4, f.rng);
      const Tensor p = random_tensor(3, 4, f.rng);
      Tensor ref = h0;
      for (const auto& L : f.layers) ref = oracle_layer(L, ref, index, &p);
      CHECK(max_abs_diff(run_stack(f.layers, h0, qa ? &p : nullptr, index, qa), ref) < 1e-12);
    }
  }
  SUBCASE("path graph needs two layers to carry a to c") {
    Fixture f(3, 1, 2, false, 12);
    for (auto& L : f.layers) {
      L.relation_weight(0).value = Tensor::identity(3);
      L.self_weight().value = Tensor::identity(3);
    }
    NeighborIndex index(3, 1);
    index.add_edge(0, 1, 0);
    index.add_edge(1, 2, 0);
    const Tensor h0 = random_tensor(3, 3, f.rng);
    Tensor bumped = h0;
    bumped(0, 1) += 0.5;
    const std::vector<RgcnLayer> one(f.layers.begin(), f.layers.begin() + 1);
    const Tensor l1a = run_stack(one, h0, nullptr, index, false);
    const Tensor l1b = run_stack(one, bumped, nullptr, index, false);
    for (std::size_t c = 0; c < 3; ++c) CHECK(l1a(2, c) == l1b(2, c));
    const Tensor l2a = run_stack(f.layers, h0, nullptr, index, false);
    const Tensor l2b = run_stack(f.layers, bumped, nullptr, index, false);
    double diff = 0.0;
    for (std::size_t c = 0; c < 3; ++c) diff += std::abs(l2a(2, c) - l2b(2, c));
    CHECK(diff > 1e-6);
  }
  SUBCASE("errors") {
    Fixture f(3, 1, 1, true, 13);
    Tape t;
    CHECK_THROWS(rgcn_forward(t, t.constant(Tensor::matrix(2, 3)), std::nullopt, NeighborIndex(2, 1), f.layers, true));
    CHECK_THROWS(rgcn_forward(t, t.constant(Tensor::matrix(2, 3)), std::nullopt, NeighborIndex(2, 1), {}, false));
    CHECK_THROWS(rgcn_forward(t, t.constant(Tensor::matrix(2, 3)), t.constant(Tensor::matrix(1, 3)),
                              NeighborIndex(2, 1), f.layers, false));
  }
}

TEST_CASE("reachability on random graphs") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const bool qa = seed % 2 == 1;
    Fixture f(3, 2, 3, qa, 200 + seed);
    const std::size_t n = 4 + f.rng.below(7);
    NeighborIndex index(n, 2);
    std::vector<std::vector<std::size_t>> out_edges(n);
    // edges only from lower to higher id, so the graph is acyclic
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        if (f.rng.uniform() < 0.25) {
          index.add_edge(a, b, f.rng.below(2));
          out_edges[a].push_back(b);
        }
    const std::size_t src = f.rng.below(n);
    std::vector<std::size_t> dist(n, SIZE_MAX);
    std::deque<std::size_t> q{src};
    dist[src] = 0;
    while (!q.empty()) {
      const std::size_t v = q.front();
      q.pop_front();
      for (std::size_t w : out_edges[v])
        if (dist[w] == SIZE_MAX) {
          dist[w] = dist[v] + 1;
          q.push_back(w);
        }
    }
    const Tensor h0 = random_tensor(n, 3, f.rng);
    const Tensor p = random_tensor(2, 3, f.rng);
    Tensor bumped = h0;
    for (std::size_t c = 0; c < 3; ++c) bumped(src, c) += 0.7;
    for (std::size_t l = 1; l <= 3; ++l) {
      const std::vector<RgcnLayer> prefix(f.layers.begin(), f.layers.begin() + static_cast<std::ptrdiff_t>(l));
      const Tensor a = run_stack(prefix, h0, qa ? &p : nullptr, index, qa);
      const Tensor b = run_stack(prefix, bumped, qa ? &p : nullptr, index, qa);
      for (std::size_t v = 0; v < n; ++v) {
        bool changed = false;
        for (std::size_t c = 0; c < 3; ++c) changed = changed || a(v, c) != b(v, c);
        CAPTURE(seed);
        CAPTURE(l);
        CAPTURE(v);
        CHECK(changed == (dist[v] <= l));
      }
    }
  }
}

TEST_CASE("node permutation equivariance") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Fixture f(3, 3, 2, true, 300 + seed);
    const std::size_t n = 7;
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> edges;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b && f.rng.uniform() < 0.3) edges.emplace_back(a, b, f.rng.below(3));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    f.rng.shuffle(perm.begin(), perm.end());
    NeighborIndex index(n, 3), pindex(n, 3);
    for (auto [a, b, r] : edges) {
      index.add_edge(a, b, r);
      pindex.add_edge(perm[a], perm[b], r);
    }
    const Tensor h0 = random_tensor(n, 3, f.rng);
    Tensor ph0 = Tensor::matrix(n, 3);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t c = 0; c < 3; ++c) ph0(perm[v], c) = h0(v, c);
    const Tensor p = random_tensor(2, 3, f.rng);
    const Tensor out = run_stack(f.layers, h0, &p, index, true);
    const Tensor pout = run_stack(f.layers, ph0, &p, pindex, true);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(out(v, c) - pout(perm[v], c)) < 1e-12);
  }
}

TEST_CASE("gradients through the stack") {
  for (bool qa : {false, true}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Fixture f(3, 3, 2, qa, 400 + seed);
      const NeighborIndex index = random_index(5, 3, 0.35, f.rng);
      const Tensor h0 = random_tensor(5, 3, f.rng);
      const Tensor p = random_tensor(2, 3, f.rng);
      const Tensor weight = random_tensor(5, 3, f.rng);
      auto loss = [&](Tape& t) {
        Var h = rgcn_forward(t, t.constant(h0), qa ? std::optional<Var>(t.constant(p)) : std::nullopt, index,
                             f.layers, qa);
        return ops::sum(ops::mul(h, t.constant(weight)));
      };
      const auto res = check_gradients(f.params, loss);
      CAPTURE(res.worst_param);
      CHECK(res.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("dropout") {
  Rng rng(1);
  const Tensor x = random_tensor(20, 20, rng);
  Tape t(5);
  Var v = t.constant(x);
  CHECK(ops::dropout(v, 0.0).id() == v.id());
  const Tensor y = ops::dropout(v, 0.5).value();
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] == 0.0) {
      ++zeros;
    } else {
      CHECK(y[i] == doctest::Approx(2.0 * x[i]));
    }
  }
  CHECK(zeros > 140);
  CHECK(zeros < 260);
  Tape t2(5);
  CHECK(ops::dropout(t2.constant(x), 0.5).value() == y);
  CHECK_THROWS(ops::dropout(v, 1.0));
}
