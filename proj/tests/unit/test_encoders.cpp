#include <doctest.h>

#include <random>

#include "../oracles.hpp"
#include "fairsin/encoders.hpp"
#include "fairsin/error.hpp"

using namespace fairsin;

TEST_CASE("normalized adjacency matches the dense construction") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const Graph g = oracle::random_graph(rng, 2 + t % 30, 0.25, 2, t % 2 == 0);
    CHECK(max_abs_diff(normalize_adjacency(g).to_dense(), oracle::dense_normalized_adjacency(g)) < 1e-12);
  }
}

TEST_CASE("GIN and SAGE operators") {
  std::mt19937_64 rng(2);
  const Graph g = oracle::random_graph(rng, 12, 0.3, 2, true);
  Matrix expected = oracle::dense_adjacency(g);
  for (std::size_t i = 0; i < 12; ++i) expected(i, i) += 1.0;
  CHECK(gin_aggregation(g).to_dense() == expected);
  const Matrix mean = mean_aggregation(g).to_dense();
  for (std::size_t i = 0; i < 12; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 12; ++j) s += mean(i, j);
    CHECK(s == doctest::Approx(g.degree(i) > 0 ? 1.0 : 0.0));
  }
}

TEST_CASE("isolated nodes keep their own features under GCN normalization") {
  const Graph g = Graph::from_edges(3, {{0, 1}}, Matrix(3, 1, 1.0), {0, 1, 0}, {0, 1, 0}, std::vector<bool>(3, true));
  CHECK(normalize_adjacency(g).to_dense()(2, 2) == 1.0);
}

TEST_CASE("encoders produce the configured widths and pass gradient checks") {
  for (EncoderKind kind : {EncoderKind::GCN, EncoderKind::GIN, EncoderKind::SAGE}) {
    CAPTURE(to_string(kind));
    std::mt19937_64 rng(3);
    const Graph g = oracle::random_graph(rng, 8, 0.35, 3);
    const EncoderConfig cfg{kind, 2, 4, 0.3};
    const Encoder enc(cfg, 3);
    ParamStore store;
    enc.init(store, rng);
    oracle::jitter(store, rng);
    const Propagation prop = make_propagation(g, kind);
    const std::vector<std::size_t> idx{0, 1, 2, 3, 4};
    const auto r = oracle::check_gradients(store, [&](ad::Tape& t) {
      const auto out = enc.encode(store, prop, t.constant(g.features()), identity_hook, {true, 11, true});
      CHECK(out.representation.cols() == 4);
      CHECK(out.layer_inputs.size() == 2);
      return ad::softmax_cross_entropy(enc.classify(store, out.representation, true), g.labels(), idx);
    });
    CHECK(r.max_rel_error < 1e-5);
  }
}

TEST_CASE("evaluation forward is deterministic and ignores the dropout seed") {
  std::mt19937_64 rng(4);
  const Graph g = oracle::random_graph(rng, 10, 0.3, 3);
  const Encoder enc({EncoderKind::GCN, 2, 5, 0.5}, 3);
  ParamStore store;
  enc.init(store, rng);
  const Propagation prop = make_propagation(g, EncoderKind::GCN);
  auto run = [&](bool training, std::uint64_t seed) {
    ad::Tape t;
    return enc.encode(store, prop, t.constant(g.features()), identity_hook, {training, seed, false})
        .representation.value();
  };
  CHECK(run(false, 1) == run(false, 2));
  CHECK(run(true, 1) == run(true, 1));
  CHECK_FALSE(run(true, 1) == run(true, 2));
}

TEST_CASE("layer hooks see every layer input and must preserve shape") {
  std::mt19937_64 rng(5);
  const Graph g = oracle::random_graph(rng, 6, 0.4, 2);
  const Encoder enc({EncoderKind::SAGE, 3, 4, 0.0}, 2);
  ParamStore store;
  enc.init(store, rng);
  const Propagation prop = make_propagation(g, EncoderKind::SAGE);
  std::vector<std::size_t> seen;
  ad::Tape t;
  enc.encode(store, prop, t.constant(g.features()),
             [&](std::size_t k, ad::Var h) {
               seen.push_back(k);
               CHECK(h.cols() == enc.layer_width(k));
               return h;
             },
             {});
  CHECK(seen == std::vector<std::size_t>{0, 1, 2});
  const LayerHook bad = [](std::size_t, ad::Var h) { return ad::concat(h, h); };
  CHECK_THROWS_AS(enc.encode(store, prop, t.constant(g.features()), bad, {}), ShapeError);
  CHECK_THROWS_AS(enc.encode(store, make_propagation(g, EncoderKind::GCN), t.constant(g.features()), identity_hook, {}),
                  ConfigError);
}

TEST_CASE("argmax breaks ties toward class 0") {
  CHECK(argmax_rows(Matrix(3, 2)) == std::vector<int>{0, 0, 0});
  CHECK(argmax_rows(Matrix(2, 2, {0.0, 1.0, 2.0, 1.0})) == std::vector<int>{1, 0});
}

TEST_CASE("encoder configuration is validated") {
  CHECK_THROWS_AS(Encoder({EncoderKind::GCN, 0, 4, 0.5}, 3), ConfigError);
  CHECK_THROWS_AS(Encoder({EncoderKind::GCN, 2, 4, 1.0}, 3), ConfigError);
  CHECK_THROWS_AS(parse_encoder_kind("gat"), ConfigError);
  CHECK(parse_encoder_kind("sage") == EncoderKind::SAGE);
}
