#include <doctest.h>

#include "fairsin/error.hpp"
#include "fairsin/synth.hpp"

using namespace fairsin;

TEST_CASE("p_same = 1 gives no heterogeneous edge and p_same = 0 no homogeneous one") {
  SynthConfig c;
  c.n_nodes = 500;
  c.p_same = 1.0;
  CHECK(homogeneous_edge_fraction(generate(c)) == 1.0);
  c.p_same = 0.0;
  CHECK(homogeneous_edge_fraction(generate(c)) == 0.0);
}

TEST_CASE("homogeneous edge fraction follows p_same") {
  SynthConfig c;
  c.n_nodes = 5000;
  c.p_same = 0.8;
  c.seed = 4;
  CHECK(homogeneous_edge_fraction(generate(c)) == doctest::Approx(0.8).epsilon(0.025));
}

TEST_CASE("generated graphs are valid and deterministic") {
  SynthConfig c;
  c.n_nodes = 300;
  c.seed = 5;
  const Graph a = generate(c);
  CHECK(a == generate(c));
  CHECK(a.n_nodes() == 300);
  CHECK(a.n_features() == c.feature_dim);
  CHECK(a.has_both_groups());
  for (std::size_t i = 0; i < a.n_nodes(); ++i)
    for (std::size_t j : a.neighbors(i)) CHECK(j != i);
  c.seed = 6;
  CHECK_FALSE(a == generate(c));
}

TEST_CASE("group means follow the shift and the label rule is honored") {
  SynthConfig c;
  c.n_nodes = 4000;
  c.group_shift = 2.0;
  c.rho = 1.0;
  const Graph g = generate(c);
  double m0 = 0, m1 = 0, n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    CHECK(g.labels()[i] == g.sensitive()[i]);
    (g.sensitive()[i] ? m1 : m0) += g.features()(i, 1);
    (g.sensitive()[i] ? n1 : n0) += 1;
  }
  CHECK(m1 / n1 - m0 / n0 == doctest::Approx(2.0).epsilon(0.05));
  CHECK(c.group_mean(1)[0] == 0.0);

  c.label_rule = LabelRule::FEATURE_THRESHOLD;
  const Graph t = generate(c);
  for (std::size_t i = 0; i < t.n_nodes(); ++i) CHECK(t.labels()[i] == (t.features()(i, 0) > 0.0 ? 1 : 0));
}

TEST_CASE("bias sweep shares everything except the edges") {
  SynthConfig c;
  c.n_nodes = 1000;
  const auto graphs = bias_sweep(c, {0.2, 0.5, 0.9});
  double prev = -1.0;
  for (const Graph& g : graphs) {
    CHECK(g.features() == graphs[0].features());
    CHECK(g.sensitive() == graphs[0].sensitive());
    const double f = homogeneous_edge_fraction(g);
    CHECK(f > prev);
    prev = f;
  }
}

TEST_CASE("manifest round trip and validation") {
  SynthConfig c;
  c.mu0 = {0.0, 1.0};
  c.mu1 = {1.0, 0.0};
  c.feature_dim = 2;
  c.label_rule = LabelRule::FEATURE_THRESHOLD;
  c.seed = 42;
  const SynthConfig back = synth_config_from_json(to_json(c));
  CHECK(generate(back) == generate(c));
  auto j = to_json(c);
  j.erase("rho");
  CHECK_THROWS_AS(synth_config_from_json(j), ConfigError);
  c.p_same = 1.5;
  CHECK_THROWS_AS(generate(c), ConfigError);
  c = {};
  c.mu0 = {1.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(parse_label_rule("xor"), ConfigError);
}
