#include <doctest.h>

#include <random>

#include "../oracles.hpp"
#include "fairsin/error.hpp"
#include "fairsin/probe.hpp"
#include "fairsin/synth.hpp"

using namespace fairsin;

namespace {

struct Data {
  Matrix x;
  std::vector<int> s;
};

Data labelled_points(std::size_t n, double shift, double p1, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p1);
  std::normal_distribution<double> noise(0.0, 1.0);
  Data d{Matrix(n, 3), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    d.s[i] = coin(rng);
    for (std::size_t c = 0; c < 3; ++c) d.x(i, c) = noise(rng) + (c == 0 && d.s[i] ? shift : 0.0);
  }
  return d;
}

}  // namespace

TEST_CASE("probe recovers a separable attribute and ignores an independent one") {
  const Data sep = labelled_points(1000, 10.0, 0.5, 1);
  const ProbeModel m = fit_probe(sep.x, sep.s, {});
  CHECK(probe_score(m, sep.x, sep.s) > 0.95);
  CHECK(m.train_idx.size() == 700);
  CHECK(m.test_idx.size() == 300);

  const Data indep = labelled_points(2000, 0.0, 0.5, 2);
  CHECK(probe_score(fit_probe(indep.x, indep.s, {}), indep.x, indep.s) == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("a constant feature yields the prior-matching score") {
  const double p = 0.8;
  Data d = labelled_points(4000, 0.0, p, 3);
  d.x = Matrix(4000, 2, 1.0);
  const ProbeModel m = fit_probe(d.x, d.s, {});
  CHECK(probe_score(m, d.x, d.s) == doctest::Approx(p * p + (1 - p) * (1 - p)).epsilon(0.03));
}

TEST_CASE("score and entropy of fixed models") {
  const Data d = labelled_points(100, 0.0, 0.5, 4);
  ProbeModel m = fit_probe(d.x, d.s, {});
  std::fill(m.weights.begin(), m.weights.end(), 0.0);
  m.bias = 0.0;
  CHECK(probe_score(m, d.x, d.s) == doctest::Approx(0.5));
  CHECK(conditional_entropy(m, d.x, d.s) == doctest::Approx(std::log(2.0)));
  for (double p : probe_probabilities(m, d.x)) CHECK(p == 0.5);
}

TEST_CASE("probe split and fit are deterministic in the seed") {
  const Data d = labelled_points(300, 1.0, 0.5, 5);
  ProbeConfig c;
  c.seed = 11;
  const ProbeModel a = fit_probe(d.x, d.s, c), b = fit_probe(d.x, d.s, c);
  CHECK(a.weights == b.weights);
  CHECK(a.test_idx == b.test_idx);
  c.seed = 12;
  CHECK_FALSE(fit_probe(d.x, d.s, c).test_idx == a.test_idx);
}

TEST_CASE("probe input validation") {
  const Data d = labelled_points(50, 0.0, 0.5, 6);
  CHECK_THROWS_AS(fit_probe(d.x, std::vector<int>(49), {}), ShapeError);
  CHECK_THROWS_AS(fit_probe(d.x, std::vector<int>(50, 1), {}), ValidationError);
  ProbeConfig c;
  c.train_frac = 1.0;
  CHECK_THROWS_AS(fit_probe(d.x, d.s, c), ConfigError);
}

TEST_CASE("mean aggregation") {
  const Graph g = Graph::from_edges(4, {{0, 1}, {0, 2}}, Matrix(4, 1, {1.0, 2.0, 4.0, 8.0}), {0, 1, 0, 1},
                                    {0, 1, 0, 1}, std::vector<bool>(4, true));
  const Matrix a = mean_aggregate(g, g.features());
  CHECK(a(0, 0) == 4.0);
  CHECK(a(1, 0) == 3.0);
  CHECK(a(3, 0) == 8.0);
}

TEST_CASE("at delta 0 the neutralized groups equal the raw ones") {
  SynthConfig s;
  s.n_nodes = 400;
  const Graph g = generate(s);
  const Estimator est(g.n_features(), 0);
  ParamStore params;
  std::mt19937_64 rng(1);
  est.init(params, rng);
  const auto r = four_group_comparison(g, est, params, 0.0, {});
  CHECK(r[0].score == r[2].score);
  CHECK(r[1].score == r[3].score);
  CHECK(to_string(r[3].group) == "neutral+mp");
  CHECK(r[0].n_probe_test == 120);
}

TEST_CASE("Monte Carlo gap estimates") {
  TheoryConfig c;
  c.n_samples = 200000;
  c.seed = 3;
  const GapComparison r = theorem1_montecarlo(c);
  // Expected gaps: 1, then 1 + 0.8 - 0.2.
  CHECK(std::abs(r.gap_before.mean - 1.0) < 5 * r.gap_before.se);
  CHECK(std::abs(r.gap_after.mean - 1.6) < 5 * r.gap_after.se);
  CHECK(std::abs(r.increase.mean - 0.6) < 5 * r.increase.se);
  CHECK(r.increase.se > 0.0);

  for (double delta : {0.0, 0.25, 1.0}) {
    const McEstimate e = eq6_check(c, delta);
    CHECK(std::abs(e.mean - (1.0 - delta)) < 5 * e.se);
  }
  CHECK_THROWS_AS(eq6_check(c, 1.5), ConfigError);

  TheoryConfig sharded = c;
  sharded.shards = 4;
  const GapComparison s = theorem1_montecarlo(sharded);
  CHECK(s.gap_after.mean == theorem1_montecarlo(sharded).gap_after.mean);
  CHECK(std::abs(s.gap_after.mean - 1.6) < 5 * s.gap_after.se);

  c.n_samples = 0;
  CHECK_THROWS_AS(theorem1_montecarlo(c), ConfigError);
  c.n_samples = 10;
  c.p_diff = 0.3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
