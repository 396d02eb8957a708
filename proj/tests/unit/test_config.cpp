#include <doctest.h>

#include "fairsin/config.hpp"
#include "fairsin/error.hpp"
#include "fairsin/report.hpp"

using namespace fairsin;

TEST_CASE("canonical dump round-trips through the parser") {
  RunConfig c;
  c.encoder.kind = EncoderKind::SAGE;
  c.train.neutralize.delta = 0.1;
  c.train.neutralize.per_layer_delta = {0.3, 1e-7};
  c.synth.mu0 = {1.5, -2};
  c.synth.mu1 = {0, 0.25};
  c.synth.feature_dim = 2;
  c.seeds = {4, 2};
  c.sweep_deltas = {0, 0.1};
  const std::string text = dump_config(c);
  const RunConfig back = parse_config(text);
  CHECK(dump_config(back) == text);
  CHECK(back.train.neutralize.per_layer_delta == c.train.neutralize.per_layer_delta);
  CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("the hash tracks the experiment but not the output directory") {
  RunConfig a;
  const std::string h = config_hash(a);
  CHECK(h.size() == 16);
  a.output_dir = "elsewhere";
  CHECK(config_hash(a) == h);
  apply_override(a, "train.delta=0.5");
  CHECK(config_hash(a) != h);
}

TEST_CASE("overrides and partial files apply on top of the defaults") {
  const RunConfig c = parse_config("[train]\nvariant = g\nepochs = 7\n[run]\nseeds = 3 1\n");
  CHECK(c.train.neutralize.variant == Variant::G);
  CHECK(c.train.epochs == 7);
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 1});
  CHECK(c.encoder.hidden_dim == RunConfig{}.encoder.hidden_dim);

  RunConfig o;
  apply_override(o, "encoder.kind = gin");
  apply_override(o, "train.no_discri=true");
  CHECK(o.encoder.kind == EncoderKind::GIN);
  CHECK(o.train.no_discri);
}

TEST_CASE("invalid configurations are ConfigErrors") {
  CHECK_THROWS_AS(parse_config("[train]\nunknown_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nosuch]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\ndelta = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\nepochs = ten\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\nno_neutral = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[run]\nseeds = 1 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[data]\nnodes = a.tsv\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train\n"), ConfigError);
  RunConfig c;
  CHECK_THROWS_AS(apply_override(c, "train.delta"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("reports are percentages and validate") {
  MetricsReport m;
  m.per_seed = {{0, 0.5, 0.4, 0.1, 0.2}, {1, 0.7, 0.6, 0.3, 0.0}};
  m.mean = {0.6, 0.5, 0.2, 0.1};
  m.std = {0.1, 0.1, 0.1, 0.1};
  nlohmann::json r = make_report("0123456789abcdef", "full", "gcn", m, 1.5);
  validate_report(r);
  CHECK(r["mean"]["acc"].get<double>() == doctest::Approx(60.0));
  CHECK(r["units"] == "percent");
  CHECK(r["seeds"] == nlohmann::json::array({0, 1}));

  auto broken = r;
  broken["per_seed"][0]["dp"] = 120.0;
  CHECK_THROWS_AS(validate_report(broken), ValidationError);
  broken = r;
  broken["mean"]["acc"] = 90.0;
  CHECK_THROWS_AS(validate_report(broken), ValidationError);
  broken = r;
  broken["seeds"] = nlohmann::json::array({0, 2});
  CHECK_THROWS_AS(validate_report(broken), ValidationError);
  broken = r;
  broken.erase("config_hash");
  CHECK_THROWS_AS(validate_report(broken), ValidationError);
  broken = r;
  broken["wall_seconds"] = -1;
  CHECK_THROWS_AS(validate_report(broken), ValidationError);
}
