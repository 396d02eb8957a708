// Acceptance checks. Prints one PASS, FAIL or SKIP line per criterion. Exits
// 1 when any criterion fails and 77 when every selected one was skipped.
//
//   fairsin_acceptance            run every criterion
//   fairsin_acceptance 3 7        run the listed criteria only
//
// Criterion 6 needs FAIRSIN_BAIL_DIR pointing at nodes.tsv and edges.tsv
// (and optionally split.tsv); it is skipped otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "../oracles.hpp"
#include "fairsin/encoders.hpp"
#include "fairsin/error.hpp"
#include "fairsin/metrics.hpp"
#include "fairsin/neutralizer.hpp"
#include "fairsin/probe.hpp"
#include "fairsin/synth.hpp"
#include "fairsin/trainer.hpp"

using namespace fairsin;

namespace {

enum class Status { PASS, FAIL, SKIP };

// Exit status when every selected criterion was skipped (CTest SKIP_RETURN_CODE).
constexpr int kAllSkipped = 77;

struct Outcome {
  Status status;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::PASS : Status::FAIL, std::move(detail)}; }

// ---- shared experiment setups ------------------------------------------------

// Sparse biased graph where message passing, not the raw features alone,
// carries most of the group signal into the predictions.
SynthConfig fairness_graph() {
  SynthConfig c;
  c.n_nodes = 1000;
  c.avg_degree = 1.0;
  c.group_shift = 3.0;
  c.rho = 0.2;
  c.p_same = 0.8;
  c.seed = 7;
  return c;
}

TrainConfig fairness_training() {
  TrainConfig c;
  c.epochs = 200;
  c.lr_estimator = 0.1;
  c.adv_weight = 0.1;
  return c;
}

constexpr std::size_t kSeeds = 5;

struct SeedMeans {
  double acc = 0.0;
  double dp = 0.0;
};

SeedMeans mean_over_seeds(const Graph& g, const Split& split, const EncoderConfig& enc, TrainConfig cfg) {
  SeedMeans m;
  for (std::size_t s = 0; s < kSeeds; ++s) {
    cfg.seed = s;
    const TrainResult r = train(g, split, enc, cfg);
    m.acc += r.test.acc / kSeeds;
    m.dp += r.test.dp / kSeeds;
  }
  return m;
}

// Criteria 4 and 5 share the vanilla run and the delta = 1 run.
struct FairnessRuns {
  bool done = false;
  SeedMeans vanilla;
  std::map<double, SeedMeans> by_delta;
};

FairnessRuns& fairness_runs() {
  static FairnessRuns runs;
  return runs;
}

SeedMeans fairness_at(std::optional<double> delta) {
  FairnessRuns& runs = fairness_runs();
  static const Graph g = generate(fairness_graph());
  static const Split split = stratified_split(g, {}, 1);
  TrainConfig cfg = fairness_training();
  if (!delta) {
    if (!runs.done) {
      cfg.neutralize.variant = Variant::NONE;
      runs.vanilla = mean_over_seeds(g, split, {}, cfg);
      runs.done = true;
    }
    return runs.vanilla;
  }
  if (!runs.by_delta.contains(*delta)) {
    cfg.neutralize.delta = *delta;
    runs.by_delta[*delta] = mean_over_seeds(g, split, {}, cfg);
  }
  return runs.by_delta[*delta];
}

// ---- criteria ----------------------------------------------------------------

Outcome gap_grid() {
  bool ok = true;
  std::string detail;
  double base_after = 0.0;
  for (double p_same : {0.6, 0.8, 0.9}) {
    for (double gap : {0.5, 1.0, 2.0}) {
      TheoryConfig c;
      c.mu_c = gap;
      c.mu_ic = 0.0;
      c.sigma = 1.0;
      c.p_same = p_same;
      c.p_diff = 1.0 - p_same;
      c.n_samples = 100000;
      c.seed = 1;
      const GapComparison r = theorem1_montecarlo(c);
      // Closed form: gap * (1 + p_same - p_diff).
      const double expected = gap * (1.0 + p_same - c.p_diff);
      const bool cell = r.increase.mean > 3.0 * r.increase.se && std::abs(r.gap_after.mean - expected) < 5.0 * r.gap_after.se;
      ok = ok && cell;
      if (p_same == 0.8 && gap == 1.0) base_after = r.gap_after.mean;
      if (!cell) detail += fmt::format(" cell(p={},gap={}) after={:.4f} expected={:.4f};", p_same, gap, r.gap_after.mean, expected);
    }
  }
  ok = ok && std::abs(base_after - 1.6) <= 0.05;
  return verdict(ok, fmt::format("gap_after(p_same=0.8, gap=1)={:.4f}{}", base_after, detail));
}

Outcome neutralized_gap_linearity() {
  bool ok = true;
  std::string detail;
  for (double gap : {0.5, 1.0, 2.0}) {
    TheoryConfig c;
    c.mu_c = gap;
    c.mu_ic = 0.0;
    c.seed = 2;
    std::vector<double> xs{0.0, 0.25, 0.5, 0.75, 1.0}, ys;
    for (double d : xs) ys.push_back(eq6_check(c, d).mean);
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / 5.0;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / 5.0;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    const double slope = sxy / sxx, intercept = my - slope * mx;
    ok = ok && std::abs(slope + gap) <= 0.05 * gap && std::abs(intercept - gap) <= 0.05 * gap;
    detail += fmt::format(" gap={}: slope={:.4f} intercept={:.4f};", gap, slope, intercept);
  }
  return verdict(ok, detail.substr(1));
}

Outcome probe_ordering() {
  SynthConfig s;
  s.n_nodes = 5000;
  s.p_same = 0.8;
  s.group_shift = 1.0;
  s.avg_degree = 3.0;
  s.seed = 3;
  const Graph g = generate(s);
  const Estimator est(g.n_features(), 0);
  ParamStore params;
  std::mt19937_64 rng(nn::mix_seed(3, 2));
  est.init(params, rng);
  fit_estimator(g, g.features(), est, params, {});
  const auto r = four_group_comparison(g, est, params, 1.0, {});
  const double raw = r[0].score, raw_mp = r[1].score, neutral = r[2].score, neutral_mp = r[3].score;
  const bool ok = raw_mp - raw > 0.02 && raw - neutral > 0.02 && raw_mp - neutral_mp > 0.02;
  return verdict(ok, fmt::format("raw={:.4f} raw+mp={:.4f} neutral={:.4f} neutral+mp={:.4f}", raw, raw_mp, neutral,
                                 neutral_mp));
}

Outcome fairness_gain() {
  const SeedMeans v = fairness_at(std::nullopt);
  const SeedMeans f = fairness_at(1.0);
  const double reduction = v.dp > 0.0 ? (v.dp - f.dp) / v.dp : 0.0;
  const double acc_drop = 100.0 * (v.acc - f.acc);
  return verdict(reduction >= 0.40 && acc_drop <= 2.0,
                 fmt::format("vanilla acc={:.2f} dp={:.2f}; fairsin acc={:.2f} dp={:.2f}; dp reduction={:.1f}% acc "
                             "drop={:.2f} points",
                             100 * v.acc, 100 * v.dp, 100 * f.acc, 100 * f.dp, 100 * reduction, acc_drop));
}

Outcome delta_sweep() {
  std::string detail;
  for (double d : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    const SeedMeans m = fairness_at(d);
    detail += fmt::format(" d={}: acc={:.2f} dp={:.2f};", d, 100 * m.acc, 100 * m.dp);
  }
  const auto& by = fairness_runs().by_delta;
  const bool ok = by.at(1.0).dp < by.at(0.0).dp && by.at(10.0).acc < by.at(1.0).acc;
  return verdict(ok, detail.substr(1));
}

Outcome bail_check() {
  const char* dir_env = std::getenv("FAIRSIN_BAIL_DIR");
  if (!dir_env || !*dir_env) return {Status::SKIP, "FAIRSIN_BAIL_DIR not set"};
  const std::filesystem::path dir(dir_env);
  const Graph g = load_dataset(dir / "nodes.tsv", dir / "edges.tsv");
  const Split split = std::filesystem::exists(dir / "split.tsv") ? load_split(dir / "split.tsv", g.n_nodes())
                                                                  : stratified_split(g, {}, 0);
  TrainConfig cfg;
  cfg.adv_weight = 0.1;
  cfg.neutralize.variant = Variant::NONE;
  const SeedMeans v = mean_over_seeds(g, split, {}, cfg);
  cfg.neutralize.variant = Variant::FULL;
  const SeedMeans f = mean_over_seeds(g, split, {}, cfg);
  const bool ok = v.acc >= 0.84 && v.acc <= 0.91 && 100 * f.dp <= 100 * v.dp - 1.0 && std::abs(100 * (f.acc - v.acc)) <= 2.0;
  return verdict(ok, fmt::format("vanilla acc={:.2f} dp={:.2f}; fairsin acc={:.2f} dp={:.2f}", 100 * v.acc, 100 * v.dp,
                                 100 * f.acc, 100 * f.dp));
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> size(2, 64);
  std::uniform_real_distribution<double> density(0.02, 0.5);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = size(rng);
    const Graph g = oracle::random_graph(rng, n, density(rng), 1 + t % 5, t % 2 == 1);
    const Matrix h = oracle::random_matrix(rng, n, 1 + t % 7);

    worst = std::max(worst, max_abs_diff(hetero_mean(g, h).targets, oracle::dense_hetero_mean(g, h)));
    worst = std::max(worst, max_abs_diff(normalize_adjacency(g).to_dense(), oracle::dense_normalized_adjacency(g)));

    std::vector<Triplet> trip;
    std::bernoulli_distribution keep(density(rng));
    std::normal_distribution<double> val(0.0, 1.0);
    const std::size_t cols = size(rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        if (keep(rng)) trip.push_back({i, j, val(rng)});
    const SparseMatrix a = SparseMatrix::from_triplets(n, cols, trip);
    const Matrix b = oracle::random_matrix(rng, cols, 3);
    worst = std::max(worst, max_abs_diff(spmm(a, b), oracle::naive_matmul(a.to_dense(), b)));

    Predictions p;
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < n; ++i) {
      p.y_hat.push_back(coin(rng));
      p.y_true.push_back(i < 2 ? 1 : coin(rng));
      p.sensitive.push_back(i < 2 ? static_cast<int>(i) : coin(rng));
      p.eval_idx.push_back(i);
    }
    const RunMetrics m = evaluate(p);
    const oracle::Confusion c = oracle::brute_force_metrics(p);
    for (double d : {m.acc - c.acc, m.f1 - c.f1, m.dp - c.dp, m.eo - c.eo}) worst = std::max(worst, std::abs(d));
  }
  return verdict(worst <= 1e-10, fmt::format("max abs difference {:.3g} over 200 instances", worst));
}

// Tiny graph with both groups and both classes in the training part and at
// least one heterogeneous edge.
struct Tiny {
  Graph g;
  Split split;
};

Tiny tiny_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> size(6, 12), width(2, 5);
  for (;;) {
    const std::size_t n = size(rng);
    Graph g = oracle::random_graph(rng, n, 0.4, width(rng));
    if (hetero_mean(g, Matrix(n, 1)).eligible().empty()) continue;
    Split s;
    for (std::size_t i = 0; i < n; ++i) (i < n - 4 ? s.train_idx : i < n - 2 ? s.val_idx : s.test_idx).push_back(i);
    return {std::move(g), std::move(s)};
  }
}

Outcome gradient_suite() {
  std::mt19937_64 rng(8);
  std::map<std::string, double> worst;
  auto record = [&](const std::string& name, const oracle::GradCheck& r) {
    worst[name] = std::max(worst[name], r.max_rel_error);
    if (std::getenv("FAIRSIN_GRAD_DEBUG") && r.max_rel_error > 1e-5)
      fmt::print("  {} rel={:.3g} numeric={:.6g} analytic={:.6g}\n", name, r.max_rel_error, r.worst_numeric, r.worst_analytic);
  };
  for (int t = 0; t < 20; ++t) {
    const Tiny inst = tiny_instance(rng);
    const Graph& g = inst.g;
    for (EncoderKind kind : {EncoderKind::GCN, EncoderKind::GIN, EncoderKind::SAGE}) {
      const Encoder enc({kind, 2, 4, 0.5}, g.n_features());
      ParamStore store;
      enc.init(store, rng);
      oracle::jitter(store, rng);
      const Propagation prop = make_propagation(g, kind);
      record("encoder." + to_string(kind), oracle::check_gradients(store, [&](ad::Tape& tape) {
               const auto out = enc.encode(store, prop, tape.constant(g.features()), identity_hook, {true, 5, true});
               return ad::softmax_cross_entropy(enc.classify(store, out.representation, true), g.labels(),
                                                inst.split.train_idx);
             }));
    }
    {
      const Estimator est(g.n_features(), 0);
      ParamStore store;
      est.init(store, rng);
      oracle::jitter(store, rng);
      const HeteroTarget target = hetero_mean(g, g.features());
      record("estimator", oracle::check_gradients(store, [&](ad::Tape& tape) {
               return ad::mse_masked(est.forward(store, tape.constant(g.features()), true), target.targets,
                                     target.eligible());
             }));
    }
    TrainConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(t);
    cfg.adv_weight = 0.7;
    cfg.neutralize.per_layer_delta = {0.8, 1.5};
    FairsinTrainer trainer(g, inst.split, {EncoderKind::GCN, 2, 4, 0.5}, cfg);
    oracle::jitter(trainer.encoder_params(), rng);
    oracle::jitter(trainer.estimator_params(), rng);
    oracle::jitter(trainer.discriminator_params(), rng);
    record("discriminator", oracle::check_gradients(trainer.discriminator_params(), [&](ad::Tape& tape) {
             return trainer.forward(tape, {false, false, true}, false, 0, false, true).l_d.value();
           }));
    // The per-layer estimator loss treats H^k as a constant, so the whole-network
    // check covers the adversarial term; the single-layer model below covers L_F.
    record("step1 adversarial term", oracle::check_gradients(trainer.estimator_params(), [&](ad::Tape& tape) {
             return ad::scale(*trainer.forward(tape, {false, true, false}, true, 1, false, true).l_d, -cfg.adv_weight);
           }));
    record("step2 encoder objective", oracle::check_gradients(trainer.encoder_params(), [&](ad::Tape& tape) {
             const auto fp = trainer.forward(tape, {true, false, false}, true, 1, false, true);
             return ad::sub(fp.l_t, ad::scale(*fp.l_d, cfg.adv_weight));
           }));
    TrainConfig one = cfg;
    one.neutralize.per_layer_delta = {1.2};
    FairsinTrainer single(g, inst.split, {EncoderKind::SAGE, 1, 4, 0.5}, one);
    oracle::jitter(single.estimator_params(), rng);
    record("step1 estimator objective", oracle::check_gradients(single.estimator_params(), [&](ad::Tape& tape) {
             const auto fp = single.forward(tape, {false, true, false}, true, 2, true, true);
             return ad::sub(fp.l_f[0], ad::scale(*fp.l_d, one.adv_weight));
           }));
  }
  double max_err = 0.0;
  std::string detail;
  for (const auto& [name, e] : worst) {
    max_err = std::max(max_err, e);
    detail += fmt::format(" {}={:.2g};", name, e);
  }
  return verdict(max_err < 1e-4, "max relative error:" + detail);
}

bool same_params(const ParamStore& a, const ParamStore& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [name, p] : a)
    if (!b.contains(name) || !(b.at(name).value == p.value)) return false;
  return true;
}

Outcome ablation_identities() {
  SynthConfig s;
  s.n_nodes = 400;
  s.seed = 9;
  const Graph g = generate(s);
  const Split split = stratified_split(g, {}, 2);
  bool ok = true;
  std::string detail;
  for (EncoderKind kind : {EncoderKind::GCN, EncoderKind::GIN, EncoderKind::SAGE}) {
    const EncoderConfig enc{kind, 2, 16, 0.5};
    TrainConfig base;
    base.epochs = 30;
    base.seed = 4;
    TrainConfig vanilla = base;
    vanilla.neutralize.variant = Variant::NONE;
    const TrainResult v = train(g, split, enc, vanilla);

    TrainConfig no_disc = base;
    no_disc.neutralize.delta = 0.0;
    no_disc.no_discri = true;
    const TrainResult a = train(g, split, enc, no_disc);

    TrainConfig zero_adv = base;
    zero_adv.neutralize.delta = 0.0;
    zero_adv.adv_weight = 0.0;
    const TrainResult b = train(g, split, enc, zero_adv);

    const bool same = same_params(a.best.encoder_params, v.best.encoder_params) &&
                      same_params(b.best.encoder_params, v.best.encoder_params) && a.test.acc == v.test.acc &&
                      a.test.dp == v.test.dp && b.test.dp == v.test.dp && a.best.epoch == v.best.epoch;
    ok = ok && same;
    detail += fmt::format(" {}={};", to_string(kind), same ? "identical" : "differs");
  }
  TrainConfig data;
  data.neutralize.delta = 0.0;
  for (Variant var : {Variant::G, Variant::F}) {
    data.neutralize.variant = var;
    const bool same = prepare_graph(g, data) == g;
    ok = ok && same;
    detail += fmt::format(" {}(delta=0) {};", to_string(var), same ? "unchanged" : "changed");
  }
  return verdict(ok, detail.substr(1));
}

Outcome epoch_cost() {
  const Graph g = generate(fairness_graph());
  const Split split = stratified_split(g, {}, 1);
  auto median_epoch = [&](Variant v) {
    TrainConfig cfg = fairness_training();
    cfg.epochs = 60;
    cfg.neutralize.variant = v;
    std::vector<double> e = train(g, split, {}, cfg).epoch_seconds;
    e.erase(e.begin(), e.begin() + 5);
    std::nth_element(e.begin(), e.begin() + e.size() / 2, e.end());
    return e[e.size() / 2];
  };
  const double vanilla = median_epoch(Variant::NONE);
  const double full = median_epoch(Variant::FULL);
  const double ratio = full / vanilla;
  return verdict(ratio <= 2.5, fmt::format("median epoch vanilla={:.2f} ms fairsin={:.2f} ms ratio={:.2f}",
                                           1e3 * vanilla, 1e3 * full, ratio));
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  retain_freed_memory();
  const std::vector<Criterion> criteria{
      {1, "montecarlo-gap", 10, gap_grid},
      {2, "neutralized-gap-line", 10, neutralized_gap_linearity},
      {3, "probe-ordering", 120, probe_ordering},
      {4, "fairness-gain", 300, fairness_gain},
      {5, "delta-sweep", 600, delta_sweep},
      {6, "bail-check", 900, bail_check},
      {7, "oracle-equivalence", 30, oracle_equivalence},
      {8, "gradient-suite", 120, gradient_suite},
      {9, "ablation-identities", 60, ablation_identities},
      {10, "epoch-cost", 120, epoch_cost},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0, ran = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::FAIL, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.status != Status::SKIP && secs > c.budget_seconds) {
      o.status = Status::FAIL;
      o.detail += fmt::format("; over the {:.0f} s budget", c.budget_seconds);
    }
    const char* tag = o.status == Status::PASS ? "PASS" : o.status == Status::FAIL ? "FAIL" : "SKIP";
    failures += o.status == Status::FAIL;
    ran += o.status != Status::SKIP;
    fmt::print("{} {:>2} {:<20} {:7.2f}s  {}\n", tag, c.id, c.name, secs, o.detail);
    std::fflush(stdout);
  }
  if (failures > 0) return 1;
  return ran == 0 ? kAllSkipped : 0;
}
