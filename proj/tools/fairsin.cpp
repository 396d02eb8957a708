// Command-line harness. Every subcommand writes config.ini plus its outputs
// into run.output_dir; each output carries the config hash so `verify` can
// check that a directory is internally consistent.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime or numeric error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fairsin/config.hpp"
#include "fairsin/error.hpp"
#include "fairsin/probe.hpp"
#include "fairsin/report.hpp"
#include "fairsin/synth.hpp"
#include "fairsin/trainer.hpp"
#include "fairsin/tsv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fairsin;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  bool dump = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("-c,--config", a.config_path, "INI configuration file");
  cmd->add_option("-s,--set", a.overrides, "Override, e.g. train.delta=0.5 (repeatable)");
  cmd->add_option("-o,--out", a.output_dir, "Output directory (overrides run.output_dir)");
  cmd->add_flag("--dump-config", a.dump, "Print the effective configuration and exit");
}

RunConfig resolve(const CommonArgs& a) {
  RunConfig cfg = a.config_path.empty() ? RunConfig{} : load_config(a.config_path);
  for (const auto& o : a.overrides) apply_override(cfg, o);
  if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
  if (!out) throw Error("write failed: " + p.string());
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

fs::path prepare_output(const RunConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  write_text(dir / "config.ini", dump_config(cfg));
  return dir;
}

Graph load_graph(const RunConfig& cfg) {
  if (!cfg.nodes_path.empty()) return load_dataset(cfg.nodes_path, cfg.edges_path);
  return generate(cfg.synth);
}

Split load_or_make_split(const RunConfig& cfg, const Graph& g) {
  if (!cfg.split_path.empty()) return load_split(cfg.split_path, g.n_nodes());
  return stratified_split(g, cfg.split_ratios, cfg.split_seed);
}

std::string pct(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << 100.0 * v;
  return s.str();
}

struct SeedRuns {
  MetricsReport metrics;
  std::vector<TrainResult> results;
  double wall_seconds = 0.0;
};

SeedRuns run_seeds(const RunConfig& cfg, const Graph& g, const Split& split, const TrainConfig& base) {
  const auto t0 = std::chrono::steady_clock::now();
  SeedRuns out;
  std::vector<RunMetrics> runs;
  for (std::uint64_t seed : cfg.seeds) {
    TrainConfig tc = base;
    tc.seed = seed;
    out.results.push_back(train(g, split, cfg.encoder, tc));
    runs.push_back(out.results.back().test);
  }
  out.metrics = aggregate_seeds(runs);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void print_summary(const std::string& label, const MetricsReport& m) {
  std::cout << label << "  ACC " << pct(m.mean.acc) << " ± " << pct(m.std.acc) << "  F1 " << pct(m.mean.f1)
            << " ± " << pct(m.std.f1) << "  DP " << pct(m.mean.dp) << " ± " << pct(m.std.dp) << "  EO "
            << pct(m.mean.eo) << " ± " << pct(m.std.eo) << "\n";
}

int cmd_synth(const RunConfig& base, const std::string& manifest_path) {
  RunConfig cfg = base;
  if (!manifest_path.empty()) cfg.synth = synth_config_from_json(read_json(manifest_path).at("synth"));
  const std::string hash = config_hash(cfg);
  const fs::path dir = prepare_output(cfg);
  const Graph g = generate(cfg.synth);
  write_dataset(g, dir / "nodes.tsv", dir / "edges.tsv");
  const NeighborStats st = neighbor_stats(g);
  write_json(dir / "synth_manifest.json", {{"config_hash", hash},
                                           {"synth", to_json(cfg.synth)},
                                           {"n_nodes", g.n_nodes()},
                                           {"n_edges", g.undirected_edges().size()},
                                           {"avg_degree", st.avg_degree},
                                           {"avg_hetero_degree", st.avg_hetero_degree},
                                           {"homogeneous_fraction", homogeneous_edge_fraction(g)}});
  std::cout << "wrote " << g.n_nodes() << " nodes, " << g.undirected_edges().size() << " edges to " << dir << "\n";
  return 0;
}

int cmd_preprocess(RunConfig cfg, const std::optional<std::string>& variant, const std::optional<double>& delta) {
  if (variant) cfg.train.neutralize.variant = parse_variant(*variant);
  if (delta) cfg.train.neutralize.delta = *delta;
  const Variant v = cfg.train.neutralize.variant;
  if (v != Variant::G && v != Variant::F) throw ConfigError("preprocess needs --variant g or f");
  cfg.validate();
  const std::string hash = config_hash(cfg);
  const fs::path dir = prepare_output(cfg);
  const Graph g = load_graph(cfg);
  if (!g.has_both_groups()) throw ValidationError("preprocess: the graph has a single sensitive group");
  const Graph out = prepare_graph(g, cfg.train);
  write_dataset(out, dir / "nodes.tsv", dir / "edges.tsv");
  write_json(dir / "preprocess_manifest.json", {{"config_hash", hash},
                                                {"variant", to_string(v)},
                                                {"delta", cfg.train.neutralize.delta},
                                                {"source_nodes", cfg.nodes_path.empty() ? "synth" : cfg.nodes_path},
                                                {"source_edges", cfg.edges_path.empty() ? "synth" : cfg.edges_path}});
  std::cout << "wrote " << to_string(v) << "-preprocessed dataset to " << dir << "\n";
  return 0;
}

std::string trace_lines(std::uint64_t seed, const TrainResult& r) {
  std::ostringstream out;
  std::size_t t = 0;
  for (std::size_t e = 0; e < r.history.size(); ++e) {
    const std::string prefix = "epoch " + std::to_string(e) + " ";
    for (; t < r.trace.size() && r.trace[t].rfind(prefix, 0) == 0; ++t) out << "seed " << seed << " " << r.trace[t] << "\n";
    const LossReport& l = r.history[e];
    out << "seed " << seed << " epoch " << e << " losses L_T=" << tsv::format_real(l.l_t);
    out << " L_D=" << (l.l_d ? tsv::format_real(*l.l_d) : "absent") << " L_F=";
    if (l.l_f.empty()) out << "absent";
    for (std::size_t k = 0; k < l.l_f.size(); ++k) out << (k ? "," : "") << tsv::format_real(l.l_f[k]);
    out << " seconds=" << tsv::format_real(r.epoch_seconds[e]) << "\n";
  }
  return out.str();
}

int cmd_train(const RunConfig& cfg) {
  const std::string hash = config_hash(cfg);
  const fs::path dir = prepare_output(cfg);
  const Graph g = load_graph(cfg);
  const Split split = load_or_make_split(cfg, g);
  SeedRuns runs = run_seeds(cfg, g, split, cfg.train);

  std::string trace = "# config_hash " + hash + "\n";
  json timings = {{"config_hash", hash}, {"per_seed", json::array()}};
  for (std::size_t i = 0; i < runs.results.size(); ++i) {
    TrainResult& r = runs.results[i];
    trace += trace_lines(cfg.seeds[i], r);
    timings["per_seed"].push_back(
        {{"seed", cfg.seeds[i]}, {"epoch_seconds", r.epoch_seconds}, {"total_seconds", r.total_seconds}});
    r.best.config_hash = hash;
    save_checkpoint(r.best, dir / ("checkpoint_seed" + std::to_string(cfg.seeds[i]) + ".txt"));
  }
  write_text(dir / "trace.log", trace);
  write_json(dir / "timings.json", timings);
  const json report = make_report(hash, to_string(cfg.train.neutralize.variant), to_string(cfg.encoder.kind),
                                  runs.metrics, runs.wall_seconds);
  validate_report(report);
  write_json(dir / "report.json", report);
  print_summary(to_string(cfg.train.neutralize.variant) + "/" + to_string(cfg.encoder.kind), runs.metrics);
  return 0;
}

int cmd_probe(const RunConfig& cfg) {
  const std::string hash = config_hash(cfg);
  const fs::path dir = prepare_output(cfg);
  const Graph g = load_graph(cfg);
  FairsinF f = preprocess_fairsin_f(g, cfg.probe_delta, cfg.train.estimator_fit, cfg.probe.seed);
  const auto reports = four_group_comparison(g, f.estimator, f.params, cfg.probe_delta, cfg.probe);
  json records = json::array();
  std::string csv = "# config_hash " + hash + "\ngroup,score\n";
  for (const ProbeReport& r : reports) {
    records.push_back({{"group", to_string(r.group)}, {"score", r.score}, {"n_probe_test", r.n_probe_test}, {"seed", r.seed}});
    csv += to_string(r.group) + "," + tsv::format_real(r.score) + "\n";
    std::cout << to_string(r.group) << "\t" << r.score << "\n";
  }
  write_json(dir / "probe_report.json", {{"config_hash", hash}, {"delta", cfg.probe_delta}, {"records", records}});
  write_text(dir / "probe_bars.csv", csv);
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  const std::string hash = config_hash(cfg);
  const fs::path dir = prepare_output(cfg);
  const Graph g = load_graph(cfg);
  const Split split = load_or_make_split(cfg, g);
  json rows = json::array();
  std::string csv = "# config_hash " + hash + "\ndelta,acc,acc_std,f1,dp,dp_std,eo\n";
  for (double delta : cfg.sweep_deltas) {
    TrainConfig tc = cfg.train;
    tc.neutralize.delta = delta;
    const SeedRuns runs = run_seeds(cfg, g, split, tc);
    const MetricsReport& m = runs.metrics;
    rows.push_back({{"delta", delta},
                    {"mean", {{"acc", 100 * m.mean.acc}, {"f1", 100 * m.mean.f1}, {"dp", 100 * m.mean.dp}, {"eo", 100 * m.mean.eo}}},
                    {"std", {{"acc", 100 * m.std.acc}, {"f1", 100 * m.std.f1}, {"dp", 100 * m.std.dp}, {"eo", 100 * m.std.eo}}},
                    {"wall_seconds", runs.wall_seconds}});
    csv += tsv::format_real(delta) + "," + pct(m.mean.acc) + "," + pct(m.std.acc) + "," + pct(m.mean.f1) + "," +
           pct(m.mean.dp) + "," + pct(m.std.dp) + "," + pct(m.mean.eo) + "\n";
    print_summary("delta=" + tsv::format_real(delta), m);
  }
  write_json(dir / "sweep.json", {{"config_hash", hash},
                                  {"variant", to_string(cfg.train.neutralize.variant)},
                                  {"encoder", to_string(cfg.encoder.kind)},
                                  {"units", "percent"},
                                  {"rows", rows}});
  write_text(dir / "sweep.csv", csv);
  return 0;
}

int cmd_verify(const std::string& dir_arg) {
  const fs::path dir(dir_arg);
  const RunConfig cfg = load_config(dir / "config.ini");
  const std::string hash = config_hash(cfg);
  std::size_t checked = 0;
  auto expect = [&](const std::string& file, const std::string& found) {
    if (found != hash) throw ValidationError(file + ": config hash " + found + " != " + hash);
    std::cout << "ok  " << file << "\n";
    ++checked;
  };
  for (const char* name : {"report.json", "timings.json", "probe_report.json", "synth_manifest.json",
                           "preprocess_manifest.json", "sweep.json"}) {
    if (!fs::exists(dir / name)) continue;
    const json j = read_json(dir / name);
    if (!j.contains("config_hash") || !j["config_hash"].is_string())
      throw ValidationError(std::string(name) + ": missing config_hash");
    if (std::string(name) == "report.json") validate_report(j);
    expect(name, j["config_hash"].get<std::string>());
  }
  for (const char* name : {"trace.log", "probe_bars.csv", "sweep.csv"}) {
    if (!fs::exists(dir / name)) continue;
    std::ifstream in(dir / name);
    std::string first;
    std::getline(in, first);
    const std::string tag = "# config_hash ";
    if (first.rfind(tag, 0) != 0) throw ValidationError(std::string(name) + ": missing config hash header");
    expect(name, first.substr(tag.size()));
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("checkpoint_seed", 0) != 0) continue;
    expect(name, load_checkpoint(entry.path()).config_hash);
  }
  if (checked == 0) throw ValidationError("verify: no outputs found in " + dir.string());
  std::cout << "verified " << checked << " files against config hash " << hash << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  fairsin::retain_freed_memory();
  CLI::App app{"Fair node classification with heterogeneous-neighbor neutralization"};
  app.require_subcommand(1);

  CommonArgs synth_args, pre_args, train_args, probe_args, sweep_args;
  std::string manifest;
  std::optional<std::string> variant;
  std::optional<double> delta;
  std::string verify_dir;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic sensitively-biased graph");
  add_common(synth, synth_args);
  synth->add_option("--from-manifest", manifest, "Regenerate from a synth_manifest.json");
  auto* pre = app.add_subcommand("preprocess", "Write an edge-reweighted (g) or feature-neutralized (f) dataset");
  add_common(pre, pre_args);
  pre->add_option("--variant", variant, "g or f");
  pre->add_option("--delta", delta, "Neutralization strength");
  auto* trn = app.add_subcommand("train", "Train over all seeds and write report.json");
  add_common(trn, train_args);
  auto* prb = app.add_subcommand("probe", "Sensitive-leakage probe on raw/aggregated/neutralized features");
  add_common(prb, probe_args);
  auto* swp = app.add_subcommand("sweep", "Train over sweep.deltas and tabulate metrics");
  add_common(swp, sweep_args);
  auto* ver = app.add_subcommand("verify", "Check config hashes and report schema in an output directory");
  ver->add_option("dir", verify_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const std::vector<std::pair<CLI::App*, CommonArgs*>> with_config{
        {synth, &synth_args}, {pre, &pre_args}, {trn, &train_args}, {prb, &probe_args}, {swp, &sweep_args}};
    for (const auto& [cmd, args] : with_config) {
      if (!cmd->parsed()) continue;
      const RunConfig cfg = resolve(*args);
      if (args->dump) {
        std::cout << dump_config(cfg);
        return 0;
      }
      if (cmd == synth) return cmd_synth(cfg, manifest);
      if (cmd == pre) return cmd_preprocess(cfg, variant, delta);
      if (cmd == trn) return cmd_train(cfg);
      if (cmd == prb) return cmd_probe(cfg);
      return cmd_sweep(cfg);
    }
    return cmd_verify(verify_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
