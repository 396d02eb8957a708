#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fairsin/encoders.hpp"
#include "fairsin/graph.hpp"
#include "fairsin/probe.hpp"
#include "fairsin/synth.hpp"
#include "fairsin/trainer.hpp"

namespace fairsin {

/// Everything one CLI invocation needs. Serialized as an INI file with the
/// sections [data] [synth] [encoder] [train] [run] [probe] [sweep].
struct RunConfig {
  // Empty nodes_path means the graph is generated from `synth`.
  std::string nodes_path;
  std::string edges_path;
  std::string split_path;  // empty: stratified split from split_ratios and split_seed
  SplitRatios split_ratios;
  std::uint64_t split_seed = 0;
  SynthConfig synth;
  EncoderConfig encoder;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string output_dir = "out";
  ProbeConfig probe;
  double probe_delta = 1.0;
  std::vector<double> sweep_deltas{0.0, 0.5, 1.0, 2.0, 5.0, 10.0};

  void validate() const;
};

// Reads an INI file on top of the defaults. Unknown sections or keys are errors.
RunConfig load_config(const std::filesystem::path& path);
// Applies "section.key=value" on top of cfg.
void apply_override(RunConfig& cfg, const std::string& assignment);
// Canonical INI text: every key, fixed order, shortest round-trip reals.
std::string dump_config(const RunConfig& cfg);
RunConfig parse_config(const std::string& ini_text);
// First 16 hex digits of SHA-256 over the canonical dump with output_dir blanked,
// so the hash identifies the experiment rather than where it was written.
std::string config_hash(const RunConfig& cfg);

}  // namespace fairsin
