#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairsin/graph.hpp"

namespace fairsin {

enum class LabelRule { FEATURE_THRESHOLD, SENSITIVE_CORRELATED };

std::string to_string(LabelRule r);
LabelRule parse_label_rule(const std::string& s);

struct SynthConfig {
  std::size_t n_nodes = 2000;
  std::size_t feature_dim = 8;
  double group_prior = 0.5;  // P(s = 1)
  // Group-conditional feature means. When empty, column label_feature has mean
  // 0 in both groups and every other column has mean -/+ group_shift / 2.
  std::vector<double> mu0;
  std::vector<double> mu1;
  double group_shift = 1.0;
  double feature_sigma = 1.0;
  // Neighbors drawn per node before symmetrization.
  double avg_degree = 3.0;
  double p_same = 0.8;
  LabelRule label_rule = LabelRule::SENSITIVE_CORRELATED;
  // With probability rho the label is copied from s, otherwise thresholded.
  double rho = 0.3;
  std::size_t label_feature = 0;
  double label_threshold = 0.0;
  std::uint64_t seed = 0;
  std::size_t max_resample = 100;

  void validate() const;
  std::vector<double> group_mean(int s) const;
};

// Features, sensitive values and labels come from independent streams of the
// seed, so graphs that differ only in p_same share them.
Graph generate(const SynthConfig& cfg);

std::vector<Graph> bias_sweep(const SynthConfig& base, const std::vector<double>& p_same_values);

// Fraction of undirected edges that join nodes of the same sensitive group.
double homogeneous_edge_fraction(const Graph& g);

nlohmann::json to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const nlohmann::json& j);

}  // namespace fairsin
