#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairsin/graph.hpp"
#include "fairsin/matrix.hpp"
#include "fairsin/neutralizer.hpp"

namespace fairsin {

struct ProbeConfig {
  double train_frac = 0.7;
  std::size_t iterations = 500;
  double lr = 0.5;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

/// Logistic regression P(s = 1 | x) on standardized columns, with the
/// disjoint probe-train / probe-test rows it was built from.
struct ProbeModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  std::uint64_t seed = 0;
};

// Full-batch gradient descent on the L2-regularized logistic loss.
ProbeModel fit_probe(const Matrix& x, std::span<const int> sensitive, const ProbeConfig& cfg);
// P(s = 1 | x) for every row.
std::vector<double> probe_probabilities(const ProbeModel& m, const Matrix& x);
// Mean probability of the true sensitive class over the model's probe-test rows.
double probe_score(const ProbeModel& m, const Matrix& x, std::span<const int> sensitive);
// Mean of -log P(true class) over probe-test rows, probabilities clamped to [1e-12, 1].
double conditional_entropy(const ProbeModel& m, const Matrix& x, std::span<const int> sensitive);

enum class ProbeGroup { RAW, RAW_MP, NEUTRAL, NEUTRAL_MP };
std::string to_string(ProbeGroup g);

struct ProbeReport {
  ProbeGroup group = ProbeGroup::RAW;
  double score = 0.0;
  std::size_t n_probe_test = 0;
  std::uint64_t seed = 0;
};

// x_i + mean_{j in N(i)} x_j (unweighted); isolated rows are returned as is.
Matrix mean_aggregate(const Graph& g, const Matrix& x);

// Probe scores for raw features, their aggregation, the neutralized features
// X + delta * est(X) and their aggregation. All four probes share one split.
std::array<ProbeReport, 4> four_group_comparison(const Graph& g, const Estimator& est,
                                                 ParamStore& params, double delta,
                                                 const ProbeConfig& cfg);

struct TheoryConfig {
  double mu_c = 1.0;
  double mu_ic = 0.0;
  double sigma = 1.0;
  double p_same = 0.8;
  double p_diff = 0.2;
  std::size_t n_samples = 100000;
  std::uint64_t seed = 0;
  std::size_t shards = 1;

  void validate() const;
};

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
};

struct GapComparison {
  McEstimate gap_before;
  McEstimate gap_after;
  McEstimate increase;  // paired per-sample gap_after - gap_before
};

// Samples the intensity gap D(s|.) - D(s_bar|.) of a node, a homogeneous and a
// heterogeneous neighbor, and composes x' = x + p_same x_same + p_diff x_diff.
GapComparison theorem1_montecarlo(const TheoryConfig& cfg);

// Gap after the neutralized update x + delta * x_diff; delta in [0, 1].
McEstimate eq6_check(const TheoryConfig& cfg, double delta);

}  // namespace fairsin
