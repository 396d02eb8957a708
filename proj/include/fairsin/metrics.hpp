#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace fairsin {

struct Predictions {
  std::vector<int> y_hat;
  std::vector<int> y_true;
  std::vector<int> sensitive;
  std::vector<std::size_t> eval_idx;
};

double accuracy(const Predictions& p);
// Binary F1 for class 1. Defined as 0 when there are neither predicted nor actual positives.
double f1_binary(const Predictions& p);
// |P(y_hat=1 | s=0) - P(y_hat=1 | s=1)| over eval_idx. Throws when a group is absent.
double demographic_parity(const Predictions& p);
// |P(y_hat=1 | y=1, s=0) - P(y_hat=1 | y=1, s=1)|. Throws when a group has no positives.
double equal_opportunity(const Predictions& p);

/// One run's metrics, stored as fractions in [0, 1].
struct RunMetrics {
  std::uint64_t seed = 0;
  double acc = 0.0;
  double f1 = 0.0;
  double dp = 0.0;
  double eo = 0.0;
};

RunMetrics evaluate(const Predictions& p, std::uint64_t seed = 0);

struct MetricSummary {
  double acc = 0.0;
  double f1 = 0.0;
  double dp = 0.0;
  double eo = 0.0;
};

struct MetricsReport {
  std::vector<RunMetrics> per_seed;
  MetricSummary mean;
  MetricSummary std;  // population standard deviation
};

MetricsReport aggregate_seeds(std::span<const RunMetrics> runs);

}  // namespace fairsin
