#include "fairsin/metrics.hpp"

#include <cmath>

#include "fairsin/error.hpp"

namespace fairsin {

namespace {

void check(const Predictions& p) {
  if (p.y_hat.size() != p.y_true.size() || p.y_hat.size() != p.sensitive.size())
    throw ValidationError("predictions: arrays have different lengths");
  if (p.eval_idx.empty()) throw ValidationError("predictions: eval_idx is empty");
  for (std::size_t i : p.eval_idx)
    if (i >= p.y_hat.size()) throw ValidationError("predictions: eval index out of range");
}

}  // namespace

double accuracy(const Predictions& p) {
  check(p);
  std::size_t correct = 0;
  for (std::size_t i : p.eval_idx) correct += p.y_hat[i] == p.y_true[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(p.eval_idx.size());
}

double f1_binary(const Predictions& p) {
  check(p);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i : p.eval_idx) {
    const bool pred = p.y_hat[i] == 1, truth = p.y_true[i] == 1;
    tp += pred && truth;
    fp += pred && !truth;
    fn += !pred && truth;
  }
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double demographic_parity(const Predictions& p) {
  check(p);
  std::array<std::size_t, 2> n{}, pos{};
  for (std::size_t i : p.eval_idx) {
    const auto g = static_cast<std::size_t>(p.sensitive[i] != 0);
    ++n[g];
    pos[g] += p.y_hat[i] == 1;
  }
  if (n[0] == 0 || n[1] == 0) throw ValidationError("demographic parity: a sensitive group is absent from eval_idx");
  return std::abs(static_cast<double>(pos[0]) / static_cast<double>(n[0]) -
                  static_cast<double>(pos[1]) / static_cast<double>(n[1]));
}

double equal_opportunity(const Predictions& p) {
  check(p);
  std::array<std::size_t, 2> n{}, pos{};
  for (std::size_t i : p.eval_idx) {
    if (p.y_true[i] != 1) continue;
    const auto g = static_cast<std::size_t>(p.sensitive[i] != 0);
    ++n[g];
    pos[g] += p.y_hat[i] == 1;
  }
  if (n[0] == 0 || n[1] == 0)
    throw ValidationError("equal opportunity: a sensitive group has no positive nodes in eval_idx");
  return std::abs(static_cast<double>(pos[0]) / static_cast<double>(n[0]) -
                  static_cast<double>(pos[1]) / static_cast<double>(n[1]));
}

RunMetrics evaluate(const Predictions& p, std::uint64_t seed) {
  return {seed, accuracy(p), f1_binary(p), demographic_parity(p), equal_opportunity(p)};
}

MetricsReport aggregate_seeds(std::span<const RunMetrics> runs) {
  if (runs.empty()) throw ValidationError("aggregate_seeds: no reports");
  MetricsReport r;
  r.per_seed.assign(runs.begin(), runs.end());
  const double n = static_cast<double>(runs.size());
  auto stat = [&](double RunMetrics::*field, double& mean, double& sd) {
    double s = 0.0;
    for (const auto& m : runs) s += m.*field;
    mean = s / n;
    double v = 0.0;
    for (const auto& m : runs) v += (m.*field - mean) * (m.*field - mean);
    sd = std::sqrt(v / n);
  };
  stat(&RunMetrics::acc, r.mean.acc, r.std.acc);
  stat(&RunMetrics::f1, r.mean.f1, r.std.f1);
  stat(&RunMetrics::dp, r.mean.dp, r.std.dp);
  stat(&RunMetrics::eo, r.mean.eo, r.std.eo);
  return r;
}

}  // namespace fairsin
