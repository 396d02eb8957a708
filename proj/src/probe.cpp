#include "fairsin/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "fairsin/error.hpp"

namespace fairsin {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_rows(const Matrix& x, std::span<const int> s) {
  if (x.rows() != s.size()) throw ShapeError("probe: feature rows != sensitive length");
}

}  // namespace

ProbeModel fit_probe(const Matrix& x, std::span<const int> s, const ProbeConfig& cfg) {
  check_rows(x, s);
  if (!(cfg.train_frac > 0.0 && cfg.train_frac < 1.0)) throw ConfigError("probe train_frac must be in (0, 1)");
  if (!(cfg.lr > 0.0) || !(cfg.l2 >= 0.0)) throw ConfigError("probe lr must be > 0 and l2 >= 0");
  const std::size_t n = x.rows(), d = x.cols();

  ProbeModel m;
  m.seed = cfg.seed;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(cfg.train_frac * static_cast<double>(n)));
  if (n_train == 0 || n_train == n) throw ValidationError("probe: too few rows for a train/test split");
  m.train_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  m.test_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(m.train_idx.begin(), m.train_idx.end());
  std::sort(m.test_idx.begin(), m.test_idx.end());

  std::size_t ones = 0;
  for (std::size_t i : m.train_idx) ones += s[i] != 0;
  if (ones == 0 || ones == m.train_idx.size())
    throw ValidationError("probe: probe-train rows contain a single sensitive group");

  // Standardize with probe-train statistics; constant columns are only centered.
  m.center.assign(d, 0.0);
  m.scale.assign(d, 1.0);
  const double nt = static_cast<double>(n_train);
  for (std::size_t i : m.train_idx)
    for (std::size_t c = 0; c < d; ++c) m.center[c] += x(i, c);
  for (double& v : m.center) v /= nt;
  for (std::size_t c = 0; c < d; ++c) {
    double var = 0.0;
    for (std::size_t i : m.train_idx) var += (x(i, c) - m.center[c]) * (x(i, c) - m.center[c]);
    const double sd = std::sqrt(var / nt);
    if (sd > 1e-12) m.scale[c] = sd;
  }
  Matrix z(n_train, d);
  for (std::size_t r = 0; r < n_train; ++r)
    for (std::size_t c = 0; c < d; ++c) z(r, c) = (x(m.train_idx[r], c) - m.center[c]) / m.scale[c];

  m.weights.assign(d, 0.0);
  std::vector<double> gw(d);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t r = 0; r < n_train; ++r) {
      const auto row = z.row(r);
      double logit = m.bias;
      for (std::size_t c = 0; c < d; ++c) logit += m.weights[c] * row[c];
      const double err = sigmoid(logit) - static_cast<double>(s[m.train_idx[r]] != 0);
      for (std::size_t c = 0; c < d; ++c) gw[c] += err * row[c];
      gb += err;
    }
    for (std::size_t c = 0; c < d; ++c) m.weights[c] -= cfg.lr * (gw[c] / nt + cfg.l2 * m.weights[c]);
    m.bias -= cfg.lr * gb / nt;
  }
  return m;
}

std::vector<double> probe_probabilities(const ProbeModel& m, const Matrix& x) {
  if (x.cols() != m.weights.size()) throw ShapeError("probe: feature width differs from the fitted model");
  std::vector<double> p(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double logit = m.bias;
    for (std::size_t c = 0; c < x.cols(); ++c) logit += m.weights[c] * (x(i, c) - m.center[c]) / m.scale[c];
    p[i] = sigmoid(logit);
  }
  return p;
}

double probe_score(const ProbeModel& m, const Matrix& x, std::span<const int> s) {
  check_rows(x, s);
  if (m.test_idx.empty()) throw ValidationError("probe: no probe-test rows");
  const auto p = probe_probabilities(m, x);
  double total = 0.0;
  for (std::size_t i : m.test_idx) total += s[i] != 0 ? p[i] : 1.0 - p[i];
  return total / static_cast<double>(m.test_idx.size());
}

double conditional_entropy(const ProbeModel& m, const Matrix& x, std::span<const int> s) {
  check_rows(x, s);
  if (m.test_idx.empty()) throw ValidationError("probe: no probe-test rows");
  const auto p = probe_probabilities(m, x);
  double total = 0.0;
  for (std::size_t i : m.test_idx) total -= std::log(std::clamp(s[i] != 0 ? p[i] : 1.0 - p[i], 1e-12, 1.0));
  return total / static_cast<double>(m.test_idx.size());
}

std::string to_string(ProbeGroup g) {
  switch (g) {
    case ProbeGroup::RAW: return "raw";
    case ProbeGroup::RAW_MP: return "raw+mp";
    case ProbeGroup::NEUTRAL: return "neutral";
    case ProbeGroup::NEUTRAL_MP: return "neutral+mp";
  }
  return "?";
}

Matrix mean_aggregate(const Graph& g, const Matrix& x) {
  if (x.rows() != g.n_nodes()) throw ShapeError("mean_aggregate: rows != n_nodes");
  Matrix out = x;
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    const auto nb = g.neighbors(i);
    if (nb.empty()) continue;
    const double inv = 1.0 / static_cast<double>(nb.size());
    auto dst = out.row(i);
    for (std::size_t j : nb) {
      const auto src = x.row(j);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += inv * src[c];
    }
  }
  return out;
}

std::array<ProbeReport, 4> four_group_comparison(const Graph& g, const Estimator& est,
                                                 ParamStore& params, double delta,
                                                 const ProbeConfig& cfg) {
  const Matrix& raw = g.features();
  const Matrix neutral = neutralize(raw, est, params, delta);
  const std::array<std::pair<ProbeGroup, Matrix>, 4> sets{{
      {ProbeGroup::RAW, raw},
      {ProbeGroup::RAW_MP, mean_aggregate(g, raw)},
      {ProbeGroup::NEUTRAL, neutral},
      {ProbeGroup::NEUTRAL_MP, mean_aggregate(g, neutral)},
  }};
  std::array<ProbeReport, 4> out;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const auto& [group, x] = sets[k];
    const ProbeModel m = fit_probe(x, g.sensitive(), cfg);
    out[k] = {group, probe_score(m, x, g.sensitive()), m.test_idx.size(), cfg.seed};
  }
  return out;
}

void TheoryConfig::validate() const {
  if (n_samples == 0) throw ConfigError("n_samples must be positive");
  if (shards == 0) throw ConfigError("shards must be positive");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(p_same >= 0.0 && p_same <= 1.0 && p_diff >= 0.0 && p_diff <= 1.0))
    throw ConfigError("p_same and p_diff must be probabilities");
  if (std::abs(p_same + p_diff - 1.0) > 1e-12) throw ConfigError("p_same + p_diff must equal 1");
}

namespace {

struct Moments {
  double n = 0, sum_a = 0, sq_a = 0, sum_b = 0, sq_b = 0, sum_c = 0, sq_c = 0;

  void add(double a, double b, double c) {
    n += 1;
    sum_a += a, sq_a += a * a;
    sum_b += b, sq_b += b * b;
    sum_c += c, sq_c += c * c;
  }
  void merge(const Moments& o) {
    n += o.n;
    sum_a += o.sum_a, sq_a += o.sq_a;
    sum_b += o.sum_b, sq_b += o.sq_b;
    sum_c += o.sum_c, sq_c += o.sq_c;
  }
  static McEstimate estimate(double n, double sum, double sq) {
    const double mean = sum / n;
    const double var = n > 1 ? std::max(0.0, (sq - n * mean * mean) / (n - 1)) : 0.0;
    return {mean, std::sqrt(var / n)};
  }
};

// Per sample: gaps of the node itself, of a homogeneous neighbor and of a
// heterogeneous neighbor, all measured against the node's own sensitive value.
// A heterogeneous neighbor's correct class is the node's incorrect one.
template <typename F>
Moments sample_sharded(const TheoryConfig& cfg, F&& per_sample) {
  cfg.validate();
  std::vector<Moments> parts(cfg.shards);
  auto run = [&](std::size_t shard) {
    std::mt19937_64 rng(nn::mix_seed(cfg.seed, 0x7e0, shard));
    std::normal_distribution<double> correct(cfg.mu_c, cfg.sigma), incorrect(cfg.mu_ic, cfg.sigma);
    const std::size_t begin = cfg.n_samples * shard / cfg.shards;
    const std::size_t end = cfg.n_samples * (shard + 1) / cfg.shards;
    for (std::size_t i = begin; i < end; ++i) {
      const double self = correct(rng) - incorrect(rng);
      const double same = correct(rng) - incorrect(rng);
      const double diff = incorrect(rng) - correct(rng);
      per_sample(parts[shard], self, same, diff);
    }
  };
  if (cfg.shards == 1) {
    run(0);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t s = 0; s < cfg.shards; ++s) workers.emplace_back(run, s);
  }
  Moments total;
  for (const Moments& p : parts) total.merge(p);
  return total;
}

}  // namespace

GapComparison theorem1_montecarlo(const TheoryConfig& cfg) {
  const Moments m = sample_sharded(cfg, [&](Moments& acc, double self, double same, double diff) {
    const double increase = cfg.p_same * same + cfg.p_diff * diff;
    acc.add(self, self + increase, increase);
  });
  return {Moments::estimate(m.n, m.sum_a, m.sq_a), Moments::estimate(m.n, m.sum_b, m.sq_b),
          Moments::estimate(m.n, m.sum_c, m.sq_c)};
}

McEstimate eq6_check(const TheoryConfig& cfg, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("eq6_check: delta must be in [0, 1]");
  const Moments m = sample_sharded(cfg, [&](Moments& acc, double self, double, double diff) {
    acc.add(self + delta * diff, 0.0, 0.0);
  });
  return Moments::estimate(m.n, m.sum_a, m.sq_a);
}

}  // namespace fairsin
