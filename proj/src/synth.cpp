#include "fairsin/synth.hpp"

#include <cmath>
#include <random>
#include <unordered_set>

#include "fairsin/error.hpp"
#include "fairsin/nn.hpp"

namespace fairsin {

namespace {

constexpr std::uint64_t kGroupStream = 11;
constexpr std::uint64_t kFeatureStream = 12;
constexpr std::uint64_t kEdgeStream = 13;
constexpr std::uint64_t kLabelStream = 14;

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

std::string to_string(LabelRule r) {
  return r == LabelRule::FEATURE_THRESHOLD ? "feature_threshold" : "sensitive_correlated";
}

LabelRule parse_label_rule(const std::string& s) {
  if (s == "feature_threshold") return LabelRule::FEATURE_THRESHOLD;
  if (s == "sensitive_correlated") return LabelRule::SENSITIVE_CORRELATED;
  throw ConfigError("unknown label rule '" + s + "'");
}

void SynthConfig::validate() const {
  if (n_nodes < 2) throw ConfigError("synth: n_nodes must be >= 2");
  if (feature_dim < 1) throw ConfigError("synth: feature_dim must be >= 1");
  if (!(group_prior > 0.0 && group_prior < 1.0)) throw ConfigError("synth: group_prior must be in (0, 1)");
  if (!mu0.empty() && mu0.size() != feature_dim) throw ConfigError("synth: mu0 length != feature_dim");
  if (!mu1.empty() && mu1.size() != feature_dim) throw ConfigError("synth: mu1 length != feature_dim");
  if (mu0.empty() != mu1.empty()) throw ConfigError("synth: set both mu0 and mu1 or neither");
  if (!(feature_sigma > 0.0)) throw ConfigError("synth: feature_sigma must be > 0");
  if (!(avg_degree >= 1.0) || !std::isfinite(avg_degree)) throw ConfigError("synth: avg_degree must be >= 1");
  if (!is_probability(p_same)) throw ConfigError("synth: p_same must be in [0, 1]");
  if (!is_probability(rho)) throw ConfigError("synth: rho must be in [0, 1]");
  if (label_feature >= feature_dim) throw ConfigError("synth: label_feature out of range");
  if (max_resample < 1) throw ConfigError("synth: max_resample must be >= 1");
}

std::vector<double> SynthConfig::group_mean(int s) const {
  if (!mu0.empty()) return s ? mu1 : mu0;
  std::vector<double> mu(feature_dim, (s ? 0.5 : -0.5) * group_shift);
  mu[label_feature] = 0.0;
  return mu;
}

Graph generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_nodes;

  std::vector<int> s(n);
  {
    std::mt19937_64 rng(nn::mix_seed(cfg.seed, kGroupStream));
    std::bernoulli_distribution coin(cfg.group_prior);
    bool ok = false;
    for (std::size_t attempt = 0; attempt < cfg.max_resample && !ok; ++attempt) {
      std::size_t ones = 0;
      for (int& v : s) ones += (v = coin(rng) ? 1 : 0);
      ok = ones > 0 && ones < n;
    }
    if (!ok) throw ValidationError("synth: a sensitive group stayed empty after resampling");
  }
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(s[i])].push_back(i);

  Matrix x(n, cfg.feature_dim);
  {
    std::mt19937_64 rng(nn::mix_seed(cfg.seed, kFeatureStream));
    std::normal_distribution<double> noise(0.0, cfg.feature_sigma);
    const std::array<std::vector<double>, 2> mu{cfg.group_mean(0), cfg.group_mean(1)};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < cfg.feature_dim; ++c) x(i, c) = mu[static_cast<std::size_t>(s[i])][c] + noise(rng);
  }

  std::vector<Edge> edges;
  {
    std::mt19937_64 rng(nn::mix_seed(cfg.seed, kEdgeStream));
    std::poisson_distribution<std::size_t> degree(cfg.avg_degree);
    std::bernoulli_distribution homogeneous(cfg.p_same);
    std::unordered_set<std::size_t> chosen;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = degree(rng);
      chosen.clear();
      for (std::size_t draw = 0; draw < k; ++draw) {
        const int group = homogeneous(rng) ? s[i] : 1 - s[i];
        const auto& pool = members[static_cast<std::size_t>(group)];
        // Candidates exclude i and targets already chosen by i.
        const std::size_t available = pool.size() - (group == s[i] ? 1 : 0);
        std::size_t taken = 0;
        for (std::size_t j : chosen) taken += s[j] == group ? 1 : 0;
        if (taken >= available) continue;
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        std::size_t j;
        do j = pool[pick(rng)];
        while (j == i || chosen.contains(j));
        chosen.insert(j);
        edges.push_back({std::min(i, j), std::max(i, j), 1.0});
      }
    }
  }

  std::vector<int> y(n);
  {
    std::mt19937_64 rng(nn::mix_seed(cfg.seed, kLabelStream));
    std::bernoulli_distribution copy_s(cfg.label_rule == LabelRule::SENSITIVE_CORRELATED ? cfg.rho : 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const int threshold = x(i, cfg.label_feature) > cfg.label_threshold ? 1 : 0;
      y[i] = copy_s(rng) ? s[i] : threshold;
    }
  }
  return Graph::from_edges(n, edges, std::move(x), std::move(s), std::move(y), std::vector<bool>(n, true));
}

std::vector<Graph> bias_sweep(const SynthConfig& base, const std::vector<double>& p_same_values) {
  std::vector<Graph> out;
  out.reserve(p_same_values.size());
  for (double p : p_same_values) {
    SynthConfig cfg = base;
    cfg.p_same = p;
    out.push_back(generate(cfg));
  }
  return out;
}

double homogeneous_edge_fraction(const Graph& g) {
  const auto edges = g.undirected_edges();
  if (edges.empty()) throw ValidationError("homogeneous_edge_fraction: graph has no edges");
  std::size_t same = 0;
  for (const Edge& e : edges) same += g.sensitive()[e.src] == g.sensitive()[e.dst] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(edges.size());
}

nlohmann::json to_json(const SynthConfig& c) {
  return {{"n_nodes", c.n_nodes},
          {"feature_dim", c.feature_dim},
          {"group_prior", c.group_prior},
          {"mu0", c.mu0},
          {"mu1", c.mu1},
          {"group_shift", c.group_shift},
          {"feature_sigma", c.feature_sigma},
          {"avg_degree", c.avg_degree},
          {"p_same", c.p_same},
          {"label_rule", to_string(c.label_rule)},
          {"rho", c.rho},
          {"label_feature", c.label_feature},
          {"label_threshold", c.label_threshold},
          {"seed", c.seed},
          {"max_resample", c.max_resample}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  try {
    SynthConfig c;
    c.n_nodes = j.at("n_nodes").get<std::size_t>();
    c.feature_dim = j.at("feature_dim").get<std::size_t>();
    c.group_prior = j.at("group_prior").get<double>();
    c.mu0 = j.at("mu0").get<std::vector<double>>();
    c.mu1 = j.at("mu1").get<std::vector<double>>();
    c.group_shift = j.at("group_shift").get<double>();
    c.feature_sigma = j.at("feature_sigma").get<double>();
    c.avg_degree = j.at("avg_degree").get<double>();
    c.p_same = j.at("p_same").get<double>();
    c.label_rule = parse_label_rule(j.at("label_rule").get<std::string>());
    c.rho = j.at("rho").get<double>();
    c.label_feature = j.at("label_feature").get<std::size_t>();
    c.label_threshold = j.at("label_threshold").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.max_resample = j.at("max_resample").get<std::size_t>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth manifest: ") + e.what());
  }
}

}  // namespace fairsin
