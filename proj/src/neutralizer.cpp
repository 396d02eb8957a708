#include "fairsin/neutralizer.hpp"

#include <cmath>

#include "fairsin/error.hpp"

namespace fairsin {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::NONE: return "none";
    case Variant::G: return "g";
    case Variant::F: return "f";
    case Variant::FULL: return "full";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "none" || s == "vanilla") return Variant::NONE;
  if (s == "g" || s == "G") return Variant::G;
  if (s == "f" || s == "F") return Variant::F;
  if (s == "full" || s == "fairsin") return Variant::FULL;
  throw ConfigError("unknown variant '" + s + "' (expected none, g, f or full)");
}

double NeutralizeConfig::delta_at(std::size_t layer) const {
  if (per_layer_delta.empty()) return delta;
  if (layer >= per_layer_delta.size()) throw ConfigError("per_layer_delta has no entry for layer " + std::to_string(layer));
  return per_layer_delta[layer];
}

void NeutralizeConfig::validate(std::size_t n_layers) const {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be finite and >= 0");
  if (!per_layer_delta.empty()) {
    if (per_layer_delta.size() != n_layers)
      throw ConfigError("per_layer_delta has " + std::to_string(per_layer_delta.size()) + " entries, expected " +
                        std::to_string(n_layers));
    for (double d : per_layer_delta)
      if (!(d >= 0.0) || !std::isfinite(d)) throw ConfigError("per-layer delta must be finite and >= 0");
  }
}

std::vector<std::size_t> HeteroTarget::eligible() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < has_target.size(); ++i)
    if (has_target[i]) idx.push_back(i);
  return idx;
}

SparseMatrix hetero_mean_operator(const Graph& g) {
  const std::size_t n = g.n_nodes();
  const auto& s = g.sensitive();
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    for (std::size_t j : g.neighbors(i)) count += s[j] != s[i] ? 1 : 0;
    if (count == 0) continue;
    const double w = 1.0 / static_cast<double>(count);
    for (std::size_t j : g.neighbors(i))
      if (s[j] != s[i]) t.push_back({i, j, w});
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

HeteroTarget hetero_mean(const Graph& g, const Matrix& h) {
  if (h.rows() != g.n_nodes()) throw ShapeError("hetero_mean: representation rows != n_nodes");
  HeteroTarget out;
  out.targets = Matrix(h.rows(), h.cols());
  out.has_target.assign(h.rows(), false);
  const auto& s = g.sensitive();
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    std::size_t count = 0;
    auto dst = out.targets.row(i);
    for (std::size_t j : g.neighbors(i)) {
      if (s[j] == s[i]) continue;
      ++count;
      const auto src = h.row(j);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
    if (count > 0) {
      out.has_target[i] = true;
      for (double& v : dst) v /= static_cast<double>(count);
    }
  }
  return out;
}

Graph reweight_edges(const Graph& g, double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("reweight_edges: delta must be >= 0");
  if (delta == 0.0) return g;
  const auto& s = g.sensitive();
  std::vector<double> w(g.n_directed_edges());
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    const auto nb = g.neighbors(i);
    for (std::size_t k = 0; k < nb.size(); ++k)
      w[g.csr_offsets()[i] + k] = s[nb[k]] != s[i] ? 1.0 + delta : 1.0;
  }
  return g.with_weights(std::move(w));
}

Estimator::Estimator(std::size_t width, std::size_t layer)
    : mlp_("phi." + std::to_string(layer), {width, width, width, width}), layer_(layer) {}

EstimatorFit fit_estimator(const Graph& g, const Matrix& h, const Estimator& est,
                           ParamStore& store, const EstimatorFitConfig& cfg) {
  if (h.cols() != est.width()) throw ShapeError("fit_estimator: width mismatch");
  const HeteroTarget target = hetero_mean(g, h);
  const auto idx = target.eligible();
  if (idx.empty()) throw ValidationError("fit_estimator: no node has a heterogeneous neighbor");
  EstimatorFit fit;
  fit.loss_history.reserve(cfg.epochs + 1);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    ad::Tape tape;
    const ad::Var loss = ad::mse_masked(est.forward(store, tape.constant(h), true), target.targets, idx);
    fit.loss_history.push_back(loss.value()(0, 0));
    store.zero_grad();
    tape.backward(loss);
    adam_step(store, cfg.adam);
  }
  ad::Tape tape;
  fit.final_loss = ad::mse_masked(est.forward(store, tape.constant(h), false), target.targets, idx).value()(0, 0);
  fit.loss_history.push_back(fit.final_loss);
  return fit;
}

Matrix neutralize(const Matrix& h, const Estimator& est, ParamStore& store, double delta) {
  if (h.cols() != est.width()) throw ShapeError("neutralize: width mismatch");
  if (delta == 0.0) return h;
  return h + est.apply(store, h) * delta;
}

ad::Var neutralize(ad::Var h, const Estimator& est, ParamStore& store, double delta,
                   bool trainable) {
  if (h.cols() != est.width()) throw ShapeError("neutralize: width mismatch");
  if (delta == 0.0) return h;
  return ad::add(h, ad::scale(est.forward(store, h, trainable), delta));
}

FairsinF preprocess_fairsin_f(const Graph& g, double delta, const EstimatorFitConfig& cfg,
                              std::uint64_t seed) {
  if (!g.has_both_groups()) throw ValidationError("FairSIN-F needs both sensitive groups");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be >= 0");
  FairsinF out{g, Estimator(g.n_features(), 0), {}, 0.0};
  std::mt19937_64 rng(nn::mix_seed(seed, 2));
  out.estimator.init(out.params, rng);
  out.final_loss = fit_estimator(g, g.features(), out.estimator, out.params, cfg).final_loss;
  if (delta != 0.0) out.graph = g.with_features(neutralize(g.features(), out.estimator, out.params, delta));
  return out;
}

}  // namespace fairsin
